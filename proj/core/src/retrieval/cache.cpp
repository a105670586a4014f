#include "rage/retrieval/cache.hpp"

#include <fstream>

#include "json.hpp"
#include "rage/error.hpp"

namespace rage::retrieval {

using nlohmann::json;

void write_snippet_cache(const std::filesystem::path& path, const std::vector<SnippetSet>& sets) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& set : sets) {
    json snippets = json::array();
    for (const auto& s : set.snippets) {
      snippets.push_back({{"tokens", s.tokens}, {"score", s.score}, {"review_id", s.review_id}});
    }
    out << json{{"pair_id", set.pair_id}, {"snippets", std::move(snippets)}, {"excluded", set.excluded}}.dump() << '\n';
  }
}

std::vector<SnippetSet> read_snippet_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<SnippetSet> sets;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      SnippetSet set;
      set.pair_id = obj.at("pair_id").get<std::string>();
      set.excluded = obj.at("excluded").get<bool>();
      for (const auto& s : obj.at("snippets")) {
        set.snippets.push_back({s.at("tokens").get<std::vector<std::string>>(), s.at("score").get<double>(),
                                s.at("review_id").get<std::string>(), 0});
      }
      sets.push_back(std::move(set));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return sets;
}

}  // namespace rage::retrieval
