#include "rage/corpus/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_map>

#include "json.hpp"
#include "rage/error.hpp"

namespace rage::corpus {

using nlohmann::json;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "valid" || name == "dev") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kFormat, "unknown split: " + std::string(name));
}

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [&](const QAPair& p) { return p.split == split; }));
}

std::vector<std::string> words_of(const std::vector<TaggedToken>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.word);
  return out;
}

namespace {

std::string make_id(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, index);
  return buf;
}

bool qa_length_ok(std::size_t n) { return n >= kMinQaTokens && n <= kMaxQaTokens; }

std::string join(const std::vector<TaggedToken>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].word;
  }
  return out;
}

}  // namespace

Dataset preprocess(const RawCorpus& raw, const Tagger& tagger) {
  Dataset out;
  for (const auto& r : raw.reviews) {
    auto tokens = tagger(r.text);
    if (tokens.size() < kMinReviewTokens) continue;
    out.reviews.push_back({make_id("rv", out.reviews.size()), r.product_id, std::move(tokens)});
  }

  // Keyed by product and question text; a strictly longer answer replaces the
  // kept one, so ties keep the first seen.
  std::unordered_map<std::string, std::size_t> kept;
  for (const auto& r : raw.qa) {
    auto question = tagger(r.question);
    auto answer = tagger(r.answer);
    if (!qa_length_ok(question.size()) || !qa_length_ok(answer.size())) continue;
    const std::string key = r.product_id + '\x1f' + join(question);
    if (auto it = kept.find(key); it != kept.end()) {
      auto& existing = out.pairs[it->second];
      if (answer.size() > existing.answer.size()) {
        existing.answer = std::move(answer);
        existing.split = parse_split(r.split);
      }
      continue;
    }
    kept.emplace(key, out.pairs.size());
    out.pairs.push_back({make_id("qa", out.pairs.size()), r.product_id, std::move(question), std::move(answer),
                         parse_split(r.split)});
  }
  if (out.pairs.empty()) throw Error(ErrorCode::kEmptyDataset, "no QA pairs left after preprocessing");
  return out;
}

RawCorpus to_raw(const Dataset& dataset) {
  RawCorpus raw;
  for (const auto& p : dataset.pairs) {
    raw.qa.push_back({p.product_id, join(p.question), join(p.answer), std::string(split_name(p.split))});
  }
  for (const auto& r : dataset.reviews) raw.reviews.push_back({r.product_id, join(r.tokens)});
  return raw;
}

std::size_t assign_validation(Dataset& dataset, std::size_t count, std::uint64_t seed) {
  if (count == 0 || dataset.count(Split::kValidation) > 0) return 0;
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    if (dataset.pairs[i].split == Split::kTrain) train.push_back(i);
  }
  // Always leave at least one training pair.
  count = std::min(count, train.empty() ? 0 : train.size() - 1);
  std::mt19937_64 rng(seed);
  std::shuffle(train.begin(), train.end(), rng);
  for (std::size_t i = 0; i < count; ++i) dataset.pairs[train[i]].split = Split::kValidation;
  return count;
}

namespace {

std::string require_string(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::kFormat, where + ": missing or non-string field '" + field + "'");
  }
  return it->get<std::string>();
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

json tokens_json(const std::vector<TaggedToken>& tokens, bool tags) {
  json arr = json::array();
  for (const auto& t : tokens) arr.push_back(tags ? t.pos : t.word);
  return arr;
}

std::vector<TaggedToken> tokens_from(const json& obj, const char* words_field, const char* tags_field,
                                     const std::string& where) {
  auto words = obj.find(words_field);
  auto tags = obj.find(tags_field);
  if (words == obj.end() || tags == obj.end() || !words->is_array() || !tags->is_array() ||
      words->size() != tags->size()) {
    throw Error(ErrorCode::kFormat, where + ": fields '" + words_field + "'/'" + tags_field +
                                        "' must be string arrays of equal length");
  }
  std::vector<TaggedToken> out;
  for (std::size_t i = 0; i < words->size(); ++i) {
    if (!(*words)[i].is_string() || !(*tags)[i].is_string()) {
      throw Error(ErrorCode::kFormat, where + ": token arrays must hold strings");
    }
    out.push_back({(*words)[i].get<std::string>(), (*tags)[i].get<std::string>()});
  }
  return out;
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(number);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kFormat, where + ": invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw Error(ErrorCode::kFormat, where + ": expected a JSON object");
    fn(obj, where);
  }
}

}  // namespace

RawCorpus read_corpus(const std::filesystem::path& path) {
  RawCorpus raw;
  for_each_json_line(path, [&](const json& obj, const std::string& where) {
    if (obj.contains("question")) {
      RawQA qa{require_string(obj, "product_id", where), require_string(obj, "question", where),
               require_string(obj, "answer", where), "train"};
      if (obj.contains("split")) {
        qa.split = require_string(obj, "split", where);
        try {
          parse_split(qa.split);
        } catch (const Error&) {
          throw Error(ErrorCode::kFormat, where + ": unknown split '" + qa.split + "'");
        }
      }
      raw.qa.push_back(std::move(qa));
    } else if (obj.contains("text")) {
      raw.reviews.push_back({require_string(obj, "product_id", where), require_string(obj, "text", where)});
    } else {
      throw Error(ErrorCode::kFormat, where + ": record is neither a QA pair nor a review");
    }
  });
  return raw;
}

void write_corpus(const std::filesystem::path& path, const RawCorpus& raw) {
  auto out = open_out(path);
  for (const auto& qa : raw.qa) {
    out << json{{"product_id", qa.product_id}, {"question", qa.question}, {"answer", qa.answer}, {"split", qa.split}}.dump()
        << '\n';
  }
  for (const auto& r : raw.reviews) out << json{{"product_id", r.product_id}, {"text", r.text}}.dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_out(path);
  for (const auto& p : dataset.pairs) {
    json obj = {{"type", "qa"},
                {"pair_id", p.pair_id},
                {"product_id", p.product_id},
                {"split", std::string(split_name(p.split))},
                {"question", tokens_json(p.question, false)},
                {"question_pos", tokens_json(p.question, true)},
                {"answer", tokens_json(p.answer, false)},
                {"answer_pos", tokens_json(p.answer, true)}};
    out << obj.dump() << '\n';
  }
  for (const auto& r : dataset.reviews) {
    json obj = {{"type", "review"},
                {"review_id", r.review_id},
                {"product_id", r.product_id},
                {"tokens", tokens_json(r.tokens, false)},
                {"pos", tokens_json(r.tokens, true)}};
    out << obj.dump() << '\n';
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset dataset;
  for_each_json_line(path, [&](const json& obj, const std::string& where) {
    const std::string type = require_string(obj, "type", where);
    if (type == "qa") {
      dataset.pairs.push_back({require_string(obj, "pair_id", where), require_string(obj, "product_id", where),
                               tokens_from(obj, "question", "question_pos", where),
                               tokens_from(obj, "answer", "answer_pos", where),
                               parse_split(require_string(obj, "split", where))});
    } else if (type == "review") {
      dataset.reviews.push_back({require_string(obj, "review_id", where), require_string(obj, "product_id", where),
                                 tokens_from(obj, "tokens", "pos", where)});
    } else {
      throw Error(ErrorCode::kFormat, where + ": unknown record type '" + type + "'");
    }
  });
  return dataset;
}

PosStatistics::PosStatistics(const Dataset& dataset) {
  for (const auto& p : dataset.pairs) {
    if (p.split != Split::kTrain) continue;
    add(p.question);
    add(p.answer);
  }
  for (const auto& r : dataset.reviews) add(r.tokens);
}

void PosStatistics::add(const std::vector<TaggedToken>& tokens) {
  for (const auto& t : tokens) ++counts_[t.word][t.pos];
}

std::string PosStatistics::dominating(std::string_view word) const {
  auto it = counts_.find(word);
  if (it == counts_.end()) return std::string(kUnknownTag);
  // std::map iterates tags in lexicographic order; strict > keeps the smallest on ties.
  const std::string* best = nullptr;
  std::size_t best_count = 0;
  for (const auto& [tag, count] : it->second) {
    if (count > best_count) {
      best = &tag;
      best_count = count;
    }
  }
  return *best;
}

std::string dominating_pos(std::string_view word, const Dataset& dataset) {
  return PosStatistics(dataset).dominating(word);
}

}  // namespace rage::corpus
