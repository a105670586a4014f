#include "rage/evaluation/metrics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "rage/error.hpp"

namespace rage::evaluation {

using nlohmann::json;

double distinct_n(std::span<const std::string> tokens, std::size_t n) {
  if (tokens.empty()) throw Error(ErrorCode::kUndefinedMetric, "distinct-n of an empty answer");
  if (n == 0) throw Error(ErrorCode::kUndefinedMetric, "distinct-n needs n >= 1");
  if (tokens.size() < n) return 0.0;
  std::set<std::vector<std::string>> seen;
  const std::size_t total = tokens.size() - n + 1;
  for (std::size_t i = 0; i < total; ++i) seen.emplace(tokens.begin() + i, tokens.begin() + i + n);
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

namespace {

std::vector<double> mean_embedding(std::span<const std::string> tokens, const corpus::EmbeddingLookup& vectors,
                                   const char* side) {
  if (tokens.empty()) throw Error(ErrorCode::kUndefinedMetric, std::string(side) + " answer is empty");
  std::vector<double> mean(vectors.dim(), 0.0);
  bool known = false;
  for (const auto& t : tokens) {
    known = known || vectors.vocab().contains(t);
    const auto v = vectors(t);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  if (!known) throw Error(ErrorCode::kUndefinedMetric, std::string(side) + " answer has no known word");
  for (auto& x : mean) x /= static_cast<double>(tokens.size());
  return mean;
}

}  // namespace

double embedding_similarity(std::span<const std::string> generated, std::span<const std::string> reference,
                            const corpus::EmbeddingLookup& vectors) {
  const auto a = mean_embedding(generated, vectors, "generated");
  const auto b = mean_embedding(reference, vectors, "reference");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kUndefinedMetric, "mean embedding is the zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EvalReport evaluate(std::span<const AnswerRecord> answers, std::span<const Reference> references,
                    const corpus::EmbeddingLookup& vectors) {
  std::map<std::string, const AnswerRecord*, std::less<>> by_id;
  for (const auto& a : answers) by_id.emplace(a.pair_id, &a);
  EvalReport report;
  double d1 = 0.0, d2 = 0.0, es = 0.0;
  for (const auto& ref : references) {
    ItemResult item;
    item.pair_id = ref.pair_id;
    item.reference = ref.tokens;
    auto it = by_id.find(ref.pair_id);
    if (it == by_id.end()) {
      item.error = "missing answer";
    } else {
      item.answer = it->second->tokens;
      try {
        item.distinct_1 = distinct_n(item.answer, 1);
        item.distinct_2 = distinct_n(item.answer, 2);
        item.es = embedding_similarity(item.answer, item.reference, vectors);
      } catch (const Error& e) {
        item.error = std::string(error_code_name(e.code())) + ": " + e.what();
      }
    }
    if (item.error.empty()) {
      ++report.evaluated;
      d1 += *item.distinct_1;
      d2 += *item.distinct_2;
      es += *item.es;
    } else {
      ++report.failed;
    }
    report.items.push_back(std::move(item));
  }
  if (report.evaluated) {
    const auto n = static_cast<double>(report.evaluated);
    report.distinct_1 = d1 / n;
    report.distinct_2 = d2 / n;
    report.es = es / n;
  }
  return report;
}

void write_answers(const std::filesystem::path& path, std::span<const AnswerRecord> answers) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& a : answers) out << json{{"pair_id", a.pair_id}, {"answer_tokens", a.tokens}}.dump() << '\n';
}

std::vector<AnswerRecord> read_answers(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<AnswerRecord> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("pair_id").get<std::string>(), j.at("answer_tokens").get<std::vector<std::string>>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  json items = json::array();
  for (const auto& item : report.items) {
    json j = {{"pair_id", item.pair_id},
              {"answer", item.answer},
              {"reference", item.reference},
              {"distinct_1", optional_json(item.distinct_1)},
              {"distinct_2", optional_json(item.distinct_2)},
              {"es", optional_json(item.es)}};
    if (!item.error.empty()) j["error"] = item.error;
    items.push_back(std::move(j));
  }
  const json doc = {{"distinct_1", report.distinct_1}, {"distinct_2", report.distinct_2},
                    {"es", report.es},                 {"evaluated", report.evaluated},
                    {"failed", report.failed},         {"items", std::move(items)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    const auto doc = json::parse(in);
    EvalReport report;
    report.distinct_1 = doc.at("distinct_1").get<double>();
    report.distinct_2 = doc.at("distinct_2").get<double>();
    report.es = doc.at("es").get<double>();
    report.evaluated = doc.at("evaluated").get<std::size_t>();
    report.failed = doc.at("failed").get<std::size_t>();
    for (const auto& j : doc.at("items")) {
      ItemResult item;
      item.pair_id = j.at("pair_id").get<std::string>();
      item.answer = j.at("answer").get<std::vector<std::string>>();
      item.reference = j.at("reference").get<std::vector<std::string>>();
      item.distinct_1 = optional_from(j.at("distinct_1"));
      item.distinct_2 = optional_from(j.at("distinct_2"));
      item.es = optional_from(j.at("es"));
      item.error = j.value("error", std::string{});
      report.items.push_back(std::move(item));
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace rage::evaluation
