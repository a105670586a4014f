#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "rage/corpus/dataset.hpp"
#include "rage/corpus/embeddings.hpp"
#include "rage/corpus/synthetic.hpp"
#include "rage/corpus/vocabulary.hpp"
#include "rage/decoding/beam_search.hpp"
#include "rage/error.hpp"
#include "rage/evaluation/metrics.hpp"
#include "rage/model/example.hpp"
#include "rage/retrieval/cache.hpp"
#include "rage/retrieval/snippets.hpp"
#include "rage/training/checkpoint.hpp"
#include "rage/training/trainer.hpp"

namespace rage::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Settings {
  fs::path workdir = "rage-run";
  fs::path corpus, embeddings, dataset, vocab, table, snippets, checkpoint, log, answers, report;

  std::uint64_t seed = 1;
  int precision = 32;
  bool no_pos = false;
  bool no_review = false;

  std::size_t dim = 300;
  std::size_t encoder_layers = 4;
  std::size_t decoder_layers = 4;
  std::size_t encoder_kernel = 2;
  std::size_t decoder_kernel = 4;

  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::size_t patience = 3;
  double lr = 0.25;
  double momentum = 0.99;
  double l2 = 0.001;
  double clip = 5.0;

  std::size_t window = retrieval::kDefaultWindow;
  std::optional<double> pi;

  std::size_t beam = 5;
  std::size_t max_len = model::kMaxSequence;
  bool no_length_norm = false;

  std::size_t min_freq = 1;
  std::optional<std::size_t> validation;
  std::string split = "test";

  corpus::SynthOptions synth;

  fs::path in_workdir(const fs::path& explicit_path, const char* name) const {
    return explicit_path.empty() ? workdir / name : explicit_path;
  }
  fs::path corpus_path() const { return in_workdir(corpus, "corpus.jsonl"); }
  fs::path dataset_path() const { return in_workdir(dataset, "dataset.jsonl"); }
  fs::path vocab_path() const { return in_workdir(vocab, "vocab.json"); }
  fs::path table_path() const { return in_workdir(table, "embeddings.txt"); }
  fs::path snippets_path() const { return in_workdir(snippets, "snippets.jsonl"); }
  fs::path checkpoint_path() const { return in_workdir(checkpoint, "model.ckpt.json"); }
  fs::path log_path() const { return in_workdir(log, "train_log.jsonl"); }
  fs::path answers_path() const { return in_workdir(answers, "answers.jsonl"); }
  fs::path report_path() const { return in_workdir(report, "report.json"); }

  model::ModelConfig model_config(const corpus::Vocabulary& v) const {
    model::ModelConfig c;
    c.dim = dim;
    c.encoder_layers = encoder_layers;
    c.decoder_layers = decoder_layers;
    c.encoder_kernel = encoder_kernel;
    c.decoder_kernel = decoder_kernel;
    c.use_pos = !no_pos;
    c.use_review = !no_review;
    c.vocab_size = v.size();
    c.tag_count = v.tag_count();
    return c;
  }

  training::TrainConfig train_config(const corpus::Vocabulary& v) const {
    training::TrainConfig c;
    c.model = model_config(v);
    c.batch_size = batch_size;
    c.lr = lr;
    c.momentum = momentum;
    c.l2 = l2;
    c.clip = clip;
    c.max_epochs = epochs;
    c.patience = patience;
    c.seed = seed;
    return c;
  }

  decoding::BeamOptions beam_options() const {
    decoding::BeamOptions o;
    o.beam = beam;
    o.max_len = max_len;
    o.length_normalize = !no_length_norm;
    return o;
  }
};

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, std::string(what) + " not found: " + path.string());
}

void event(const json& j) { std::cerr << j.dump() << '\n'; }

// Artifacts written by prepare and snippets, loaded together by later stages.
struct Prepared {
  corpus::Dataset dataset;
  corpus::Vocabulary vocab;
  corpus::EmbeddingTable table;
};

Prepared load_prepared(const Settings& s) {
  require_file(s.dataset_path(), "dataset");
  require_file(s.vocab_path(), "vocabulary");
  require_file(s.table_path(), "embedding table");
  Prepared p{corpus::read_dataset(s.dataset_path()), corpus::Vocabulary::load(s.vocab_path()), {}};
  p.table = corpus::load_embeddings(s.table_path(), p.vocab, s.dim, s.seed);
  return p;
}

retrieval::SnippetCache load_cache(const Settings& s) {
  require_file(s.snippets_path(), "snippet cache");
  retrieval::SnippetCache cache;
  cache.sets = retrieval::read_snippet_cache(s.snippets_path());
  return cache;
}

void cmd_synth(const Settings& s) {
  auto options = s.synth;
  options.seed = s.seed;
  const auto synth = corpus::synth_corpus(options);
  const auto path = s.corpus_path();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  corpus::write_corpus(path, synth.raw);
  event({{"event", "synth"}, {"corpus", path.string()}, {"qa", synth.raw.qa.size()},
         {"reviews", synth.raw.reviews.size()}});
}

void cmd_prepare(const Settings& s) {
  require_file(s.corpus_path(), "corpus");
  if (!s.embeddings.empty()) require_file(s.embeddings, "embeddings");
  auto dataset = corpus::preprocess(corpus::read_corpus(s.corpus_path()), corpus::default_tagger());
  std::size_t moved = 0;
  if (dataset.count(corpus::Split::kValidation) == 0) {
    const std::size_t n = s.validation.value_or(std::min<std::size_t>(1000, dataset.count(corpus::Split::kTrain) / 10));
    moved = corpus::assign_validation(dataset, n, s.seed);
  }
  const auto vocab = corpus::Vocabulary::build(dataset, s.min_freq);
  const auto table = s.embeddings.empty() ? corpus::seeded_word_table(vocab, s.dim, s.seed)
                                          : corpus::load_embeddings(s.embeddings, vocab, s.dim, s.seed);
  fs::create_directories(s.workdir);
  corpus::write_dataset(s.dataset_path(), dataset);
  vocab.save(s.vocab_path());
  corpus::write_embeddings(s.table_path(), vocab, table);
  event({{"event", "prepare"},
         {"train", dataset.count(corpus::Split::kTrain)},
         {"validation", dataset.count(corpus::Split::kValidation)},
         {"validation_sampled", moved},
         {"test", dataset.count(corpus::Split::kTest)},
         {"reviews", dataset.reviews.size()},
         {"vocab", vocab.size()},
         {"tags", vocab.tag_count()}});
}

void cmd_snippets(const Settings& s) {
  const auto p = load_prepared(s);
  const corpus::EmbeddingLookup lookup(p.vocab, p.table);
  retrieval::RetrievalOptions options;
  options.window = s.window;
  options.pi = s.pi;
  const auto cache = retrieval::build_snippet_cache(p.dataset, lookup, options);
  retrieval::write_snippet_cache(s.snippets_path(), cache.sets);
  const auto excluded = std::count_if(cache.sets.begin(), cache.sets.end(), [](const auto& x) { return x.excluded; });
  event({{"event", "snippets"}, {"pi", cache.pi}, {"pi_source", cache.calibrated ? "calibrated" : "override"},
         {"pairs", cache.sets.size()}, {"excluded", excluded}});
}

template <typename T>
void train_at(const Settings& s) {
  const auto p = load_prepared(s);
  const auto cache = load_cache(s);
  const corpus::EmbeddingLookup lookup(p.vocab, p.table);
  const auto config = s.train_config(p.vocab);
  auto tags = model::decoder_tag_table(p.vocab, corpus::PosStatistics(p.dataset));
  auto m = model::Model<T>::create(config.model, p.table, std::move(tags), s.seed);
  model::ExampleStats train_stats, val_stats;
  const auto train_set = model::make_examples(p.dataset, corpus::Split::kTrain, p.vocab, cache, lookup, m, &train_stats);
  const auto validation =
      model::make_examples(p.dataset, corpus::Split::kValidation, p.vocab, cache, lookup, m, &val_stats);
  event({{"event", "train_start"}, {"train", train_stats.kept}, {"train_excluded", train_stats.excluded},
         {"validation", val_stats.kept}, {"parameters", m.params().scalar_count(true)}});

  std::ofstream log(s.log_path(), std::ios::binary);
  if (!log) throw Error(ErrorCode::kIo, "cannot write " + s.log_path().string());
  training::TrainOptions options;
  options.log = &log;
  options.checkpoint = s.checkpoint_path();
  options.vocab_hash = p.vocab.hash();
  const auto result = training::train<T>(m, train_set, validation, config, options);
  event({{"event", "train_done"}, {"epochs", result.history.size()}, {"best_epoch", result.best_epoch},
         {"best_val_loss", result.best_val_loss}, {"checkpoint", s.checkpoint_path().string()}});
}

template <typename T>
model::Model<T> load_model(const Settings& s, const corpus::Vocabulary& vocab, const CLI::App& app) {
  require_file(s.checkpoint_path(), "checkpoint");
  auto loaded = training::load_checkpoint<T>(s.checkpoint_path());
  if (loaded.meta.vocab_hash != vocab.hash()) {
    throw Error(ErrorCode::kConfig, "checkpoint was trained with a different vocabulary");
  }
  const auto& c = loaded.model.config();
  if ((app.count("--no-review") && c.use_review) || (app.count("--no-pos") && c.use_pos)) {
    throw Error(ErrorCode::kConfig, "ablation flags do not match the checkpoint's configuration");
  }
  return std::move(loaded.model);
}

template <typename T>
void generate_at(const Settings& s, const CLI::App& app) {
  const auto p = load_prepared(s);
  const auto cache = load_cache(s);
  const corpus::EmbeddingLookup lookup(p.vocab, p.table);
  const auto m = load_model<T>(s, p.vocab, app);
  const auto examples = model::make_examples(p.dataset, corpus::parse_split(s.split), p.vocab, cache, lookup, m);
  const auto options = s.beam_options();
  std::vector<evaluation::AnswerRecord> answers;
  for (const auto& ex : examples) {
    const auto hyps = decoding::beam_search(m, ex.question, ex.review_ptr(), options);
    answers.push_back({ex.pair_id, p.vocab.decode(hyps.front().tokens)});
  }
  evaluation::write_answers(s.answers_path(), answers);
  event({{"event", "generate"}, {"answers", answers.size()}, {"beam", s.beam}, {"file", s.answers_path().string()}});
}

void cmd_evaluate(const Settings& s) {
  const auto p = load_prepared(s);
  const auto cache = load_cache(s);
  require_file(s.answers_path(), "answer file");
  if (cache.sets.size() != p.dataset.pairs.size()) {
    throw Error(ErrorCode::kFormat, "snippet cache does not match the dataset");
  }
  const auto split = corpus::parse_split(s.split);
  std::vector<evaluation::Reference> references;
  for (std::size_t i = 0; i < p.dataset.pairs.size(); ++i) {
    const auto& pair = p.dataset.pairs[i];
    if (pair.split == split && !cache.sets[i].excluded) {
      references.push_back({pair.pair_id, corpus::words_of(pair.answer)});
    }
  }
  const corpus::EmbeddingLookup lookup(p.vocab, p.table);
  const auto answers = evaluation::read_answers(s.answers_path());
  const auto report = evaluation::evaluate(answers, references, lookup);
  evaluation::write_report(s.report_path(), report);
  event({{"event", "evaluate"}, {"distinct_1", report.distinct_1}, {"distinct_2", report.distinct_2},
         {"es", report.es}, {"evaluated", report.evaluated}, {"failed", report.failed}});
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& check : selftest()) {
    ok = ok && check.passed;
    std::cerr << (check.passed ? "PASS " : "FAIL ") << check.name;
    if (!check.detail.empty()) std::cerr << " (" << check.detail << ")";
    std::cerr << '\n';
  }
  return ok ? 0 : 1;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv) {
  Settings s;
  CLI::App app{"Review-guided answer generation pipeline", "rage"};
  app.set_config("--config", "", "INI or TOML file with option values; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--workdir", s.workdir, "Directory for all artifacts");
  app.add_option("--corpus", s.corpus, "Raw corpus JSONL (default: <workdir>/corpus.jsonl)");
  app.add_option("--embeddings", s.embeddings, "Pretrained word vectors in text format");
  app.add_option("--dataset", s.dataset, "Preprocessed dataset path");
  app.add_option("--vocab", s.vocab, "Vocabulary path");
  app.add_option("--table", s.table, "Word embedding table written by prepare");
  app.add_option("--snippets", s.snippets, "Snippet cache path");
  app.add_option("--checkpoint", s.checkpoint, "Checkpoint path");
  app.add_option("--train-log", s.log, "Per-epoch training log path");
  app.add_option("--answers", s.answers, "Answer file path");
  app.add_option("--report", s.report, "Evaluation report path");

  app.add_option("--seed", s.seed, "Seed for every stochastic step");
  app.add_option("--precision", s.precision, "Floating-point width")->check(CLI::IsMember({32, 64}));
  app.add_flag("--no-pos", s.no_pos, "Disable POS embeddings");
  app.add_flag("--no-review", s.no_review, "Disable review guidance");

  app.add_option("--dim", s.dim, "Embedding and hidden size");
  app.add_option("--encoder-layers", s.encoder_layers);
  app.add_option("--decoder-layers", s.decoder_layers);
  app.add_option("--encoder-kernel", s.encoder_kernel);
  app.add_option("--decoder-kernel", s.decoder_kernel);

  app.add_option("--batch-size", s.batch_size);
  app.add_option("--epochs", s.epochs, "Maximum number of epochs");
  app.add_option("--patience", s.patience, "Epochs without validation improvement before stopping");
  app.add_option("--lr", s.lr, "Learning rate");
  app.add_option("--momentum", s.momentum, "Nesterov momentum");
  app.add_option("--l2", s.l2, "L2 coefficient (penalty l2 * sum of squares)");
  app.add_option("--clip", s.clip, "Global gradient-norm clip, 0 to disable");

  app.add_option("--window", s.window, "Snippet window length");
  app.add_option("--pi", s.pi, "Fixed relevance threshold instead of calibration");

  app.add_option("--beam", s.beam, "Beam width")->check(CLI::PositiveNumber);
  app.add_option("--max-len", s.max_len, "Maximum answer length")->check(CLI::Range(std::size_t{1}, model::kMaxSequence));
  app.add_flag("--no-length-norm", s.no_length_norm, "Rank finished beams by raw log-probability");

  app.add_option("--min-freq", s.min_freq, "Minimum word frequency for the vocabulary");
  app.add_option("--validation", s.validation, "Validation pairs sampled from training (default 10%, at most 1000)");
  app.add_option("--split", s.split, "Split to generate for and evaluate");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--pairs", s.synth.n_pairs);
  synth->add_option("--products", s.synth.n_products);
  synth->add_option("--reviews", s.synth.n_reviews, "Reviews per product");
  synth->add_option("--test-products", s.synth.test_products);
  synth->add_option("--validation-pairs", s.synth.validation_pairs);
  auto* prepare = app.add_subcommand("prepare", "Preprocess the corpus, build vocabulary and embeddings");
  auto* snippets = app.add_subcommand("snippets", "Retrieve review snippets for every pair");
  auto* train = app.add_subcommand("train", "Train a model");
  auto* generate = app.add_subcommand("generate", "Generate answers with beam search");
  auto* evaluate = app.add_subcommand("evaluate", "Score an answer file");
  auto* self = app.add_subcommand("selftest", "Run gradient checks and module oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage_error", e.what());
    return 2;
  }

  try {
    if (*synth) cmd_synth(s);
    if (*prepare) cmd_prepare(s);
    if (*snippets) cmd_snippets(s);
    if (*train) s.precision == 64 ? train_at<double>(s) : train_at<float>(s);
    if (*generate) s.precision == 64 ? generate_at<double>(s, app) : generate_at<float>(s, app);
    if (*evaluate) cmd_evaluate(s);
    if (*self) return cmd_selftest();
    return 0;
  } catch (const Error& e) {
    report_error(std::string(error_code_name(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal_error", e.what());
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"rage"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rage::cli
