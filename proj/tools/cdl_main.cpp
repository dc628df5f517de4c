// Command-line front end. Everything goes through the C interface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdl/cdl.h"

namespace fs = std::filesystem;

namespace {

// Thrown by check() so main() can report and exit non-zero.
struct CommandFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(cdl_status status, const std::string& context) {
  if (status != CDL_OK) {
    throw CommandFailed(context + ": " + cdl_last_error());
  }
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Ratings = std::unique_ptr<cdl_ratings, Deleter<cdl_ratings, cdl_ratings_free>>;
using Content = std::unique_ptr<cdl_content, Deleter<cdl_content, cdl_content_free>>;
using Split = std::unique_ptr<cdl_split, Deleter<cdl_split, cdl_split_free>>;
using ConfigPtr = std::unique_ptr<cdl_config, Deleter<cdl_config, cdl_config_free>>;
using ModelPtr = std::unique_ptr<cdl_model, Deleter<cdl_model, cdl_model_free>>;
using Metrics = std::unique_ptr<cdl_metrics, Deleter<cdl_metrics, cdl_metrics_free>>;
using Chain = std::unique_ptr<cdl_chain, Deleter<cdl_chain, cdl_chain_free>>;
using Manifest = std::unique_ptr<cdl_manifest, Deleter<cdl_manifest, cdl_manifest_free>>;

Ratings load_ratings(const fs::path& path) {
  cdl_ratings* r = nullptr;
  check(cdl_ratings_load(path.c_str(), &r), "loading ratings");
  return Ratings(r);
}

Content load_content(const fs::path& path, const std::string& normalization) {
  cdl_content* c = nullptr;
  check(cdl_content_load(path.c_str(), normalization.c_str(), &c), "loading content");
  return Content(c);
}

ConfigPtr load_config(const fs::path& path) {
  cdl_config* c = nullptr;
  check(cdl_config_load(path.c_str(), &c), "loading configuration");
  return ConfigPtr(c);
}

std::optional<std::string> config_get(const cdl_config* config, const char* key) {
  if (!cdl_config_contains(config, key)) return std::nullopt;
  size_t needed = 0;
  check(cdl_config_get(config, key, nullptr, 0, &needed), "reading configuration");
  std::string value(needed, '\0');
  check(cdl_config_get(config, key, value.data(), value.size(), &needed),
        "reading configuration");
  value.resize(needed - 1);
  return value;
}

std::uint64_t parse_count(const std::string& text, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || text[0] == '-') {
    throw CommandFailed(std::string("malformed ") + what + " \"" + text + "\"");
  }
  return v;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    out.push_back(static_cast<std::size_t>(parse_count(field, "M value")));
  }
  if (out.empty()) throw CommandFailed("empty M grid");
  return out;
}

// Data paths in a configuration are relative to the configuration file.
fs::path config_path(const cdl_config* config, const char* key, const fs::path& config_file) {
  auto value = config_get(config, key);
  if (!value) throw CommandFailed(std::string("configuration needs \"") + key + "\"");
  fs::path p(*value);
  if (p.is_relative()) p = config_file.parent_path() / p;
  return p;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandFailed("cannot create " + dir.string() + ": " + ec.message());
}

Manifest start_manifest(const std::string& command, std::uint64_t seed) {
  cdl_manifest* m = nullptr;
  check(cdl_manifest_create(command.c_str(), seed, &m), "creating manifest");
  return Manifest(m);
}

void finish_manifest(cdl_manifest* m, const std::vector<fs::path>& inputs,
                     const std::vector<fs::path>& outputs, const fs::path& dir) {
  for (const auto& p : inputs) check(cdl_manifest_add_input(m, p.c_str()), "hashing input");
  for (const auto& p : outputs) check(cdl_manifest_add_output(m, p.c_str()), "manifest");
  check(cdl_manifest_write(m, (dir / "manifest.txt").c_str()), "writing manifest");
}

std::string joined_args(int argc, char** argv) {
  std::string out;
  for (int k = 0; k < argc; ++k) {
    if (k) out += ' ';
    out += argv[k];
  }
  return out;
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string variant = "cdl";
};

// --seed and --threads override the configuration.
void apply_overrides(cdl_config* config, const Common& common) {
  if (common.seed) {
    check(cdl_config_set(config, "seed", std::to_string(*common.seed).c_str()), "seed");
  }
  if (common.threads) {
    check(cdl_config_set(config, "threads", std::to_string(*common.threads).c_str()),
          "threads");
  }
}

std::uint64_t config_seed(const cdl_config* config) {
  auto s = config_get(config, "seed");
  return s ? parse_count(*s, "seed") : 0;
}

// ---- split ---------------------------------------------------------------

struct SplitArgs {
  std::string ratings;
  std::size_t p = 1;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
};

void run_split(const SplitArgs& a, const Common& c, const std::string& command) {
  Ratings ratings = load_ratings(a.ratings);
  for (std::size_t r = 0; r < a.repetitions; ++r) {
    const fs::path dir = a.repetitions == 1 ? fs::path(c.out)
                                            : fs::path(c.out) / ("rep" + std::to_string(r));
    make_dir(dir);
    const std::uint64_t seed = a.seed + r;
    cdl_split* raw = nullptr;
    check(cdl_split_create(ratings.get(), a.p, seed, &raw), "splitting");
    Split split(raw);
    cdl_ratings* tr = nullptr;
    cdl_ratings* te = nullptr;
    check(cdl_split_train(split.get(), &tr), "split");
    Ratings train(tr);
    check(cdl_split_test(split.get(), &te), "split");
    Ratings test(te);
    const fs::path train_path = dir / "train.tsv";
    const fs::path test_path = dir / "test.tsv";
    const fs::path manifest_path = dir / "split.txt";
    check(cdl_ratings_save(train.get(), train_path.c_str()), "writing " + train_path.string());
    check(cdl_ratings_save(test.get(), test_path.c_str()), "writing " + test_path.string());
    check(cdl_split_write_manifest(split.get(), manifest_path.c_str()),
          "writing " + manifest_path.string());
    Manifest m = start_manifest(command, seed);
    finish_manifest(m.get(), {a.ratings}, {train_path, test_path, manifest_path}, dir);
    std::cout << dir.string() << ": " << cdl_ratings_nnz(train.get()) << " train, "
              << cdl_ratings_nnz(test.get()) << " test, "
              << cdl_split_num_eval_users(split.get()) << " evaluation users\n";
  }
}

// ---- train ---------------------------------------------------------------

void run_train(const Common& c, const std::string& command) {
  const fs::path config_file(c.config);
  ConfigPtr config = load_config(config_file);
  apply_overrides(config.get(), c);
  check(cdl_config_validate(config.get()), "invalid configuration");
  const fs::path ratings_path = config_path(config.get(), "ratings", config_file);
  Ratings ratings = load_ratings(ratings_path);
  std::vector<fs::path> inputs{config_file, ratings_path};
  Content content;
  if (cdl_config_contains(config.get(), "content")) {
    const fs::path content_path = config_path(config.get(), "content", config_file);
    if (c.variant == "mf") {
      std::cerr << "warning: the mf variant ignores the content file\n";
    } else {
      const std::string norm =
          config_get(config.get(), "content_normalization").value_or("binary");
      content = load_content(content_path, norm);
      inputs.push_back(content_path);
    }
  }
  const fs::path dir(c.out);
  make_dir(dir);
  const fs::path report = dir / "report.tsv";
  cdl_model* raw = nullptr;
  check(cdl_train(c.variant.c_str(), ratings.get(), content.get(), config.get(),
                  report.c_str(), &raw),
        "training");
  ModelPtr model(raw);
  check(cdl_model_save(model.get(), dir.c_str()), "saving model");
  const fs::path train_copy = dir / "train_ratings.tsv";
  check(cdl_ratings_save(ratings.get(), train_copy.c_str()), "saving training ratings");
  const fs::path config_copy = dir / "config.txt";
  check(cdl_config_save(config.get(), config_copy.c_str()), "saving configuration");
  Manifest m = start_manifest(command, config_seed(config.get()));
  check(cdl_manifest_set_config(m.get(), config.get()), "manifest");
  finish_manifest(m.get(), inputs,
                  {dir / "model.ckpt", dir / "factors.ckpt", report, train_copy, config_copy},
                  dir);
  std::cout << "trained " << c.variant << " model: " << cdl_model_num_users(model.get())
            << " users, " << cdl_model_num_items(model.get()) << " items, rank "
            << cdl_model_rank(model.get()) << " -> " << dir.string() << "\n";
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> models;
  std::vector<std::string> tests;
  std::vector<std::string> trains;
  std::string m_grid;
};

void run_eval(const EvalArgs& a, const Common& c, const std::string& command) {
  if (a.models.size() != a.tests.size()) {
    throw CommandFailed("give one --test per --model");
  }
  if (!a.trains.empty() && a.trains.size() != a.models.size()) {
    throw CommandFailed("give one --train per --model or none");
  }
  std::vector<std::size_t> grid;
  if (!a.m_grid.empty()) grid = parse_grid(a.m_grid);
  const fs::path dir(c.out);
  make_dir(dir);
  Metrics all;
  std::vector<fs::path> inputs;
  for (std::size_t r = 0; r < a.models.size(); ++r) {
    const fs::path model_dir(a.models[r]);
    cdl_model* raw = nullptr;
    check(cdl_model_load(model_dir.c_str(), &raw), "loading model " + model_dir.string());
    ModelPtr model(raw);
    const fs::path train_path =
        a.trains.empty() ? model_dir / "train_ratings.tsv" : fs::path(a.trains[r]);
    Ratings train = load_ratings(train_path);
    Ratings test = load_ratings(a.tests[r]);
    cdl_metrics* mraw = nullptr;
    check(cdl_evaluate(model.get(), train.get(), test.get(),
                       grid.empty() ? nullptr : grid.data(), grid.size(), &mraw),
          "evaluating " + model_dir.string());
    Metrics one(mraw);
    if (cdl_metrics_users(one.get(), 0) == 0) {
      std::cerr << "warning: " << a.tests[r] << " has no user with test items\n";
    }
    if (!all) {
      all = std::move(one);
    } else {
      check(cdl_metrics_merge(all.get(), one.get()), "aggregating");
    }
    inputs.push_back(model_dir / "model.ckpt");
    inputs.push_back(model_dir / "factors.ckpt");
    inputs.push_back(train_path);
    inputs.push_back(a.tests[r]);
  }
  const fs::path out = dir / "metrics.tsv";
  check(cdl_metrics_write_tsv(all.get(), out.c_str()), "writing metrics");
  Manifest m = start_manifest(command, 0);
  finish_manifest(m.get(), inputs, {out}, dir);
  for (std::size_t k = 0; k < cdl_metrics_grid_size(all.get()); ++k) {
    std::printf("recall@%zu\t%.6f\n", cdl_metrics_grid_value(all.get(), k),
                cdl_metrics_recall_mean(all.get(), k));
  }
  std::printf("mAP@500\t%.6f\n", cdl_metrics_map_mean(all.get()));
}

// ---- predict -------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::uint32_t user = 0;
  std::size_t top = 10;
  bool all_items = false;
  std::string train;
  std::string new_item;
  std::string normalization = "binary";
};

void run_predict(const PredictArgs& a, const Common& c, const std::string& command) {
  const fs::path model_dir(a.model);
  cdl_model* raw = nullptr;
  check(cdl_model_load(model_dir.c_str(), &raw), "loading model " + model_dir.string());
  ModelPtr model(raw);
  const fs::path dir(c.out);
  make_dir(dir);
  std::vector<fs::path> inputs{model_dir / "model.ckpt", model_dir / "factors.ckpt"};
  const fs::path out = dir / "predictions.tsv";
  std::ofstream file(out);
  if (!file) throw CommandFailed("cannot write " + out.string());
  if (!a.new_item.empty()) {
    // "word<TAB>count" lines describing one unrated item.
    std::ifstream in(a.new_item);
    if (!in) throw CommandFailed("cannot open " + a.new_item);
    std::vector<std::uint32_t> words;
    std::vector<double> counts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream fields(line);
      std::uint64_t w = 0;
      double n = 0.0;
      if (!(fields >> w >> n)) {
        throw CommandFailed(a.new_item + ":" + std::to_string(lineno) +
                            ": expected \"word<TAB>count\"");
      }
      words.push_back(static_cast<std::uint32_t>(w));
      counts.push_back(n);
    }
    double score = 0.0;
    check(cdl_predict_new_item(model.get(), a.user, words.data(), counts.data(),
                               words.size(), a.normalization.c_str(), &score),
          "scoring new item");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", score);
    file << "user\tscore\n" << a.user << '\t' << buf << '\n';
    std::cout << a.user << '\t' << buf << '\n';
    inputs.emplace_back(a.new_item);
  } else {
    Ratings exclude;
    if (!a.all_items) {
      const fs::path train_path =
          a.train.empty() ? model_dir / "train_ratings.tsv" : fs::path(a.train);
      exclude = load_ratings(train_path);
      inputs.push_back(train_path);
    }
    std::vector<std::uint32_t> items(a.top);
    std::vector<double> scores(a.top);
    std::size_t count = 0;
    check(cdl_recommend(model.get(), exclude.get(), a.user, a.top, items.data(),
                        scores.data(), &count),
          "ranking");
    file << "rank\titem\tscore\n";
    char buf[64];
    for (std::size_t k = 0; k < count; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", scores[k]);
      file << k + 1 << '\t' << items[k] << '\t' << buf << '\n';
      std::cout << items[k] << '\t' << buf << '\n';
    }
  }
  file.close();
  if (!file) throw CommandFailed("failed writing " + out.string());
  Manifest m = start_manifest(command, 0);
  finish_manifest(m.get(), inputs, {out}, dir);
}

// ---- grid ----------------------------------------------------------------

void run_grid(const Common& c, const std::string& command) {
  const fs::path config_file(c.config);
  ConfigPtr config = load_config(config_file);
  if (c.seed) {
    check(cdl_config_set(config.get(), "seed", std::to_string(*c.seed).c_str()), "seed");
  }
  const fs::path ratings_path = config_path(config.get(), "ratings", config_file);
  Ratings ratings = load_ratings(ratings_path);
  std::vector<fs::path> inputs{config_file, ratings_path};
  Content content;
  if (c.variant != "mf" && cdl_config_contains(config.get(), "content")) {
    const fs::path content_path = config_path(config.get(), "content", config_file);
    content = load_content(content_path,
                           config_get(config.get(), "content_normalization").value_or("binary"));
    inputs.push_back(content_path);
  }
  const std::size_t folds = parse_count(config_get(config.get(), "folds").value_or("5"), "folds");
  const std::size_t select_m =
      parse_count(config_get(config.get(), "select_m").value_or("300"), "select_m");
  const std::size_t workers = c.threads.value_or(1);
  const fs::path dir(c.out);
  make_dir(dir);
  size_t runs = 0;
  cdl_config* best_raw = nullptr;
  double best_mean = 0.0;
  check(cdl_grid_search(config.get(), c.variant.c_str(), ratings.get(), content.get(), folds,
                        select_m, workers, dir.c_str(), &runs, &best_raw, &best_mean),
        "grid search");
  ConfigPtr best(best_raw);
  Manifest m = start_manifest(command, config_seed(config.get()));
  check(cdl_manifest_set_config(m.get(), config.get()), "manifest");
  finish_manifest(m.get(), inputs, {dir / "grid.tsv", dir / "runs.tsv", dir / "best.conf"},
                  dir);
  std::printf("%zu runs; best mean recall@%zu = %.6f (%s)\n", runs, select_m, best_mean,
              (dir / "best.conf").c_str());
}

// ---- sample --------------------------------------------------------------

struct SampleArgs {
  std::string init;
};

void run_sample(const SampleArgs& a, const Common& c, const std::string& command) {
  const fs::path config_file(c.config);
  ConfigPtr config = load_config(config_file);
  apply_overrides(config.get(), c);
  const fs::path ratings_path = config_path(config.get(), "ratings", config_file);
  const fs::path content_path = config_path(config.get(), "content", config_file);
  Ratings ratings = load_ratings(ratings_path);
  Content content = load_content(
      content_path, config_get(config.get(), "content_normalization").value_or("binary"));
  std::vector<fs::path> inputs{config_file, ratings_path, content_path};
  const std::size_t iterations =
      parse_count(config_get(config.get(), "iterations").value_or("1000"), "iterations");
  const std::size_t burn_in =
      parse_count(config_get(config.get(), "burn_in").value_or(std::to_string(iterations / 2)),
                  "burn_in");
  const std::size_t thin = parse_count(config_get(config.get(), "thin").value_or("1"), "thin");
  ModelPtr init;
  if (!a.init.empty()) {
    cdl_model* raw = nullptr;
    check(cdl_model_load(a.init.c_str(), &raw), "loading initial model");
    init.reset(raw);
    inputs.push_back(fs::path(a.init) / "model.ckpt");
    inputs.push_back(fs::path(a.init) / "factors.ckpt");
  }
  const std::uint64_t seed = config_seed(config.get());
  cdl_chain* raw = nullptr;
  check(cdl_sample(ratings.get(), content.get(), config.get(), iterations, burn_in, thin, seed,
                   init.get(), &raw),
        "sampling");
  Chain chain(raw);
  const fs::path dir(c.out);
  make_dir(dir);
  const fs::path chain_tsv = dir / "chain.tsv";
  const fs::path summary = dir / "summary.tsv";
  check(cdl_chain_write(chain.get(), chain_tsv.c_str(), summary.c_str()), "writing chain");
  Manifest m = start_manifest(command, seed);
  check(cdl_manifest_set_config(m.get(), config.get()), "manifest");
  finish_manifest(m.get(), inputs, {chain_tsv, summary}, dir);
  std::printf("kept %zu samples", cdl_chain_kept(chain.get()));
  for (std::size_t l = 0; l < cdl_chain_layers(chain.get()); ++l) {
    std::printf("; W%zu %.3f X%zu %.3f", l + 1, cdl_chain_weight_acceptance(chain.get(), l),
                l + 1, cdl_chain_hidden_acceptance(chain.get(), l));
  }
  std::printf("\n");
  if (cdl_chain_warnings(chain.get()) > 0) {
    std::cerr << "warning: see " << summary.string() << " for sampler diagnostics\n";
  }
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::size_t users = 50;
  std::size_t items = 80;
  std::size_t vocab = 40;
  std::size_t rank = 5;
  double density = 0.1;
};

void run_synth(const SynthArgs& a, const Common& c, const std::string& command) {
  const fs::path config_file(c.config);
  ConfigPtr config = load_config(config_file);
  apply_overrides(config.get(), c);
  const std::uint64_t seed = config_seed(config.get());
  cdl_ratings* rr = nullptr;
  cdl_content* cc = nullptr;
  check(cdl_synthesize(a.users, a.items, a.vocab, a.rank, config.get(), seed, a.density, &rr,
                       &cc),
        "generating data");
  Ratings ratings(rr);
  Content content(cc);
  const fs::path dir(c.out);
  make_dir(dir);
  const fs::path rp = dir / "ratings.tsv";
  const fs::path cp = dir / "content.tsv";
  check(cdl_ratings_save(ratings.get(), rp.c_str()), "writing ratings");
  check(cdl_content_save(content.get(), cp.c_str()), "writing content");
  Manifest m = start_manifest(command, seed);
  check(cdl_manifest_set_config(m.get(), config.get()), "manifest");
  finish_manifest(m.get(), {config_file}, {rp, cp}, dir);
  std::printf("%zu ratings, %zu content entries -> %s\n", cdl_ratings_nnz(ratings.get()),
              cdl_content_nnz(content.get()), dir.c_str());
}

// ---- vocab ---------------------------------------------------------------

struct VocabArgs {
  std::string content;
  std::string tokens;
  std::size_t size = 8000;
};

void run_vocab(const VocabArgs& a, const Common& c, const std::string& command) {
  const fs::path dir(c.out);
  make_dir(dir);
  const fs::path vocab = dir / "vocab.tsv";
  const fs::path content = dir / "content.tsv";
  check(cdl_vocab_select(a.content.c_str(), a.tokens.empty() ? nullptr : a.tokens.c_str(),
                         a.size, vocab.c_str(), content.c_str()),
        "selecting vocabulary");
  std::vector<fs::path> inputs{a.content};
  if (!a.tokens.empty()) inputs.emplace_back(a.tokens);
  Manifest m = start_manifest(command, 0);
  finish_manifest(m.get(), inputs, {vocab, content}, dir);
  std::printf("vocabulary -> %s\n", vocab.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  const char* level = std::getenv("CDL_LOG_LEVEL");
  if (cdl_set_log_level(level ? level : "warn") != CDL_OK) {
    std::cerr << "error: CDL_LOG_LEVEL: " << cdl_last_error() << "\n";
    return 2;
  }

  CLI::App app{"Collaborative deep learning for recommender systems"};
  app.set_version_flag("--version", std::string(cdl_version()));
  app.require_subcommand(1);

  Common common;
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Output directory")->required();
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed (overrides the configuration)");
  };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_variant = [&](CLI::App* sub) {
    sub->add_option("--variant", common.variant, "cdl, two-step, encoder-only or mf")
        ->check(CLI::IsMember({"cdl", "two-step", "encoder-only", "mf"}));
  };

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Per-user train/test split");
  split_cmd->add_option("--ratings", split.ratings, "Ratings file")->required();
  split_cmd->add_option("--P", split.p, "Training items per user (1 sparse, 10 dense)");
  split_cmd->add_option("--seed", split.seed, "Split seed");
  split_cmd->add_option("--repetitions", split.repetitions, "Independent splits (seed + r)")
      ->check(CLI::PositiveNumber);
  add_out(split_cmd);

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", common.config, "Configuration file")->required();
  add_variant(train_cmd);
  add_seed(train_cmd);
  add_threads(train_cmd);
  add_out(train_cmd);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Recall@M and mAP@500 of trained models");
  eval_cmd->add_option("--model", eval.models, "Model directory (repeat per repetition)")
      ->required();
  eval_cmd->add_option("--test", eval.tests, "Test ratings (one per --model)")->required();
  eval_cmd->add_option("--train", eval.trains,
                       "Training ratings to exclude (default: the model's copy)");
  eval_cmd->add_option("--M-grid", eval.m_grid, "Comma-separated M values (default 50..300)");
  add_out(eval_cmd);

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Top-N items or a new-item score");
  predict_cmd->add_option("--model", predict.model, "Model directory")->required();
  predict_cmd->add_option("--user", predict.user, "User id")->required();
  predict_cmd->add_option("--top", predict.top, "Number of items");
  predict_cmd->add_flag("--all-items", predict.all_items, "Do not exclude training items");
  predict_cmd->add_option("--train", predict.train, "Training ratings to exclude");
  predict_cmd->add_option("--new-item", predict.new_item,
                          "\"word<TAB>count\" file describing an unrated item");
  predict_cmd->add_option("--normalization", predict.normalization, "binary or maxnorm");
  add_out(predict_cmd);

  auto* grid_cmd = app.add_subcommand("grid", "Cross-validated grid search");
  grid_cmd->add_option("--config", common.config, "Configuration with value lists")->required();
  add_variant(grid_cmd);
  add_seed(grid_cmd);
  add_threads(grid_cmd);
  add_out(grid_cmd);

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Metropolis-within-Gibbs posterior sampling");
  sample_cmd->add_option("--config", common.config, "Configuration file")->required();
  sample_cmd->add_option("--init", sample.init, "Model directory to start from");
  add_seed(sample_cmd);
  add_out(sample_cmd);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Draw a dataset from the generative model");
  synth_cmd->add_option("--config", common.config, "Hyperparameter file")->required();
  synth_cmd->add_option("--users", synth.users, "Number of users");
  synth_cmd->add_option("--items", synth.items, "Number of items");
  synth_cmd->add_option("--vocab", synth.vocab, "Vocabulary size");
  synth_cmd->add_option("--rank", synth.rank, "Latent dimension K");
  synth_cmd->add_option("--density", synth.density, "Fraction of ones in the root input");
  add_seed(synth_cmd);
  add_out(synth_cmd);

  VocabArgs vocab;
  auto* vocab_cmd = app.add_subcommand("vocab", "Select the top words by tf-idf");
  vocab_cmd->add_option("--content", vocab.content, "Raw content triples")->required();
  vocab_cmd->add_option("--tokens", vocab.tokens, "\"token<TAB>word_id\" file");
  vocab_cmd->add_option("--size", vocab.size, "Words to keep")->check(CLI::PositiveNumber);
  add_out(vocab_cmd);

  CLI11_PARSE(app, argc, argv);

  const std::string command = joined_args(argc, argv);
  try {
    if (split_cmd->parsed()) run_split(split, common, command);
    if (train_cmd->parsed()) run_train(common, command);
    if (eval_cmd->parsed()) run_eval(eval, common, command);
    if (predict_cmd->parsed()) run_predict(predict, common, command);
    if (grid_cmd->parsed()) run_grid(common, command);
    if (sample_cmd->parsed()) run_sample(sample, common, command);
    if (synth_cmd->parsed()) run_synth(synth, common, command);
    if (vocab_cmd->parsed()) run_vocab(vocab, common, command);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
