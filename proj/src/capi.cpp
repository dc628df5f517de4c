#include "cdl/cdl.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "cdl/bayes.hpp"
#include "cdl/checkpoint.hpp"
#include "cdl/config.hpp"
#include "cdl/dataio.hpp"
#include "cdl/error.hpp"
#include "cdl/eval.hpp"
#include "cdl/grid.hpp"
#include "cdl/manifest.hpp"
#include "cdl/synthetic.hpp"
#include "cdl/trainer.hpp"

struct cdl_ratings {
  cdl::RatingsMatrix value;
};
struct cdl_content {
  cdl::ContentMatrix value;
};
struct cdl_split {
  cdl::Split value;
};
struct cdl_config {
  cdl::Config value;
};
struct cdl_model {
  cdl::Model value;
};
struct cdl_metrics {
  cdl::MetricReport value;
};
struct cdl_chain {
  cdl::ChainSummary value;
};
struct cdl_manifest {
  cdl::RunManifest value;
};

namespace {

thread_local std::string g_last_error;

cdl_status status_of(cdl::ErrorKind kind) {
  switch (kind) {
    case cdl::ErrorKind::kParse: return CDL_ERR_PARSE;
    case cdl::ErrorKind::kValidation: return CDL_ERR_VALIDATION;
    case cdl::ErrorKind::kArgument: return CDL_ERR_ARGUMENT;
    case cdl::ErrorKind::kShape: return CDL_ERR_SHAPE;
    case cdl::ErrorKind::kNumeric: return CDL_ERR_NUMERIC;
    case cdl::ErrorKind::kIo: return CDL_ERR_IO;
    case cdl::ErrorKind::kTraining: return CDL_ERR_TRAINING;
  }
  return CDL_ERR_INTERNAL;
}

template <typename Fn>
cdl_status guard(Fn&& fn) {
  try {
    fn();
    return CDL_OK;
  } catch (const cdl::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CDL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CDL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CDL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) {
    cdl::fail(cdl::ErrorKind::kArgument, std::string(name) + " must not be NULL");
  }
}

cdl::Normalization normalization_of(const char* name) {
  return name == nullptr ? cdl::Normalization::kBinaryPresence
                         : cdl::parse_normalization(name);
}

std::vector<std::size_t> grid_of(const size_t* m_grid, size_t m_count) {
  if (m_grid == nullptr || m_count == 0) return cdl::default_m_grid();
  std::vector<std::size_t> grid(m_grid, m_grid + m_count);
  for (std::size_t m : grid) {
    if (m == 0) cdl::fail(cdl::ErrorKind::kArgument, "M values must be positive");
  }
  return grid;
}

void check_user(const cdl::Model& model, uint32_t user) {
  if (user >= static_cast<std::size_t>(model.factors.U.rows())) {
    cdl::fail(cdl::ErrorKind::kArgument,
              "unknown user id " + std::to_string(user) + " (model has " +
                  std::to_string(model.factors.U.rows()) + " users)");
  }
}

}  // namespace

extern "C" {

const char* cdl_last_error(void) { return g_last_error.c_str(); }

const char* cdl_status_string(cdl_status status) {
  switch (status) {
    case CDL_OK: return "ok";
    case CDL_ERR_PARSE: return "parse error";
    case CDL_ERR_VALIDATION: return "validation error";
    case CDL_ERR_ARGUMENT: return "argument error";
    case CDL_ERR_SHAPE: return "shape error";
    case CDL_ERR_NUMERIC: return "numeric error";
    case CDL_ERR_IO: return "i/o error";
    case CDL_ERR_TRAINING: return "training error";
    case CDL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cdl_version(void) { return cdl::version_string(); }

cdl_status cdl_set_log_level(const char* level) {
  return guard([&] {
    need(level, "level");
    const std::string name(level);
    if (name == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (name == "warn") {
      spdlog::set_level(spdlog::level::warn);
    } else if (name == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (name == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      cdl::fail(cdl::ErrorKind::kArgument,
                "log level must be error, warn, info or debug, not \"" + name + "\"");
    }
  });
}

/* ---- ratings ---------------------------------------------------------- */

cdl_status cdl_ratings_load(const char* path, cdl_ratings** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new cdl_ratings{cdl::load_ratings(path)};
  });
}

cdl_status cdl_ratings_create(size_t num_users, size_t num_items,
                              const uint32_t* users, const uint32_t* items,
                              size_t count, cdl_ratings** out) {
  return guard([&] {
    need(out, "out");
    if (count > 0) {
      need(users, "users");
      need(items, "items");
    }
    std::vector<cdl::Rating> entries;
    entries.reserve(count);
    for (size_t k = 0; k < count; ++k) entries.push_back({users[k], items[k]});
    *out = new cdl_ratings{cdl::RatingsMatrix(num_users, num_items, std::move(entries))};
  });
}

cdl_status cdl_ratings_save(const cdl_ratings* ratings, const char* path) {
  return guard([&] {
    need(ratings, "ratings");
    need(path, "path");
    cdl::save_ratings(ratings->value, path);
  });
}

size_t cdl_ratings_num_users(const cdl_ratings* r) { return r ? r->value.num_users() : 0; }
size_t cdl_ratings_num_items(const cdl_ratings* r) { return r ? r->value.num_items() : 0; }
size_t cdl_ratings_nnz(const cdl_ratings* r) { return r ? r->value.nnz() : 0; }

int cdl_ratings_contains(const cdl_ratings* r, uint32_t user, uint32_t item) {
  if (r == nullptr || user >= r->value.num_users() || item >= r->value.num_items()) {
    return 0;
  }
  return r->value.contains(user, item) ? 1 : 0;
}

void cdl_ratings_free(cdl_ratings* ratings) { delete ratings; }

/* ---- content ---------------------------------------------------------- */

cdl_status cdl_content_load(const char* path, const char* normalization,
                            cdl_content** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new cdl_content{cdl::load_content(path, normalization_of(normalization))};
  });
}

cdl_status cdl_content_create(size_t num_items, size_t vocab_size,
                              const uint32_t* items, const uint32_t* words,
                              const double* counts, size_t count,
                              const char* normalization, cdl_content** out) {
  return guard([&] {
    need(out, "out");
    if (count > 0) {
      need(items, "items");
      need(words, "words");
      need(counts, "counts");
    }
    std::vector<cdl::ContentTriple> triples;
    triples.reserve(count);
    for (size_t k = 0; k < count; ++k) triples.push_back({items[k], words[k], counts[k]});
    *out = new cdl_content{cdl::normalize_content(num_items, vocab_size, triples,
                                                  normalization_of(normalization))};
  });
}

cdl_status cdl_content_save(const cdl_content* content, const char* path) {
  return guard([&] {
    need(content, "content");
    need(path, "path");
    cdl::save_content(content->value, path);
  });
}

size_t cdl_content_num_items(const cdl_content* c) { return c ? c->value.num_items() : 0; }
size_t cdl_content_vocab_size(const cdl_content* c) { return c ? c->value.vocab_size() : 0; }
size_t cdl_content_nnz(const cdl_content* c) { return c ? c->value.nnz() : 0; }
void cdl_content_free(cdl_content* content) { delete content; }

cdl_status cdl_vocab_select(const char* content_path, const char* tokens_path,
                            size_t size, const char* vocab_out,
                            const char* content_out) {
  return guard([&] {
    need(content_path, "content_path");
    need(vocab_out, "vocab_out");
    need(content_out, "content_out");
    if (size == 0) cdl::fail(cdl::ErrorKind::kArgument, "vocabulary size must be positive");
    cdl::ContentFile file = cdl::read_content_file(content_path);
    std::vector<std::string> tokens;
    if (tokens_path != nullptr) {
      tokens = cdl::load_vocabulary(tokens_path);
      if (tokens.size() < file.vocab_size) tokens.resize(file.vocab_size);
    } else {
      for (std::size_t w = 0; w < file.vocab_size; ++w) tokens.push_back("w" + std::to_string(w));
    }
    for (std::size_t w = 0; w < tokens.size(); ++w) {
      if (tokens[w].empty()) tokens[w] = "w" + std::to_string(w);
    }
    cdl::Vocabulary vocab = cdl::select_vocabulary(file.triples, tokens, file.num_items, size);
    auto triples = cdl::restrict_to_vocabulary(file.triples, vocab);
    cdl::save_vocabulary(vocab, vocab_out);
    // Raw counts are kept so either normalization can be applied on load.
    std::FILE* f = std::fopen(content_out, "w");
    if (f == nullptr) cdl::fail(cdl::ErrorKind::kIo, std::string("cannot write ") + content_out);
    std::fprintf(f, "# dims %zu %zu\n", file.num_items, vocab.selected_size);
    for (const auto& t : triples) {
      std::fprintf(f, "%u\t%u\t%.17g\n", t.item, t.word, t.count);
    }
    if (std::fclose(f) != 0) {
      cdl::fail(cdl::ErrorKind::kIo, std::string("failed writing ") + content_out);
    }
  });
}

/* ---- splits ----------------------------------------------------------- */

cdl_status cdl_split_create(const cdl_ratings* ratings, size_t train_per_user,
                            uint64_t seed, cdl_split** out) {
  return guard([&] {
    need(ratings, "ratings");
    need(out, "out");
    *out = new cdl_split{cdl::split_ratings(ratings->value, train_per_user, seed)};
  });
}

cdl_status cdl_split_read_manifest(const char* path, const cdl_ratings* ratings,
                                   cdl_split** out) {
  return guard([&] {
    need(path, "path");
    need(ratings, "ratings");
    need(out, "out");
    *out = new cdl_split{cdl::read_split_manifest(path, ratings->value)};
  });
}

cdl_status cdl_split_write_manifest(const cdl_split* split, const char* path) {
  return guard([&] {
    need(split, "split");
    need(path, "path");
    cdl::write_split_manifest(split->value, path);
  });
}

cdl_status cdl_split_train(const cdl_split* split, cdl_ratings** out) {
  return guard([&] {
    need(split, "split");
    need(out, "out");
    *out = new cdl_ratings{split->value.train};
  });
}

cdl_status cdl_split_test(const cdl_split* split, cdl_ratings** out) {
  return guard([&] {
    need(split, "split");
    need(out, "out");
    *out = new cdl_ratings{split->value.test};
  });
}

size_t cdl_split_num_eval_users(const cdl_split* s) { return s ? s->value.eval_users.size() : 0; }
void cdl_split_free(cdl_split* split) { delete split; }

/* ---- configuration ---------------------------------------------------- */

cdl_status cdl_config_create(cdl_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new cdl_config{};
  });
}

cdl_status cdl_config_load(const char* path, cdl_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new cdl_config{cdl::Config::load(path)};
  });
}

cdl_status cdl_config_parse(const char* text, cdl_config** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new cdl_config{cdl::Config::parse(text, "<string>")};
  });
}

cdl_status cdl_config_set(cdl_config* config, const char* key, const char* value) {
  return guard([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    if (*key == '\0') cdl::fail(cdl::ErrorKind::kArgument, "empty key");
    config->value.set(key, value);
  });
}

cdl_status cdl_config_get(const cdl_config* config, const char* key, char* buf,
                          size_t capacity, size_t* needed) {
  return guard([&] {
    need(config, "config");
    need(key, "key");
    auto v = config->value.get(key);
    if (!v) cdl::fail(cdl::ErrorKind::kArgument, std::string("no key \"") + key + "\"");
    if (needed) *needed = v->size() + 1;
    if (buf != nullptr && capacity > v->size()) {
      std::memcpy(buf, v->c_str(), v->size() + 1);
    } else if (buf != nullptr) {
      cdl::fail(cdl::ErrorKind::kArgument, "buffer too small");
    }
  });
}

int cdl_config_contains(const cdl_config* config, const char* key) {
  return config != nullptr && key != nullptr && config->value.contains(key) ? 1 : 0;
}

cdl_status cdl_config_save(const cdl_config* config, const char* path) {
  return guard([&] {
    need(config, "config");
    need(path, "path");
    config->value.save(path);
  });
}

cdl_status cdl_config_validate(const cdl_config* config) {
  return guard([&] {
    need(config, "config");
    (void)cdl::hyper_from_config(config->value);
  });
}

void cdl_config_free(cdl_config* config) { delete config; }

/* ---- training and models ---------------------------------------------- */

cdl_status cdl_train(const char* variant, const cdl_ratings* ratings,
                     const cdl_content* content, const cdl_config* config,
                     const char* report_path, cdl_model** out) {
  return guard([&] {
    need(variant, "variant");
    need(ratings, "ratings");
    need(config, "config");
    need(out, "out");
    const cdl::Variant v = cdl::parse_variant(variant);
    const cdl::HyperParams hyper = cdl::hyper_from_config(config->value);
    const cdl::ContentMatrix* c = content ? &content->value : nullptr;
    if (v == cdl::Variant::kMfBaseline && c != nullptr) {
      spdlog::warn("the mf variant ignores the content matrix");
      c = nullptr;
    }
    if (v != cdl::Variant::kMfBaseline && c == nullptr) {
      cdl::fail(cdl::ErrorKind::kArgument,
                std::string("variant ") + variant + " needs content");
    }
    cdl::FitOptions options;
    std::unique_ptr<cdl::ReportWriter> writer;
    if (report_path != nullptr) {
      writer = std::make_unique<cdl::ReportWriter>(report_path);
      options.on_sweep = [&](const cdl::SweepRecord& r) { writer->append(r); };
    }
    cdl::FitResult result = cdl::train(v, ratings->value, c, hyper, options);
    *out = new cdl_model{std::move(result.model)};
  });
}

cdl_status cdl_model_save(const cdl_model* model, const char* dir) {
  return guard([&] {
    need(model, "model");
    need(dir, "dir");
    cdl::save_model(model->value, dir);
  });
}

cdl_status cdl_model_load(const char* dir, cdl_model** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new cdl_model{cdl::load_model(dir)};
  });
}

size_t cdl_model_num_users(const cdl_model* m) {
  return m ? static_cast<size_t>(m->value.factors.U.rows()) : 0;
}
size_t cdl_model_num_items(const cdl_model* m) {
  return m ? static_cast<size_t>(m->value.factors.V.rows()) : 0;
}
size_t cdl_model_rank(const cdl_model* m) { return m ? m->value.factors.rank() : 0; }
const char* cdl_model_variant(const cdl_model* m) {
  return m ? cdl::to_string(m->value.variant) : "";
}

cdl_status cdl_model_factors(const cdl_model* model, double* U, double* V) {
  return guard([&] {
    need(model, "model");
    const auto& f = model->value.factors;
    auto copy = [](const Eigen::MatrixXd& m, double* dst) {
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          dst, m.rows(), m.cols()) = m;
    };
    if (U) copy(f.U, U);
    if (V) copy(f.V, V);
  });
}

cdl_status cdl_model_config(const cdl_model* model, cdl_config** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = new cdl_config{cdl::config_from_hyper(model->value.hyper)};
  });
}

void cdl_model_free(cdl_model* model) { delete model; }

/* ---- prediction ------------------------------------------------------- */

cdl_status cdl_predict(const cdl_model* model, uint32_t user, uint32_t item,
                       double* score) {
  return guard([&] {
    need(model, "model");
    need(score, "score");
    const auto& f = model->value.factors;
    check_user(model->value, user);
    if (item >= static_cast<std::size_t>(f.V.rows())) {
      cdl::fail(cdl::ErrorKind::kArgument, "unknown item id " + std::to_string(item));
    }
    *score = cdl::predict(f.U.row(user), f.V.row(item));
  });
}

cdl_status cdl_recommend(const cdl_model* model, const cdl_ratings* exclude,
                         uint32_t user, size_t n, uint32_t* items,
                         double* scores, size_t* count) {
  return guard([&] {
    need(model, "model");
    need(count, "count");
    if (n > 0) need(items, "items");
    const auto& f = model->value.factors;
    check_user(model->value, user);
    cdl::RatingsMatrix empty(static_cast<std::size_t>(f.U.rows()),
                             static_cast<std::size_t>(f.V.rows()), {});
    const cdl::RatingsMatrix* train = &empty;
    cdl::RatingsMatrix resized;
    if (exclude != nullptr) {
      if (exclude->value.num_users() > static_cast<std::size_t>(f.U.rows()) ||
          exclude->value.num_items() > static_cast<std::size_t>(f.V.rows())) {
        cdl::fail(cdl::ErrorKind::kShape, "exclusion ratings larger than the model");
      }
      resized = exclude->value.resized(f.U.rows(), f.V.rows());
      train = &resized;
    }
    const cdl::Index users[] = {user};
    cdl::RankedList ranked = cdl::rank(f.U, f.V, *train, cdl::CandidatePolicy::kExcludeTrain,
                                       n, users);
    const auto& list = ranked.items[user];
    *count = std::min(n, list.size());
    for (size_t k = 0; k < *count; ++k) {
      items[k] = list[k];
      if (scores) scores[k] = cdl::predict(f.U.row(user), f.V.row(list[k]));
    }
  });
}

cdl_status cdl_predict_new_item(const cdl_model* model, uint32_t user,
                                const uint32_t* words, const double* counts,
                                size_t count, const char* normalization,
                                double* score) {
  return guard([&] {
    need(model, "model");
    need(score, "score");
    if (count > 0) {
      need(words, "words");
      need(counts, "counts");
    }
    const cdl::Model& m = model->value;
    check_user(m, user);
    if (!m.has_network()) {
      // Without a network the item prior mean is zero.
      *score = cdl::predict_new_item(m.factors.U.row(user),
                                     Eigen::RowVectorXd::Zero(m.factors.rank()));
      return;
    }
    std::vector<cdl::ContentTriple> triples;
    for (size_t k = 0; k < count; ++k) triples.push_back({0, words[k], counts[k]});
    cdl::ContentMatrix row = cdl::normalize_content(1, m.network.input_width(), triples,
                                                    normalization_of(normalization));
    const Eigen::RowVectorXd x = Eigen::RowVectorXd(Eigen::MatrixXd(row.values()).row(0));
    *score = cdl::predict_new_item(m.factors.U.row(user), cdl::encode(m.network, x));
  });
}

/* ---- evaluation ------------------------------------------------------- */

cdl_status cdl_evaluate(const cdl_model* model, const cdl_ratings* train,
                        const cdl_ratings* test, const size_t* m_grid,
                        size_t m_count, cdl_metrics** out) {
  return guard([&] {
    need(model, "model");
    need(train, "train");
    need(test, "test");
    need(out, "out");
    const auto& f = model->value.factors;
    const std::size_t users = static_cast<std::size_t>(f.U.rows());
    const std::size_t items = static_cast<std::size_t>(f.V.rows());
    for (const cdl::RatingsMatrix* r : {&train->value, &test->value}) {
      if (r->num_users() > users || r->num_items() > items) {
        cdl::fail(cdl::ErrorKind::kShape,
                  "ratings are " + std::to_string(r->num_users()) + " x " +
                      std::to_string(r->num_items()) + " but the model covers " +
                      std::to_string(users) + " users and " + std::to_string(items) +
                      " items");
      }
    }
    const auto grid = grid_of(m_grid, m_count);
    const std::size_t depth = std::max(*std::max_element(grid.begin(), grid.end()),
                                       cdl::kMapCutoff);
    std::vector<cdl::Index> ranked_users;
    for (cdl::Index u = 0; u < test->value.num_users(); ++u) {
      if (!test->value.items_of(u).empty()) ranked_users.push_back(u);
    }
    if (ranked_users.empty()) spdlog::warn("test set is empty; no user is evaluated");
    const cdl::RatingsMatrix tr = train->value.resized(users, items);
    cdl::RankedList ranked = cdl::rank(f.U, f.V, tr, cdl::CandidatePolicy::kExcludeTrain,
                                       depth, ranked_users,
                                       model->value.hyper.threads);
    cdl::RepetitionMetrics rep = cdl::evaluate_ranking(ranked, test->value, grid);
    *out = new cdl_metrics{cdl::aggregate(grid, {rep})};
  });
}

cdl_status cdl_metrics_merge(cdl_metrics* into, const cdl_metrics* other) {
  return guard([&] {
    need(into, "into");
    need(other, "other");
    if (into->value.m_grid != other->value.m_grid) {
      cdl::fail(cdl::ErrorKind::kShape, "metric reports use different M grids");
    }
    auto reps = into->value.repetitions;
    reps.insert(reps.end(), other->value.repetitions.begin(),
                other->value.repetitions.end());
    into->value = cdl::aggregate(into->value.m_grid, std::move(reps));
  });
}

size_t cdl_metrics_grid_size(const cdl_metrics* m) { return m ? m->value.m_grid.size() : 0; }
size_t cdl_metrics_grid_value(const cdl_metrics* m, size_t k) {
  return m && k < m->value.m_grid.size() ? m->value.m_grid[k] : 0;
}
size_t cdl_metrics_repetitions(const cdl_metrics* m) {
  return m ? m->value.repetitions.size() : 0;
}
double cdl_metrics_recall(const cdl_metrics* m, size_t rep, size_t k) {
  if (!m || rep >= m->value.repetitions.size() ||
      k >= m->value.repetitions[rep].recall.size()) {
    return 0.0;
  }
  return m->value.repetitions[rep].recall[k];
}
double cdl_metrics_map(const cdl_metrics* m, size_t rep) {
  return m && rep < m->value.repetitions.size() ? m->value.repetitions[rep].map : 0.0;
}
size_t cdl_metrics_users(const cdl_metrics* m, size_t rep) {
  return m && rep < m->value.repetitions.size()
             ? m->value.repetitions[rep].evaluated_users
             : 0;
}
double cdl_metrics_recall_mean(const cdl_metrics* m, size_t k) {
  return m && k < m->value.recall_mean.size() ? m->value.recall_mean[k] : 0.0;
}
double cdl_metrics_recall_std(const cdl_metrics* m, size_t k) {
  return m && k < m->value.recall_std.size() ? m->value.recall_std[k] : 0.0;
}
double cdl_metrics_map_mean(const cdl_metrics* m) { return m ? m->value.map_mean : 0.0; }
double cdl_metrics_map_std(const cdl_metrics* m) { return m ? m->value.map_std : 0.0; }

cdl_status cdl_metrics_write_tsv(const cdl_metrics* metrics, const char* path) {
  return guard([&] {
    need(metrics, "metrics");
    need(path, "path");
    metrics->value.write_tsv(path);
  });
}

void cdl_metrics_free(cdl_metrics* metrics) { delete metrics; }

/* ---- grid search ------------------------------------------------------ */

cdl_status cdl_grid_search(const cdl_config* grid_config, const char* variant,
                           const cdl_ratings* ratings, const cdl_content* content,
                           size_t folds, size_t select_m, size_t workers,
                           const char* out_dir, size_t* runs, cdl_config** best,
                           double* best_mean) {
  return guard([&] {
    need(grid_config, "grid_config");
    need(variant, "variant");
    need(ratings, "ratings");
    cdl::GridOptions options;
    options.variant = cdl::parse_variant(variant);
    options.folds = folds;
    options.select_m = select_m;
    options.workers = std::max<size_t>(1, workers);
    const cdl::ContentMatrix* c = content ? &content->value : nullptr;
    if (options.variant == cdl::Variant::kMfBaseline) c = nullptr;
    if (options.variant != cdl::Variant::kMfBaseline && c == nullptr) {
      cdl::fail(cdl::ErrorKind::kArgument,
                std::string("variant ") + variant + " needs content");
    }
    const cdl::GridSpec spec = cdl::parse_grid(grid_config->value);
    cdl::GridResult result = cdl::grid_search(spec, ratings->value, c, options);
    if (out_dir != nullptr) {
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      result.write_tsv(dir / "grid.tsv", spec.axes);
      result.write_runs_tsv(dir / "runs.tsv");
      result.best().config.save(dir / "best.conf");
    }
    if (runs) *runs = result.runs.size();
    if (best_mean) *best_mean = result.best().mean;
    if (best) *best = new cdl_config{result.best().config};
  });
}

/* ---- sampling --------------------------------------------------------- */

cdl_status cdl_sample(const cdl_ratings* ratings, const cdl_content* content,
                      const cdl_config* config, size_t iterations,
                      size_t burn_in, size_t thin, uint64_t seed,
                      const cdl_model* init, cdl_chain** out) {
  return guard([&] {
    need(ratings, "ratings");
    need(content, "content");
    need(config, "config");
    need(out, "out");
    const cdl::HyperParams hyper = cdl::hyper_from_config(config->value);
    cdl::RatingsMatrix r = ratings->value;
    if (content->value.num_items() > r.num_items()) {
      r = r.resized(r.num_users(), content->value.num_items());
    }
    cdl::SamplerData data = cdl::make_sampler_data(r, content->value, hyper, seed);
    cdl::SamplerConfig sc;
    sc.iterations = iterations;
    sc.burn_in = burn_in;
    sc.thin = thin;
    sc.seed = seed;
    sc.lambda_s = std::isfinite(hyper.lambda_s) ? hyper.lambda_s : cdl::kDefaultSamplerLambdaS;
    *out = new cdl_chain{cdl::run_chain(data, hyper, sc, init ? &init->value : nullptr)};
  });
}

size_t cdl_chain_kept(const cdl_chain* c) { return c ? c->value.kept_iterations.size() : 0; }
size_t cdl_chain_layers(const cdl_chain* c) { return c ? c->value.weight_acceptance.size() : 0; }
double cdl_chain_weight_acceptance(const cdl_chain* c, size_t layer) {
  return c && layer < c->value.weight_acceptance.size() ? c->value.weight_acceptance[layer]
                                                        : 0.0;
}
double cdl_chain_hidden_acceptance(const cdl_chain* c, size_t layer) {
  return c && layer < c->value.hidden_acceptance.size() ? c->value.hidden_acceptance[layer]
                                                        : 0.0;
}
size_t cdl_chain_warnings(const cdl_chain* c) { return c ? c->value.warnings.size() : 0; }

cdl_status cdl_chain_means(const cdl_chain* chain, double* U, double* V) {
  return guard([&] {
    need(chain, "chain");
    auto copy = [](const Eigen::MatrixXd& m, double* dst) {
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          dst, m.rows(), m.cols()) = m;
    };
    if (U) copy(chain->value.u_mean, U);
    if (V) copy(chain->value.v_mean, V);
  });
}

cdl_status cdl_chain_write(const cdl_chain* chain, const char* chain_tsv,
                           const char* summary_path) {
  return guard([&] {
    need(chain, "chain");
    if (chain_tsv) chain->value.write_tsv(chain_tsv);
    if (summary_path) chain->value.write_summary(summary_path);
  });
}

void cdl_chain_free(cdl_chain* chain) { delete chain; }

/* ---- synthetic data --------------------------------------------------- */

cdl_status cdl_synthesize(size_t num_users, size_t num_items, size_t vocab_size,
                          size_t rank, const cdl_config* config, uint64_t seed,
                          double input_density, cdl_ratings** ratings,
                          cdl_content** content) {
  return guard([&] {
    need(config, "config");
    need(ratings, "ratings");
    need(content, "content");
    cdl::Config c = config->value;
    if (!c.contains("K")) c.set("K", std::to_string(rank));
    const cdl::HyperParams hyper = cdl::hyper_from_config(c);
    cdl::SyntheticOptions options;
    options.input_density = input_density;
    options.encoder_layers = c.contains("encoder_layers") ? hyper.encoder_layers : 1;
    options.hidden_units = c.contains("hidden_units") ? hyper.hidden_units : 20;
    cdl::SyntheticData data = cdl::generate_synthetic(num_users, num_items, vocab_size,
                                                      rank, hyper, seed, options);
    *ratings = new cdl_ratings{std::move(data.ratings)};
    *content = new cdl_content{std::move(data.content)};
  });
}

/* ---- run manifests ---------------------------------------------------- */

cdl_status cdl_sha256_file(const char* path, char out[65]) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const std::string hex = cdl::sha256_file(path);
    std::memcpy(out, hex.c_str(), 65);
  });
}

cdl_status cdl_manifest_create(const char* command, uint64_t seed, cdl_manifest** out) {
  return guard([&] {
    need(command, "command");
    need(out, "out");
    auto* m = new cdl_manifest{};
    m->value.command = command;
    m->value.seed = seed;
    *out = m;
  });
}

cdl_status cdl_manifest_set_config(cdl_manifest* manifest, const cdl_config* config) {
  return guard([&] {
    need(manifest, "manifest");
    need(config, "config");
    manifest->value.config = config->value;
  });
}

cdl_status cdl_manifest_add_input(cdl_manifest* manifest, const char* path) {
  return guard([&] {
    need(manifest, "manifest");
    need(path, "path");
    manifest->value.add_input(path);
  });
}

cdl_status cdl_manifest_add_output(cdl_manifest* manifest, const char* path) {
  return guard([&] {
    need(manifest, "manifest");
    need(path, "path");
    manifest->value.add_output(path);
  });
}

cdl_status cdl_manifest_write(const cdl_manifest* manifest, const char* path) {
  return guard([&] {
    need(manifest, "manifest");
    need(path, "path");
    manifest->value.write(path);
  });
}

void cdl_manifest_free(cdl_manifest* manifest) { delete manifest; }

}  // extern "C"
