#include "cdl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include <spdlog/spdlog.h>

namespace cdl {

namespace {

enum class Stream : std::uint64_t {
  kNetworkInit = 1,
  kFactorInit = 2,
  kCorruption = 3,
  kDropout = 4,
};

std::mt19937_64 make_stream(std::uint64_t seed, Stream id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

std::uint64_t network_seed(std::uint64_t seed) {
  auto rng = make_stream(seed, Stream::kNetworkInit);
  return rng();
}

NetworkGradients zero_like(const SdaeNetwork& net) {
  NetworkGradients g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                              net.weights[l].cols()));
    g.biases.push_back(Eigen::RowVectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

// One full-batch momentum ascent epoch with a fresh corruption (and dropout)
// draw. The step is scaled by 1/J so the learning rate is per item.
void network_epoch(SdaeNetwork& net, NetworkGradients& velocity,
                   ContentMatrix& corrupted, const ContentMatrix& clean,
                   const Eigen::MatrixXd& items, const NetworkWeights& weights,
                   const HyperParams& hyper, double learning_rate,
                   std::mt19937_64& noise_rng, std::mt19937_64& dropout_rng) {
  corrupted = corrupt(clean, hyper.noise_level, noise_rng);
  DropoutMask mask;
  const bool use_mask = hyper.dropout_rate > 0.0;
  if (use_mask) {
    mask = DropoutMask::draw(net, clean.num_items(), hyper.dropout_rate,
                             dropout_rng);
  }
  NetworkGradients grad = gradients(net, corrupted.values(), clean.values(),
                                    items, weights, use_mask ? &mask : nullptr);
  const double step =
      learning_rate / static_cast<double>(std::max<std::size_t>(1, clean.num_items()));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    velocity.weights[l] = hyper.momentum * velocity.weights[l] + step * grad.weights[l];
    velocity.biases[l] = hyper.momentum * velocity.biases[l] + step * grad.biases[l];
    net.weights[l] += velocity.weights[l];
    net.biases[l] += velocity.biases[l];
  }
}

struct Plan {
  Variant variant = Variant::kCdl;
  bool train_network = true;  // network epochs inside the sweep loop
  bool couple_network = true;
  bool pretrain = false;      // two-step: network trained up front, frozen
  bool zero_encoder = false;  // MF baseline
};

void check_term(double value, const char* name) {
  if (!std::isfinite(value)) {
    fail(ErrorKind::kNumeric, std::string("non-finite objective term: ") + name);
  }
}

FitResult run(const RatingsMatrix& ratings_in, const ContentMatrix* content,
              const HyperParams& hyper, const Plan& plan,
              const FitOptions& options) {
  using Clock = std::chrono::steady_clock;
  RatingsMatrix ratings = ratings_in;
  if (content) {
    if (content->num_items() < ratings.num_items()) {
      fail(ErrorKind::kShape, "content has " +
                                  std::to_string(content->num_items()) +
                                  " items but ratings reference " +
                                  std::to_string(ratings.num_items()));
    }
    if (content->num_items() > ratings.num_items()) {
      ratings = ratings.resized(ratings.num_users(), content->num_items());
    }
  }
  const std::size_t num_users = ratings.num_users();
  const std::size_t num_items = ratings.num_items();
  const auto rank = static_cast<Eigen::Index>(hyper.rank);

  FitResult result;
  Model& model = result.model;
  TrainReport& report = result.report;
  model.variant = plan.variant;
  model.hyper = hyper;
  report.variant = plan.variant;

  auto noise_rng = make_stream(hyper.seed, Stream::kCorruption);
  auto dropout_rng = make_stream(hyper.seed, Stream::kDropout);
  ContentMatrix corrupted;
  Eigen::MatrixXd encodings = Eigen::MatrixXd::Zero(num_items, rank);
  if (!plan.zero_encoder) {
    if (plan.pretrain) {
      model.network = pretrain_network(*content, hyper, &corrupted);
    } else {
      model.network = init_weights(hyper.resolve_widths(content->vocab_size()),
                                   network_seed(hyper.seed), hyper.lambda_w);
      corrupted = corrupt(*content, hyper.noise_level, noise_rng);
    }
    encodings = encode(model.network, corrupted.values());
  }
  // Frozen (two-step) and zero (MF) prior means stand in for f_e(X_0).
  const bool fixed_encodings = plan.pretrain || plan.zero_encoder;

  model.factors.U = Eigen::MatrixXd::Zero(num_users, rank);
  model.factors.V = encodings;
  if (hyper.init_scale > 0.0) {
    auto init_rng = make_stream(hyper.seed, Stream::kFactorInit);
    std::normal_distribution<double> normal(0.0, hyper.init_scale);
    for (Eigen::Index j = 0; j < model.factors.V.rows(); ++j) {
      for (Eigen::Index k = 0; k < rank; ++k) {
        model.factors.V(j, k) += normal(init_rng);
      }
    }
  }

  auto evaluate = [&] {
    return objective(model.hyper,
                     plan.zero_encoder ? nullptr : &model.network,
                     model.factors, ratings,
                     plan.zero_encoder ? nullptr : &corrupted, content,
                     fixed_encodings ? &encodings : nullptr);
  };
  auto record = [&](std::size_t sweep, const ObjectiveTerms& terms,
                    double seconds) {
    SweepRecord rec{sweep, terms, terms.total(), seconds};
    report.sweeps.push_back(rec);
    if (options.on_sweep) options.on_sweep(rec);
  };
  record(0, evaluate(), 0.0);

  const NetworkWeights grad_weights{
      options.couple_network && plan.couple_network ? hyper.lambda_v : 0.0,
      hyper.lambda_n, hyper.lambda_w};
  NetworkGradients velocity =
      plan.zero_encoder ? NetworkGradients{} : zero_like(model.network);
  double learning_rate = hyper.learning_rate;
  Model good = model;
  ContentMatrix good_corrupted = corrupted;
  std::size_t calm_sweeps = 0;

  for (std::size_t sweep = 1; sweep <= hyper.max_sweeps; ++sweep) {
    ObjectiveTerms terms;
    double seconds = 0.0;
    while (true) {
      auto start = Clock::now();
      try {
        if (!fixed_encodings) encodings = encode(model.network, corrupted.values());
        sweep_users(model.factors, ratings, hyper.conf, hyper.lambda_u,
                    hyper.threads);
        sweep_items(model.factors, ratings, hyper.conf, hyper.lambda_v,
                    encodings, hyper.threads);
        if (plan.train_network) {
          for (std::size_t e = 0; e < hyper.epochs_per_block; ++e) {
            network_epoch(model.network, velocity, corrupted, *content,
                          model.factors.V, grad_weights, hyper, learning_rate,
                          noise_rng, dropout_rng);
          }
        }
        terms = evaluate();
        seconds = std::chrono::duration<double>(Clock::now() - start).count();
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        ++report.restarts;
        if (report.restarts > hyper.max_restarts) {
          report.final_learning_rate = learning_rate;
          throw TrainingDiverged(
              std::string("training diverged at sweep ") +
                  std::to_string(sweep) + ": " + e.what(),
              good, report);
        }
        learning_rate *= 0.5;
        spdlog::warn("sweep {}: {}; restoring last state, learning rate {}",
                     sweep, e.what(), learning_rate);
        model = good;
        corrupted = good_corrupted;
        if (!plan.zero_encoder) velocity = zero_like(model.network);
      }
    }
    const double previous = report.sweeps.back().total;
    record(sweep, terms, seconds);
    good = model;
    good_corrupted = corrupted;
    spdlog::debug("sweep {}: objective {:.6g} ({:.3f}s)", sweep, terms.total(),
                  seconds);

    const double change = std::abs(terms.total() - previous) /
                          std::max(std::abs(previous), 1e-300);
    calm_sweeps = change < hyper.tolerance ? calm_sweeps + 1 : 0;
    if (calm_sweeps >= hyper.patience) {
      report.converged = true;
      break;
    }
  }
  report.final_learning_rate = learning_rate;
  return result;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "cdl") return Variant::kCdl;
  if (name == "two-step") return Variant::kTwoStep;
  if (name == "encoder-only") return Variant::kEncoderOnly;
  if (name == "mf") return Variant::kMfBaseline;
  fail(ErrorKind::kArgument, "unknown variant \"" + name +
                                 "\" (expected cdl, two-step, encoder-only or mf)");
}

const char* to_string(Variant variant) noexcept {
  switch (variant) {
    case Variant::kCdl: return "cdl";
    case Variant::kTwoStep: return "two-step";
    case Variant::kEncoderOnly: return "encoder-only";
    case Variant::kMfBaseline: return "mf";
  }
  return "?";
}

std::string ReportWriter::header() {
  return "sweep\ttotal\tuser_prior\tweight_prior\titem_offset\treconstruction"
         "\trating\tseconds";
}

std::string ReportWriter::format(const SweepRecord& r) {
  char buf[512];
  // adding 0.0 turns a negative zero into a plain zero
  std::snprintf(buf, sizeof(buf),
                "%zu\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.6f", r.sweep,
                r.total + 0.0, r.terms.user_prior + 0.0,
                r.terms.weight_prior + 0.0, r.terms.item_offset + 0.0,
                r.terms.reconstruction + 0.0, r.terms.rating + 0.0, r.seconds);
  return buf;
}

ReportWriter::ReportWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) fail(ErrorKind::kIo, "cannot write " + path.string());
  out_ << header() << '\n';
  out_.flush();
}

void ReportWriter::append(const SweepRecord& record) {
  out_ << format(record) << '\n';
  out_.flush();
  if (!out_) fail(ErrorKind::kIo, "failed appending to the training report");
}

void TrainReport::write_tsv(const std::filesystem::path& path) const {
  ReportWriter writer(path);
  for (const auto& r : sweeps) writer.append(r);
}

Eigen::MatrixXd Model::encodings(const ContentMatrix* content) const {
  if (!has_network() || content == nullptr) {
    return Eigen::MatrixXd::Zero(factors.V.rows(), factors.V.cols());
  }
  return encode(network, content->values());
}

ObjectiveTerms objective(const HyperParams& hyper, const SdaeNetwork* network,
                         const LatentFactors& factors,
                         const RatingsMatrix& ratings,
                         const ContentMatrix* corrupted,
                         const ContentMatrix* clean,
                         const Eigen::MatrixXd* encodings_override) {
  ObjectiveTerms terms;
  terms.user_prior = -0.5 * hyper.lambda_u * factors.U.squaredNorm();
  check_term(terms.user_prior, "user_prior");
  terms.rating = rating_objective(factors.U, factors.V, ratings, hyper.conf);
  check_term(terms.rating, "rating");
  if (network) {
    if (!corrupted) fail(ErrorKind::kArgument, "network objective needs X_0");
    if (hyper.lambda_n != 0.0 && !clean) {
      fail(ErrorKind::kArgument, "reconstruction term needs clean content");
    }
    NetworkWeights weights{encodings_override ? 0.0 : hyper.lambda_v,
                           hyper.lambda_n, hyper.lambda_w};
    static const SparseRows kEmpty;
    auto terms_net = network_objective(*network, corrupted->values(),
                                       clean ? clean->values() : kEmpty,
                                       factors.V, weights);
    terms.weight_prior = terms_net.weight_prior;
    terms.item_offset = terms_net.item_offset;
    terms.reconstruction = terms_net.reconstruction;
    check_term(terms.weight_prior, "weight_prior");
    check_term(terms.reconstruction, "reconstruction");
  }
  if (encodings_override) {
    terms.item_offset = -0.5 * hyper.lambda_v *
                        (factors.V - *encodings_override).squaredNorm();
  } else if (!network) {
    terms.item_offset = -0.5 * hyper.lambda_v * factors.V.squaredNorm();
  }
  check_term(terms.item_offset, "item_offset");
  return terms;
}

SdaeNetwork pretrain_network(const ContentMatrix& content,
                             const HyperParams& hyper,
                             ContentMatrix* last_corrupted) {
  SdaeNetwork net = init_weights(hyper.resolve_widths(content.vocab_size()),
                                 network_seed(hyper.seed), hyper.lambda_w);
  auto noise_rng = make_stream(hyper.seed, Stream::kCorruption);
  auto dropout_rng = make_stream(hyper.seed, Stream::kDropout);
  ContentMatrix corrupted = corrupt(content, hyper.noise_level, noise_rng);
  NetworkGradients velocity = zero_like(net);
  const NetworkWeights weights{0.0, hyper.lambda_n, hyper.lambda_w};
  const Eigen::MatrixXd no_items;
  const std::size_t epochs = hyper.max_sweeps * hyper.epochs_per_block;
  for (std::size_t e = 0; e < epochs; ++e) {
    network_epoch(net, velocity, corrupted, content, no_items, weights, hyper,
                  hyper.learning_rate, noise_rng, dropout_rng);
  }
  if (last_corrupted) *last_corrupted = std::move(corrupted);
  return net;
}

FitResult fit(const RatingsMatrix& ratings, const ContentMatrix& content,
              const HyperParams& hyper, const FitOptions& options) {
  hyper.validate();
  return run(ratings, &content, hyper, Plan{Variant::kCdl, true, true, false, false},
             options);
}

FitResult fit_two_step(const RatingsMatrix& ratings,
                       const ContentMatrix& content, const HyperParams& hyper,
                       const FitOptions& options) {
  hyper.validate();
  return run(ratings, &content, hyper,
             Plan{Variant::kTwoStep, false, false, true, false}, options);
}

FitResult fit_encoder_only(const RatingsMatrix& ratings,
                           const ContentMatrix& content,
                           const HyperParams& hyper,
                           const FitOptions& options) {
  hyper.validate();
  HyperParams effective = hyper;
  effective.lambda_n = 0.0;
  return run(ratings, &content, effective,
             Plan{Variant::kEncoderOnly, true, true, false, false}, options);
}

FitResult fit_mf_baseline(const RatingsMatrix& ratings,
                          const HyperParams& hyper,
                          const FitOptions& options) {
  hyper.validate();
  return run(ratings, nullptr, hyper,
             Plan{Variant::kMfBaseline, false, false, false, true}, options);
}

FitResult train(Variant variant, const RatingsMatrix& ratings,
                const ContentMatrix* content, const HyperParams& hyper,
                const FitOptions& options) {
  if (variant != Variant::kMfBaseline && content == nullptr) {
    fail(ErrorKind::kArgument,
         std::string("variant ") + to_string(variant) + " needs content");
  }
  switch (variant) {
    case Variant::kCdl: return fit(ratings, *content, hyper, options);
    case Variant::kTwoStep: return fit_two_step(ratings, *content, hyper, options);
    case Variant::kEncoderOnly:
      return fit_encoder_only(ratings, *content, hyper, options);
    case Variant::kMfBaseline: return fit_mf_baseline(ratings, hyper, options);
  }
  fail(ErrorKind::kArgument, "unknown variant");
}

}  // namespace cdl
