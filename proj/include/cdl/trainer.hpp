#pragma once

// Alternating MAP training: exact U and V block sweeps interleaved with
// momentum gradient epochs on the network, plus the degenerate variants.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cdl/cf.hpp"
#include "cdl/config.hpp"
#include "cdl/dataio.hpp"
#include "cdl/error.hpp"
#include "cdl/sdae.hpp"

namespace cdl {

enum class Variant {
  kCdl,          // joint training
  kTwoStep,      // network trained on reconstruction only, then frozen
  kEncoderOnly,  // lambda_n = 0: no decoder term
  kMfBaseline,   // content-free weighted MF (zero prior mean)
};

Variant parse_variant(const std::string& name);
const char* to_string(Variant variant) noexcept;

struct ObjectiveTerms {
  double user_prior = 0.0;
  double weight_prior = 0.0;
  double item_offset = 0.0;
  double reconstruction = 0.0;
  double rating = 0.0;

  double total() const {
    return user_prior + weight_prior + item_offset + reconstruction + rating;
  }
};

struct SweepRecord {
  std::size_t sweep = 0;  // 0 = state at initialization
  ObjectiveTerms terms;
  double total = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  Variant variant = Variant::kCdl;
  std::vector<SweepRecord> sweeps;
  std::size_t restarts = 0;
  bool converged = false;
  double final_learning_rate = 0.0;

  void write_tsv(const std::filesystem::path& path) const;
};

/// Streams report rows as they are produced: header once, then one flushed
/// row per sweep.
class ReportWriter {
 public:
  explicit ReportWriter(const std::filesystem::path& path);
  void append(const SweepRecord& record);

  static std::string header();
  static std::string format(const SweepRecord& record);

 private:
  std::ofstream out_;
};

struct Model {
  Variant variant = Variant::kCdl;
  HyperParams hyper;
  SdaeNetwork network;  // empty for the MF baseline
  LatentFactors factors;

  bool has_network() const noexcept { return !network.weights.empty(); }
  /// Prior mean of every item factor for `content` (zeros without a network).
  Eigen::MatrixXd encodings(const ContentMatrix* content) const;
};

struct FitResult {
  Model model;
  TrainReport report;
};

struct FitOptions {
  /// Whether the item-offset term feeds the network gradient.
  bool couple_network = true;
  std::function<void(const SweepRecord&)> on_sweep;
};

/// Raised when the objective stays non-finite after max_restarts learning
/// rate halvings. Carries the last finite state.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, Model last_good,
                   TrainReport report)
      : Error(ErrorKind::kTraining, message),
        last_good_(std::make_shared<Model>(std::move(last_good))),
        report_(std::make_shared<TrainReport>(std::move(report))) {}

  const Model& last_good() const { return *last_good_; }
  const TrainReport& report() const { return *report_; }

 private:
  std::shared_ptr<const Model> last_good_;
  std::shared_ptr<const TrainReport> report_;
};

/// Joint log-likelihood in the deterministic-layer limit, term by term.
/// `corrupted` is the network input X_0; `encodings_override`, when given,
/// replaces f_e(X_0) as the item prior mean (frozen or zero encodings).
/// lambda_n == 0 drops the reconstruction term entirely.
ObjectiveTerms objective(const HyperParams& hyper, const SdaeNetwork* network,
                         const LatentFactors& factors,
                         const RatingsMatrix& ratings,
                         const ContentMatrix* corrupted,
                         const ContentMatrix* clean,
                         const Eigen::MatrixXd* encodings_override = nullptr);

FitResult fit(const RatingsMatrix& ratings, const ContentMatrix& content,
              const HyperParams& hyper, const FitOptions& options = {});
FitResult fit_two_step(const RatingsMatrix& ratings,
                       const ContentMatrix& content, const HyperParams& hyper,
                       const FitOptions& options = {});
FitResult fit_encoder_only(const RatingsMatrix& ratings,
                           const ContentMatrix& content,
                           const HyperParams& hyper,
                           const FitOptions& options = {});
FitResult fit_mf_baseline(const RatingsMatrix& ratings,
                          const HyperParams& hyper,
                          const FitOptions& options = {});

/// Dispatches on `variant`; `content` may be null only for the MF baseline.
FitResult train(Variant variant, const RatingsMatrix& ratings,
                const ContentMatrix* content, const HyperParams& hyper,
                const FitOptions& options = {});

/// Network-only pretraining used by the two-step variant: the same epochs
/// and corruption stream as fit(), driven by reconstruction alone.
SdaeNetwork pretrain_network(const ContentMatrix& content,
                             const HyperParams& hyper,
                             ContentMatrix* last_corrupted = nullptr);

}  // namespace cdl
