#pragma once

// Sampling-based inference with finite layer precision lambda_s: exact
// conjugate Gaussian draws for u_i and v_j, and gradient-informed
// Metropolis-within-Gibbs (MALA proposals) for the weight columns and hidden
// rows.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdl/cf.hpp"
#include "cdl/config.hpp"
#include "cdl/dataio.hpp"
#include "cdl/sdae.hpp"
#include "cdl/trainer.hpp"

namespace cdl {

inline constexpr double kDefaultSamplerLambdaS = 100.0;

/// W_l with b_l appended as the last row: (K_{l-1} + 1) x K_l.
Eigen::MatrixXd plus_weights(const SdaeNetwork& net, std::size_t layer);

/// log N(w | 0, lw^-1 I) + log N(x_col | sigmoid([x_prev, 1] w), ls^-1 I),
/// dropping constants. `w_plus` is column n of W_l^+.
double logpost_w_col(const Eigen::VectorXd& w_plus,
                     const Eigen::MatrixXd& x_prev, const Eigen::VectorXd& x_col,
                     double lambda_w, double lambda_s);
Eigen::VectorXd grad_logpost_w_col(const Eigen::VectorXd& w_plus,
                                   const Eigen::MatrixXd& x_prev,
                                   const Eigen::VectorXd& x_col,
                                   double lambda_w, double lambda_s);

/// Markov blanket of hidden row X_{l,j*}. Pointers left null are absent;
/// which ones are required depends on the layer.
struct RowNeighbors {
  std::size_t layer = 1;       // l in [1, L]
  std::size_t num_layers = 2;  // L
  const Eigen::RowVectorXd* prev = nullptr;   // X_{l-1,j*}
  const Eigen::MatrixXd* w_in = nullptr;      // W_l^+
  const Eigen::RowVectorXd* next = nullptr;   // X_{l+1,j*} (l < L)
  const Eigen::MatrixXd* w_out = nullptr;     // W_{l+1}^+ (l < L)
  const Eigen::RowVectorXd* clean = nullptr;  // X_{c,j*} (l == L)
  const Eigen::RowVectorXd* item = nullptr;   // v_j (l == L/2)
};

struct RowPrecisions {
  double lambda_s = kDefaultSamplerLambdaS;
  double lambda_n = 1.0;  // precision of X_c around X_L
  double lambda_v = 1.0;
};

/// Incoming Gaussian from layer l-1, outgoing Gaussian to layer l+1 (or to
/// X_c when l = L), plus N(v_j | x, lv^-1 I) when l = L/2; constants
/// dropped. Throws an argument error when a needed neighbour is missing.
double logpost_x_row(const Eigen::RowVectorXd& x, const RowNeighbors& nb,
                     const RowPrecisions& prec);
Eigen::RowVectorXd grad_logpost_x_row(const Eigen::RowVectorXd& x,
                                      const RowNeighbors& nb,
                                      const RowPrecisions& prec);

/// Log acceptance ratio of a MALA move x -> y with step h, given log
/// densities and gradients at both points. Antisymmetric in (x, y).
double mala_log_ratio(double log_x, double log_y, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& grad_x,
                      const Eigen::VectorXd& grad_y, double step);

/// Exact draw from the Gaussian conditional of u_i; its mean is computed by
/// the same normal equations and solve as update_user.
Eigen::VectorXd sample_u(Index user, const Eigen::MatrixXd& V,
                         const RatingsMatrix& ratings, const Confidence& conf,
                         double lambda_u, std::mt19937_64& rng);
Eigen::VectorXd sample_v(Index item, const Eigen::MatrixXd& U,
                         const RatingsMatrix& ratings, const Confidence& conf,
                         double lambda_v, const Eigen::RowVectorXd& code_row,
                         std::mt19937_64& rng);

/// Draw from N(solve(system), system.precision^-1).
Eigen::VectorXd sample_gaussian(const NormalSystem& system,
                                std::mt19937_64& rng);

struct SamplerConfig {
  std::size_t iterations = 1000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  double lambda_s = kDefaultSamplerLambdaS;
  double initial_step = 0.05;
  double target_acceptance = 0.3;
  bool sample_weights = true;
  bool sample_hidden = true;
  bool sample_users = true;
  bool sample_items = true;
  bool adapt = true;  // step-size adaptation during burn-in
  std::uint64_t seed = 0;
};

/// Observed quantities the chain conditions on (dense; the sampler targets
/// small models).
struct SamplerData {
  const RatingsMatrix* ratings = nullptr;
  Eigen::MatrixXd input;  // X_0
  Eigen::MatrixXd clean;  // X_c
};

struct SamplerState {
  SdaeNetwork network;
  std::vector<Eigen::MatrixXd> hidden;  // hidden[l-1] = X_l, l = 1..L
  LatentFactors factors;
  std::vector<double> weight_steps;  // per layer
  std::vector<double> hidden_steps;  // per layer
  std::mt19937_64 rng;
  std::size_t iteration = 0;
};

struct ScanStats {
  std::vector<std::size_t> weight_accepted, weight_proposed;
  std::vector<std::size_t> hidden_accepted, hidden_proposed;
};

/// Network from `init` when given (else a fresh init), hidden rows at their
/// deterministic forward values, factors from `init` or (0, X_{L/2}).
SamplerState init_sampler(const SamplerData& data, const HyperParams& hyper,
                          const SamplerConfig& config,
                          const Model* init = nullptr);

/// One full scan: every W^+ column and hidden row by a Metropolis step on its
/// conditional, then every u_i and v_j by an exact Gaussian draw.
ScanStats mwg_step(SamplerState& state, const SamplerData& data,
                   const HyperParams& hyper, const SamplerConfig& config);

struct ChainSummary {
  std::vector<std::string> tracked_names;
  std::vector<std::size_t> kept_iterations;
  std::vector<std::vector<double>> kept_values;  // per kept iteration
  /// Per kept iteration: weight-layer then hidden-layer acceptance of that
  /// scan.
  std::vector<std::vector<double>> kept_acceptance;
  std::vector<double> weight_acceptance;  // post burn-in, per layer
  std::vector<double> hidden_acceptance;
  std::vector<double> weight_steps;
  std::vector<double> hidden_steps;
  std::vector<double> tracked_mean;
  std::vector<double> tracked_variance;
  Eigen::MatrixXd u_mean, u_variance, v_mean, v_variance;
  std::vector<std::string> warnings;

  void write_tsv(const std::filesystem::path& path) const;
  void write_summary(const std::filesystem::path& path) const;
};

ChainSummary run_chain(const SamplerData& data, const HyperParams& hyper,
                       const SamplerConfig& config,
                       const Model* init = nullptr);

/// Dense X_0 / X_c from content; X_0 masked with the hyperparameter noise
/// level under `seed`.
SamplerData make_sampler_data(const RatingsMatrix& ratings,
                              const ContentMatrix& content,
                              const HyperParams& hyper, std::uint64_t seed);

}  // namespace cdl
