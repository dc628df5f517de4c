#pragma once

// Stacked denoising autoencoder in the deterministic (infinite layer
// precision) limit: sigmoid at every layer, encoder = first L/2 layers,
// decoder = last L/2 layers.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdl/dataio.hpp"

namespace cdl {

struct SdaeNetwork {
  std::vector<std::size_t> widths;         // K_0 .. K_L
  std::vector<Eigen::MatrixXd> weights;    // weights[l-1] = W_l, K_{l-1} x K_l
  std::vector<Eigen::RowVectorXd> biases;  // biases[l-1] = b_l, length K_l

  std::size_t num_layers() const noexcept { return weights.size(); }
  std::size_t code_layer() const noexcept { return weights.size() / 2; }
  std::size_t code_width() const noexcept { return widths[code_layer()]; }
  std::size_t input_width() const noexcept { return widths.front(); }

  /// Shapes consistent with `widths` and every value finite.
  void validate() const;

  friend bool operator==(const SdaeNetwork&, const SdaeNetwork&) = default;
};

/// L = widths.size() - 1 must be even and >= 2, with K_0 == K_L.
void validate_widths(std::span<const std::size_t> widths);

/// Standard deviation used by init_weights: min(lambda_w^-1/2, fan_in^-1/2).
double init_stddev(double lambda_w, std::size_t fan_in);

/// Gaussian weights, zero biases.
SdaeNetwork init_weights(std::span<const std::size_t> widths,
                         std::uint64_t seed, double lambda_w);

/// Inverted dropout on hidden layers other than the code layer. Kept units
/// are scaled by 1 / (1 - rate).
class DropoutMask {
 public:
  DropoutMask() = default;

  static DropoutMask draw(const SdaeNetwork& net, std::size_t rows,
                          double rate, std::mt19937_64& rng);

  static bool applies_to(const SdaeNetwork& net, std::size_t layer) noexcept {
    return layer > 0 && layer < net.num_layers() && layer != net.code_layer();
  }

  double rate() const noexcept { return rate_; }
  /// Per-unit multipliers for `layer`, or nullptr when the layer is unmasked.
  const Eigen::MatrixXd* scale(std::size_t layer) const;

 private:
  double rate_ = 0.0;
  std::vector<Eigen::MatrixXd> scales_;  // index = layer; empty when unmasked
};

struct ForwardTrace {
  /// outputs[l - 1] = X_l for l = 1..L. Layer 0 is the (sparse) input itself.
  std::vector<Eigen::MatrixXd> outputs;
  /// Pre-dropout sigmoid values for masked layers (empty elsewhere).
  std::vector<Eigen::MatrixXd> sigmoids;

  const Eigen::MatrixXd& layer(std::size_t l) const { return outputs.at(l - 1); }
};

ForwardTrace forward(const SdaeNetwork& net, const SparseRows& input,
                     const DropoutMask* mask = nullptr);
ForwardTrace forward(const SdaeNetwork& net, const Eigen::MatrixXd& input,
                     const DropoutMask* mask = nullptr);

/// f_e for every row: layer L/2 output (J x K).
Eigen::MatrixXd encode(const SdaeNetwork& net, const SparseRows& input);
Eigen::RowVectorXd encode(const SdaeNetwork& net,
                          const Eigen::RowVectorXd& input);
/// f_r for every row: layer L output (J x S).
Eigen::MatrixXd reconstruct(const SdaeNetwork& net, const SparseRows& input);
Eigen::RowVectorXd reconstruct(const SdaeNetwork& net,
                               const Eigen::RowVectorXd& input);

struct NetworkWeights {
  double lambda_v = 0.0;  // coupling of the code layer to the item factors
  double lambda_n = 0.0;  // reconstruction precision
  double lambda_w = 0.0;  // weight decay
};

struct NetworkGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;
};

/// Gradient (ascent direction) of
///   -lw/2 sum_l (|W_l|^2 + |b_l|^2) - lv/2 sum_j |v_j - f_e(x0_j)|^2
///   - ln/2 sum_j |f_r(x0_j) - xc_j|^2
/// with respect to every W_l and b_l. `items` may be empty when lambda_v is
/// zero.
NetworkGradients gradients(const SdaeNetwork& net, const SparseRows& corrupted,
                           const SparseRows& clean, const Eigen::MatrixXd& items,
                           const NetworkWeights& weights,
                           const DropoutMask* mask = nullptr);

/// Same, reusing a trace produced by forward() on `corrupted`.
NetworkGradients gradients(const SdaeNetwork& net, const ForwardTrace& trace,
                           const SparseRows& corrupted, const SparseRows& clean,
                           const Eigen::MatrixXd& items,
                           const NetworkWeights& weights,
                           const DropoutMask* mask = nullptr);

struct NetworkObjective {
  double weight_prior = 0.0;
  double item_offset = 0.0;
  double reconstruction = 0.0;

  double total() const { return weight_prior + item_offset + reconstruction; }
};

/// The network-dependent terms of the joint log-likelihood. A zero lambda
/// contributes exactly 0 without evaluating its residuals.
NetworkObjective network_objective(const SdaeNetwork& net,
                                   const ForwardTrace& trace,
                                   const SparseRows& clean,
                                   const Eigen::MatrixXd& items,
                                   const NetworkWeights& weights);

/// Same terms evaluated block-wise from the corrupted input (no dropout),
/// without holding the full J x S reconstruction.
NetworkObjective network_objective(const SdaeNetwork& net,
                                   const SparseRows& corrupted,
                                   const SparseRows& clean,
                                   const Eigen::MatrixXd& items,
                                   const NetworkWeights& weights);

}  // namespace cdl
