#pragma once

// Datasets drawn from the CDL generative process in the deterministic-layer
// limit, for experiments with known ground truth.

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "cdl/config.hpp"
#include "cdl/dataio.hpp"
#include "cdl/sdae.hpp"

namespace cdl {

struct SyntheticOptions {
  /// Fraction of ones in the binary root input X_0.
  double input_density = 0.1;
  /// Hidden width for intermediate layers when hyper.widths is empty.
  std::size_t encoder_layers = 1;
  std::size_t hidden_units = 20;
};

struct SyntheticData {
  RatingsMatrix ratings;
  ContentMatrix content;   // X_c, binary
  SparseRows input;        // X_0
  SdaeNetwork network;     // W^+ (weights and biases)
  Eigen::MatrixXd encodings;  // f_e(X_0), J x K
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
};

/// W^+ ~ N(0, lw^-1), deterministic sigmoid layers, X_c = 1[X_L + N(0, ln^-1)
/// > 0.5], v_j = f_e(x0_j) + N(0, lv^-1) (exactly the encoding when lv is
/// infinite), u_i ~ N(0, lu^-1), R_ij = 1[N(u_i^T v_j, a^-1) > 0.5].
/// Layer widths come from hyper.widths when set (first entry must be S).
SyntheticData generate_synthetic(std::size_t num_users, std::size_t num_items,
                                 std::size_t vocab_size, std::size_t rank,
                                 const HyperParams& hyper, std::uint64_t seed,
                                 const SyntheticOptions& options = {});

}  // namespace cdl
