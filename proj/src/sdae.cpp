#include "cdl/sdae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdl/error.hpp"

namespace cdl {

namespace {

// Row-block size used to bound the J x S reconstruction buffers.
constexpr Eigen::Index kBlockRows = 256;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& pre) {
  return (1.0 + (-pre.array()).exp()).inverse().matrix();
}

void check_input_width(const SdaeNetwork& net, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != net.input_width()) {
    fail(ErrorKind::kShape, "input has " + std::to_string(cols) +
                                " columns, network expects " +
                                std::to_string(net.input_width()));
  }
}

void check_finite(const Eigen::MatrixXd& values, std::size_t layer) {
  if (!values.allFinite()) {
    fail(ErrorKind::kNumeric,
         "non-finite activation in layer " + std::to_string(layer));
  }
}

// Forward pass over rows [row0, row0 + input.rows()) of the full data set;
// `row0` locates the matching rows of the dropout mask.
template <typename Input>
ForwardTrace forward_rows(const SdaeNetwork& net, const Input& input,
                          const DropoutMask* mask, Eigen::Index row0) {
  check_input_width(net, input.cols());
  const std::size_t layers = net.num_layers();
  ForwardTrace trace;
  trace.outputs.resize(layers);
  trace.sigmoids.resize(layers);
  for (std::size_t l = 1; l <= layers; ++l) {
    Eigen::MatrixXd pre = l == 1 ? Eigen::MatrixXd(input * net.weights[0])
                                 : Eigen::MatrixXd(trace.outputs[l - 2] *
                                                   net.weights[l - 1]);
    pre.rowwise() += net.biases[l - 1];
    Eigen::MatrixXd activation = sigmoid(pre);
    check_finite(activation, l);
    const Eigen::MatrixXd* scale = mask ? mask->scale(l) : nullptr;
    if (scale) {
      trace.outputs[l - 1] =
          activation.cwiseProduct(scale->middleRows(row0, input.rows()));
      trace.sigmoids[l - 1] = std::move(activation);
    } else {
      trace.outputs[l - 1] = std::move(activation);
    }
  }
  return trace;
}

void add_block_gradients(const SdaeNetwork& net, const ForwardTrace& trace,
                         const SparseRows& corrupted, const SparseRows& clean,
                         const Eigen::MatrixXd& items,
                         const NetworkWeights& weights, const DropoutMask* mask,
                         Eigen::Index row0, NetworkGradients& grads) {
  const std::size_t layers = net.num_layers();
  const std::size_t code = net.code_layer();
  const Eigen::Index rows = corrupted.rows();

  // delta holds dL/dX_l for the current layer; inactive until a data term
  // reaches it, so layers above the first active term see no data gradient.
  Eigen::MatrixXd delta;
  bool active = false;
  if (weights.lambda_n != 0.0) {
    delta = trace.layer(layers);
    delta -= clean;
    delta *= -weights.lambda_n;
    active = true;
  }
  for (std::size_t l = layers; l >= 1; --l) {
    if (l == code && weights.lambda_v != 0.0) {
      Eigen::MatrixXd coupling =
          -weights.lambda_v * (trace.layer(l) - items.middleRows(row0, rows));
      if (active) {
        delta += coupling;
      } else {
        delta = std::move(coupling);
        active = true;
      }
    }
    if (!active) continue;

    const Eigen::MatrixXd* scale = mask ? mask->scale(l) : nullptr;
    const Eigen::MatrixXd& s = scale ? trace.sigmoids[l - 1] : trace.layer(l);
    Eigen::MatrixXd dpre =
        delta.cwiseProduct(s).cwiseProduct((1.0 - s.array()).matrix());
    if (scale) dpre = dpre.cwiseProduct(scale->middleRows(row0, rows));

    if (l == 1) {
      grads.weights[0].noalias() += corrupted.transpose() * dpre;
    } else {
      grads.weights[l - 1].noalias() += trace.layer(l - 1).transpose() * dpre;
      delta = dpre * net.weights[l - 1].transpose();
    }
    grads.biases[l - 1] += dpre.colwise().sum();
  }
}

void check_items(const SdaeNetwork& net, const SparseRows& corrupted,
                 const Eigen::MatrixXd& items, double lambda_v) {
  if (lambda_v == 0.0) return;
  if (items.rows() != corrupted.rows() ||
      static_cast<std::size_t>(items.cols()) != net.code_width()) {
    fail(ErrorKind::kShape,
         "item factors are " + std::to_string(items.rows()) + "x" +
             std::to_string(items.cols()) + ", expected " +
             std::to_string(corrupted.rows()) + "x" +
             std::to_string(net.code_width()));
  }
}

void check_clean(const SparseRows& corrupted, const SparseRows& clean,
                 double lambda_n) {
  if (lambda_n == 0.0) return;
  if (clean.rows() != corrupted.rows() || clean.cols() != corrupted.cols()) {
    fail(ErrorKind::kShape, "clean and corrupted content differ in shape");
  }
}

double weight_prior(const SdaeNetwork& net, double lambda_w) {
  if (lambda_w == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    sum += net.weights[l].squaredNorm() + net.biases[l].squaredNorm();
  }
  return -0.5 * lambda_w * sum;
}

}  // namespace

void validate_widths(std::span<const std::size_t> widths) {
  if (widths.size() < 3 || (widths.size() - 1) % 2 != 0) {
    fail(ErrorKind::kArgument,
         "network needs an even number of layers L >= 2, got L = " +
             std::to_string(widths.empty() ? 0 : widths.size() - 1));
  }
  if (widths.front() != widths.back()) {
    fail(ErrorKind::kArgument, "input width " + std::to_string(widths.front()) +
                                   " differs from output width " +
                                   std::to_string(widths.back()));
  }
  for (std::size_t w : widths) {
    if (w == 0) fail(ErrorKind::kArgument, "layer widths must be positive");
  }
}

void SdaeNetwork::validate() const {
  validate_widths(widths);
  if (weights.size() != widths.size() - 1 || biases.size() != weights.size()) {
    fail(ErrorKind::kShape, "layer count does not match widths");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (static_cast<std::size_t>(weights[l].rows()) != widths[l] ||
        static_cast<std::size_t>(weights[l].cols()) != widths[l + 1] ||
        static_cast<std::size_t>(biases[l].size()) != widths[l + 1]) {
      fail(ErrorKind::kShape,
           "layer " + std::to_string(l + 1) + " shape does not match widths");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      fail(ErrorKind::kNumeric,
           "layer " + std::to_string(l + 1) + " has non-finite parameters");
    }
  }
}

double init_stddev(double lambda_w, std::size_t fan_in) {
  return std::min(1.0 / std::sqrt(lambda_w),
                  1.0 / std::sqrt(static_cast<double>(fan_in)));
}

SdaeNetwork init_weights(std::span<const std::size_t> widths,
                         std::uint64_t seed, double lambda_w) {
  validate_widths(widths);
  if (!(lambda_w > 0.0)) fail(ErrorKind::kArgument, "lambda_w must be > 0");
  SdaeNetwork net;
  net.widths.assign(widths.begin(), widths.end());
  std::mt19937_64 rng(seed);
  for (std::size_t l = 1; l < widths.size(); ++l) {
    std::normal_distribution<double> normal(0.0,
                                            init_stddev(lambda_w, widths[l - 1]));
    Eigen::MatrixXd w(widths[l - 1], widths[l]);
    // column-major fill order is part of the seed contract
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = normal(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::RowVectorXd::Zero(widths[l]));
  }
  return net;
}

DropoutMask DropoutMask::draw(const SdaeNetwork& net, std::size_t rows,
                              double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    fail(ErrorKind::kArgument, "dropout rate must lie in [0, 1)");
  }
  DropoutMask mask;
  mask.rate_ = rate;
  mask.scales_.resize(net.num_layers() + 1);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution dropped(rate);
  for (std::size_t l = 1; l < net.num_layers(); ++l) {
    if (!applies_to(net, l)) continue;
    Eigen::MatrixXd scale(rows, net.widths[l]);
    for (Eigen::Index k = 0; k < scale.size(); ++k) {
      scale.data()[k] = dropped(rng) ? 0.0 : keep_scale;
    }
    mask.scales_[l] = std::move(scale);
  }
  return mask;
}

const Eigen::MatrixXd* DropoutMask::scale(std::size_t layer) const {
  if (layer >= scales_.size() || scales_[layer].size() == 0) return nullptr;
  return &scales_[layer];
}

ForwardTrace forward(const SdaeNetwork& net, const SparseRows& input,
                     const DropoutMask* mask) {
  return forward_rows(net, input, mask, 0);
}

ForwardTrace forward(const SdaeNetwork& net, const Eigen::MatrixXd& input,
                     const DropoutMask* mask) {
  return forward_rows(net, input, mask, 0);
}

Eigen::MatrixXd encode(const SdaeNetwork& net, const SparseRows& input) {
  check_input_width(net, input.cols());
  Eigen::MatrixXd codes(input.rows(), net.code_width());
  const std::size_t code = net.code_layer();
  for (Eigen::Index r0 = 0; r0 < input.rows(); r0 += kBlockRows) {
    Eigen::Index n = std::min(kBlockRows, input.rows() - r0);
    SparseRows block = input.middleRows(r0, n);
    Eigen::MatrixXd x = block * net.weights[0];
    x.rowwise() += net.biases[0];
    x = sigmoid(x);
    check_finite(x, 1);
    for (std::size_t l = 2; l <= code; ++l) {
      Eigen::MatrixXd pre = x * net.weights[l - 1];
      pre.rowwise() += net.biases[l - 1];
      x = sigmoid(pre);
      check_finite(x, l);
    }
    codes.middleRows(r0, n) = x;
  }
  return codes;
}

Eigen::RowVectorXd encode(const SdaeNetwork& net,
                          const Eigen::RowVectorXd& input) {
  Eigen::MatrixXd row = input;
  return forward(net, row).layer(net.code_layer()).row(0);
}

Eigen::MatrixXd reconstruct(const SdaeNetwork& net, const SparseRows& input) {
  check_input_width(net, input.cols());
  Eigen::MatrixXd out(input.rows(), net.input_width());
  for (Eigen::Index r0 = 0; r0 < input.rows(); r0 += kBlockRows) {
    Eigen::Index n = std::min(kBlockRows, input.rows() - r0);
    SparseRows block = input.middleRows(r0, n);
    out.middleRows(r0, n) = forward(net, block).layer(net.num_layers());
  }
  return out;
}

Eigen::RowVectorXd reconstruct(const SdaeNetwork& net,
                               const Eigen::RowVectorXd& input) {
  Eigen::MatrixXd row = input;
  return forward(net, row).layer(net.num_layers()).row(0);
}

NetworkGradients gradients(const SdaeNetwork& net, const SparseRows& corrupted,
                           const SparseRows& clean, const Eigen::MatrixXd& items,
                           const NetworkWeights& weights,
                           const DropoutMask* mask) {
  net.validate();
  check_input_width(net, corrupted.cols());
  check_items(net, corrupted, items, weights.lambda_v);
  check_clean(corrupted, clean, weights.lambda_n);
  NetworkGradients grads;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    grads.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                                  net.weights[l].cols()));
    grads.biases.push_back(Eigen::RowVectorXd::Zero(net.biases[l].size()));
  }
  if (weights.lambda_v != 0.0 || weights.lambda_n != 0.0) {
    for (Eigen::Index r0 = 0; r0 < corrupted.rows(); r0 += kBlockRows) {
      Eigen::Index n = std::min(kBlockRows, corrupted.rows() - r0);
      SparseRows in_block = corrupted.middleRows(r0, n);
      SparseRows clean_block;
      if (weights.lambda_n != 0.0) clean_block = clean.middleRows(r0, n);
      ForwardTrace trace = forward_rows(net, in_block, mask, r0);
      add_block_gradients(net, trace, in_block, clean_block, items, weights,
                          mask, r0, grads);
    }
  }
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    grads.weights[l] -= weights.lambda_w * net.weights[l];
    grads.biases[l] -= weights.lambda_w * net.biases[l];
  }
  return grads;
}

NetworkGradients gradients(const SdaeNetwork& net, const ForwardTrace& trace,
                           const SparseRows& corrupted, const SparseRows& clean,
                           const Eigen::MatrixXd& items,
                           const NetworkWeights& weights,
                           const DropoutMask* mask) {
  net.validate();
  check_input_width(net, corrupted.cols());
  check_items(net, corrupted, items, weights.lambda_v);
  check_clean(corrupted, clean, weights.lambda_n);
  NetworkGradients grads;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    grads.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                                  net.weights[l].cols()));
    grads.biases.push_back(Eigen::RowVectorXd::Zero(net.biases[l].size()));
  }
  add_block_gradients(net, trace, corrupted, clean, items, weights, mask, 0,
                      grads);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    grads.weights[l] -= weights.lambda_w * net.weights[l];
    grads.biases[l] -= weights.lambda_w * net.biases[l];
  }
  return grads;
}

NetworkObjective network_objective(const SdaeNetwork& net,
                                   const ForwardTrace& trace,
                                   const SparseRows& clean,
                                   const Eigen::MatrixXd& items,
                                   const NetworkWeights& weights) {
  NetworkObjective out;
  out.weight_prior = weight_prior(net, weights.lambda_w);
  if (weights.lambda_v != 0.0) {
    out.item_offset = -0.5 * weights.lambda_v *
                      (items - trace.layer(net.code_layer())).squaredNorm();
  }
  if (weights.lambda_n != 0.0) {
    Eigen::MatrixXd residual = trace.layer(net.num_layers());
    residual -= clean;
    out.reconstruction = -0.5 * weights.lambda_n * residual.squaredNorm();
  }
  return out;
}

NetworkObjective network_objective(const SdaeNetwork& net,
                                   const SparseRows& corrupted,
                                   const SparseRows& clean,
                                   const Eigen::MatrixXd& items,
                                   const NetworkWeights& weights) {
  check_input_width(net, corrupted.cols());
  check_items(net, corrupted, items, weights.lambda_v);
  check_clean(corrupted, clean, weights.lambda_n);
  NetworkObjective out;
  out.weight_prior = weight_prior(net, weights.lambda_w);
  if (weights.lambda_v == 0.0 && weights.lambda_n == 0.0) return out;
  double offset = 0.0, recon = 0.0;
  for (Eigen::Index r0 = 0; r0 < corrupted.rows(); r0 += kBlockRows) {
    Eigen::Index n = std::min(kBlockRows, corrupted.rows() - r0);
    SparseRows block = corrupted.middleRows(r0, n);
    ForwardTrace trace = forward_rows(net, block, nullptr, 0);
    if (weights.lambda_v != 0.0) {
      offset += (items.middleRows(r0, n) - trace.layer(net.code_layer()))
                    .squaredNorm();
    }
    if (weights.lambda_n != 0.0) {
      Eigen::MatrixXd residual = trace.layer(net.num_layers());
      SparseRows clean_block = clean.middleRows(r0, n);
      residual -= clean_block;
      recon += residual.squaredNorm();
    }
  }
  if (weights.lambda_v != 0.0) out.item_offset = -0.5 * weights.lambda_v * offset;
  if (weights.lambda_n != 0.0) {
    out.reconstruction = -0.5 * weights.lambda_n * recon;
  }
  return out;
}

}  // namespace cdl
