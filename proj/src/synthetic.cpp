#include "cdl/synthetic.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "cdl/error.hpp"

namespace cdl {

SyntheticData generate_synthetic(std::size_t num_users, std::size_t num_items,
                                 std::size_t vocab_size, std::size_t rank,
                                 const HyperParams& hyper, std::uint64_t seed,
                                 const SyntheticOptions& options) {
  if (num_users == 0 || num_items == 0 || vocab_size == 0 || rank == 0) {
    fail(ErrorKind::kArgument, "synthetic dimensions must be positive");
  }
  if (!(options.input_density >= 0.0 && options.input_density <= 1.0)) {
    fail(ErrorKind::kArgument, "input density must lie in [0, 1]");
  }
  if (!(hyper.lambda_u > 0.0 && hyper.lambda_w > 0.0 && hyper.lambda_n > 0.0 &&
        hyper.lambda_v > 0.0 && hyper.conf.a > 0.0)) {
    fail(ErrorKind::kArgument, "synthetic precisions must be positive");
  }
  HyperParams shape = hyper;
  shape.rank = rank;
  shape.encoder_layers = options.encoder_layers;
  shape.hidden_units = options.hidden_units;
  const std::vector<std::size_t> widths = shape.resolve_widths(vocab_size);
  validate_widths(widths);
  if (widths[(widths.size() - 1) / 2] != rank) {
    fail(ErrorKind::kArgument, "layer widths disagree with the rank");
  }

  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 6u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticData out;
  SdaeNetwork& net = out.network;
  net.widths = widths;
  const double w_sd = 1.0 / std::sqrt(hyper.lambda_w);
  for (std::size_t l = 1; l < widths.size(); ++l) {
    Eigen::MatrixXd w(widths[l - 1], widths[l]);
    Eigen::RowVectorXd b(widths[l]);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = w_sd * normal(rng);
      b[c] = w_sd * normal(rng);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }

  std::bernoulli_distribution coin(options.input_density);
  std::vector<Eigen::Triplet<double>> input;
  for (std::size_t j = 0; j < num_items; ++j) {
    for (std::size_t s = 0; s < vocab_size; ++s) {
      if (coin(rng)) input.emplace_back(j, s, 1.0);
    }
  }
  out.input.resize(num_items, vocab_size);
  out.input.setFromTriplets(input.begin(), input.end());

  const ForwardTrace trace = forward(net, out.input);
  out.encodings = trace.layer(net.code_layer());
  const Eigen::MatrixXd& top = trace.layer(net.num_layers());
  const double n_sd = 1.0 / std::sqrt(hyper.lambda_n);
  std::vector<ContentTriple> content;
  for (std::size_t j = 0; j < num_items; ++j) {
    for (std::size_t s = 0; s < vocab_size; ++s) {
      const double x = top(j, s) + n_sd * normal(rng);
      if (x > 0.5) content.push_back({static_cast<Index>(j), static_cast<Index>(s), 1.0});
    }
  }
  out.content = normalize_content(num_items, vocab_size, content,
                                  Normalization::kBinaryPresence);

  out.V = out.encodings;
  if (std::isfinite(hyper.lambda_v)) {
    const double v_sd = 1.0 / std::sqrt(hyper.lambda_v);
    for (Eigen::Index j = 0; j < out.V.rows(); ++j) {
      for (Eigen::Index k = 0; k < out.V.cols(); ++k) out.V(j, k) += v_sd * normal(rng);
    }
  }
  const double u_sd = 1.0 / std::sqrt(hyper.lambda_u);
  out.U.resize(static_cast<Eigen::Index>(num_users), static_cast<Eigen::Index>(rank));
  for (Eigen::Index i = 0; i < out.U.rows(); ++i) {
    for (Eigen::Index k = 0; k < out.U.cols(); ++k) out.U(i, k) = u_sd * normal(rng);
  }

  // C_ij depends on the outcome, so draws use the observed-entry precision a.
  const double r_sd = 1.0 / std::sqrt(hyper.conf.a);
  std::vector<Rating> ratings;
  for (std::size_t i = 0; i < num_users; ++i) {
    for (std::size_t j = 0; j < num_items; ++j) {
      const double mean = out.U.row(static_cast<Eigen::Index>(i))
                              .dot(out.V.row(static_cast<Eigen::Index>(j)));
      if (mean + r_sd * normal(rng) > 0.5) {
        ratings.push_back({static_cast<Index>(i), static_cast<Index>(j)});
      }
    }
  }
  out.ratings = RatingsMatrix(num_users, num_items, std::move(ratings));
  return out;
}

}  // namespace cdl
