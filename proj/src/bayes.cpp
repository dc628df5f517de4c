#include "cdl/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "cdl/error.hpp"
#include "text_util.hpp"

namespace cdl {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

// [x, 1] * W^+ for a block of rows.
Eigen::MatrixXd affine(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w_plus) {
  const auto k = w_plus.rows() - 1;
  Eigen::MatrixXd z = x * w_plus.topRows(k);
  z.rowwise() += w_plus.row(k);
  return z;
}

void require(const void* p, const char* what, std::size_t layer) {
  if (p == nullptr) {
    fail(ErrorKind::kArgument, std::string("hidden row at layer ") +
                                   std::to_string(layer) + " needs " + what);
  }
}

void check_neighbors(const RowNeighbors& nb) {
  if (nb.layer < 1 || nb.layer > nb.num_layers) {
    fail(ErrorKind::kArgument, "hidden layer index out of range");
  }
  require(nb.prev, "its previous-layer row", nb.layer);
  require(nb.w_in, "its incoming weights", nb.layer);
  if (nb.layer < nb.num_layers) {
    require(nb.next, "its next-layer row", nb.layer);
    require(nb.w_out, "its outgoing weights", nb.layer);
  } else {
    require(nb.clean, "its clean content row", nb.layer);
  }
  if (nb.layer == nb.num_layers / 2) require(nb.item, "its item factor", nb.layer);
}

std::mt19937_64 sampler_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 5u};
  return std::mt19937_64(seq);
}

// One MALA move on `x`. A zero step keeps the state and counts as accepted.
template <class LogF, class GradF>
bool mala_move(Eigen::VectorXd& x, double step, std::mt19937_64& rng,
               const LogF& logf, const GradF& gradf) {
  if (step == 0.0) return true;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double log_x = logf(x);
  const Eigen::VectorXd grad_x = gradf(x);
  Eigen::VectorXd y = x + 0.5 * step * step * grad_x;
  for (Eigen::Index k = 0; k < y.size(); ++k) y[k] += step * normal(rng);
  const double log_y = logf(y);
  const Eigen::VectorXd grad_y = gradf(y);
  const double ratio = mala_log_ratio(log_x, log_y, x, y, grad_x, grad_y, step);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (std::isfinite(ratio) && std::log(u) < ratio) {
    x = std::move(y);
    return true;
  }
  return false;
}

double effective_lambda_s(const SamplerConfig& config) {
  if (!(config.lambda_s > 0.0) || !std::isfinite(config.lambda_s)) {
    fail(ErrorKind::kArgument, "sampler lambda_s must be positive and finite");
  }
  return config.lambda_s;
}

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) {
    fail(ErrorKind::kNumeric, std::string("non-finite ") + what);
  }
}

const Eigen::MatrixXd& layer_values(const SamplerState& s,
                                    const SamplerData& d, std::size_t l) {
  return l == 0 ? d.input : s.hidden[l - 1];
}

}  // namespace

Eigen::MatrixXd plus_weights(const SdaeNetwork& net, std::size_t layer) {
  if (layer < 1 || layer > net.num_layers()) {
    fail(ErrorKind::kArgument, "layer index out of range");
  }
  const auto& w = net.weights[layer - 1];
  Eigen::MatrixXd out(w.rows() + 1, w.cols());
  out.topRows(w.rows()) = w;
  out.row(w.rows()) = net.biases[layer - 1];
  return out;
}

double logpost_w_col(const Eigen::VectorXd& w_plus,
                     const Eigen::MatrixXd& x_prev, const Eigen::VectorXd& x_col,
                     double lambda_w, double lambda_s) {
  if (w_plus.size() != x_prev.cols() + 1 || x_col.size() != x_prev.rows()) {
    fail(ErrorKind::kShape, "weight column and layer values disagree");
  }
  require_finite(w_plus, "weight column");
  require_finite(x_prev, "previous layer");
  require_finite(x_col, "layer column");
  const Eigen::VectorXd s = sigmoid(affine(x_prev, w_plus));
  return -0.5 * lambda_w * w_plus.squaredNorm() -
         0.5 * lambda_s * (x_col - s).squaredNorm();
}

Eigen::VectorXd grad_logpost_w_col(const Eigen::VectorXd& w_plus,
                                   const Eigen::MatrixXd& x_prev,
                                   const Eigen::VectorXd& x_col,
                                   double lambda_w, double lambda_s) {
  if (w_plus.size() != x_prev.cols() + 1 || x_col.size() != x_prev.rows()) {
    fail(ErrorKind::kShape, "weight column and layer values disagree");
  }
  const Eigen::VectorXd s = sigmoid(affine(x_prev, w_plus));
  const Eigen::VectorXd delta =
      ((x_col - s).array() * s.array() * (1.0 - s.array())).matrix();
  const auto k = x_prev.cols();
  Eigen::VectorXd g = -lambda_w * w_plus;
  g.head(k) += lambda_s * (x_prev.transpose() * delta);
  g[k] += lambda_s * delta.sum();
  return g;
}

double logpost_x_row(const Eigen::RowVectorXd& x, const RowNeighbors& nb,
                     const RowPrecisions& prec) {
  check_neighbors(nb);
  require_finite(x, "hidden row");
  const Eigen::RowVectorXd mean_in = sigmoid(affine(*nb.prev, *nb.w_in));
  double out = -0.5 * prec.lambda_s * (x - mean_in).squaredNorm();
  if (nb.layer < nb.num_layers) {
    const Eigen::RowVectorXd s = sigmoid(affine(x, *nb.w_out));
    out -= 0.5 * prec.lambda_s * (*nb.next - s).squaredNorm();
  } else {
    out -= 0.5 * prec.lambda_n * (*nb.clean - x).squaredNorm();
  }
  if (nb.layer == nb.num_layers / 2) {
    out -= 0.5 * prec.lambda_v * (*nb.item - x).squaredNorm();
  }
  return out;
}

Eigen::RowVectorXd grad_logpost_x_row(const Eigen::RowVectorXd& x,
                                      const RowNeighbors& nb,
                                      const RowPrecisions& prec) {
  check_neighbors(nb);
  const Eigen::RowVectorXd mean_in = sigmoid(affine(*nb.prev, *nb.w_in));
  Eigen::RowVectorXd g = -prec.lambda_s * (x - mean_in);
  if (nb.layer < nb.num_layers) {
    const Eigen::RowVectorXd s = sigmoid(affine(x, *nb.w_out));
    const Eigen::RowVectorXd delta =
        ((*nb.next - s).array() * s.array() * (1.0 - s.array())).matrix();
    g += prec.lambda_s * delta * nb.w_out->topRows(x.size()).transpose();
  } else {
    g += prec.lambda_n * (*nb.clean - x);
  }
  if (nb.layer == nb.num_layers / 2) g += prec.lambda_v * (*nb.item - x);
  return g;
}

double mala_log_ratio(double log_x, double log_y, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& grad_x,
                      const Eigen::VectorXd& grad_y, double step) {
  const double h2 = step * step;
  const double forward = (y - x - 0.5 * h2 * grad_x).squaredNorm();
  const double backward = (x - y - 0.5 * h2 * grad_y).squaredNorm();
  return log_y - log_x + (forward - backward) / (2.0 * h2);
}

Eigen::VectorXd sample_gaussian(const NormalSystem& system,
                                std::mt19937_64& rng) {
  const Eigen::VectorXd mean = solve_spd(system);
  Eigen::LLT<Eigen::MatrixXd> llt(system.precision);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::kNumeric, "posterior precision is not positive definite");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
  return mean + llt.matrixU().solve(z);
}

Eigen::VectorXd sample_u(Index user, const Eigen::MatrixXd& V,
                         const RatingsMatrix& ratings, const Confidence& conf,
                         double lambda_u, std::mt19937_64& rng) {
  return sample_gaussian(user_system(V, ratings.items_of(user), conf, lambda_u,
                                     confidence_gram(V, conf)),
                         rng);
}

Eigen::VectorXd sample_v(Index item, const Eigen::MatrixXd& U,
                         const RatingsMatrix& ratings, const Confidence& conf,
                         double lambda_v, const Eigen::RowVectorXd& code_row,
                         std::mt19937_64& rng) {
  return sample_gaussian(item_system(U, ratings.users_of(item), conf, lambda_v,
                                     code_row, confidence_gram(U, conf)),
                         rng);
}

SamplerState init_sampler(const SamplerData& data, const HyperParams& hyper,
                          const SamplerConfig& config, const Model* init) {
  if (data.ratings == nullptr) fail(ErrorKind::kArgument, "sampler needs ratings");
  if (data.input.rows() != data.clean.rows() ||
      data.input.cols() != data.clean.cols()) {
    fail(ErrorKind::kShape, "sampler input and clean content differ in shape");
  }
  if (static_cast<std::size_t>(data.clean.rows()) != data.ratings->num_items()) {
    fail(ErrorKind::kShape, "content has " + std::to_string(data.clean.rows()) +
                                " items but ratings have " +
                                std::to_string(data.ratings->num_items()));
  }
  effective_lambda_s(config);
  SamplerState state;
  state.rng = sampler_stream(config.seed);
  if (init != nullptr && init->has_network()) {
    state.network = init->network;
    if (state.network.input_width() != static_cast<std::size_t>(data.clean.cols())) {
      fail(ErrorKind::kShape, "initial network does not match the vocabulary");
    }
  } else {
    state.network = init_weights(
        hyper.resolve_widths(static_cast<std::size_t>(data.clean.cols())),
        config.seed, hyper.lambda_w);
  }
  const std::size_t L = state.network.num_layers();
  state.hidden = forward(state.network, data.input).outputs;
  if (init != nullptr && init->factors.U.size() > 0) {
    state.factors = init->factors;
    if (static_cast<std::size_t>(state.factors.U.rows()) != data.ratings->num_users() ||
        static_cast<std::size_t>(state.factors.V.rows()) != data.ratings->num_items() ||
        state.factors.rank() != state.network.code_width()) {
      fail(ErrorKind::kShape, "initial factors do not match the data");
    }
  } else {
    state.factors.U = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(data.ratings->num_users()),
        static_cast<Eigen::Index>(state.network.code_width()));
    state.factors.V = state.hidden[L / 2 - 1];
  }
  state.weight_steps.assign(L, config.initial_step);
  state.hidden_steps.assign(L, config.initial_step);
  return state;
}

ScanStats mwg_step(SamplerState& state, const SamplerData& data,
                   const HyperParams& hyper, const SamplerConfig& config) {
  const double ls = effective_lambda_s(config);
  SdaeNetwork& net = state.network;
  const std::size_t L = net.num_layers();
  ScanStats stats;
  stats.weight_accepted.assign(L, 0);
  stats.weight_proposed.assign(L, 0);
  stats.hidden_accepted.assign(L, 0);
  stats.hidden_proposed.assign(L, 0);

  if (config.sample_weights) {
    for (std::size_t l = 1; l <= L; ++l) {
      const Eigen::MatrixXd& x_prev = layer_values(state, data, l - 1);
      const Eigen::MatrixXd& x_cur = state.hidden[l - 1];
      Eigen::MatrixXd& W = net.weights[l - 1];
      Eigen::RowVectorXd& b = net.biases[l - 1];
      for (Eigen::Index n = 0; n < W.cols(); ++n) {
        Eigen::VectorXd w(W.rows() + 1);
        w.head(W.rows()) = W.col(n);
        w[W.rows()] = b[n];
        const Eigen::VectorXd x_col = x_cur.col(n);
        const bool ok = mala_move(
            w, state.weight_steps[l - 1], state.rng,
            [&](const Eigen::VectorXd& v) {
              return logpost_w_col(v, x_prev, x_col, hyper.lambda_w, ls);
            },
            [&](const Eigen::VectorXd& v) {
              return grad_logpost_w_col(v, x_prev, x_col, hyper.lambda_w, ls);
            });
        W.col(n) = w.head(W.rows());
        b[n] = w[W.rows()];
        ++stats.weight_proposed[l - 1];
        if (ok) ++stats.weight_accepted[l - 1];
      }
    }
  }

  if (config.sample_hidden) {
    const RowPrecisions prec{ls, hyper.lambda_n, hyper.lambda_v};
    for (std::size_t l = 1; l <= L; ++l) {
      const Eigen::MatrixXd w_in = plus_weights(net, l);
      Eigen::MatrixXd w_out;
      if (l < L) w_out = plus_weights(net, l + 1);
      Eigen::MatrixXd& X = state.hidden[l - 1];
      for (Eigen::Index j = 0; j < X.rows(); ++j) {
        const Eigen::RowVectorXd prev = layer_values(state, data, l - 1).row(j);
        Eigen::RowVectorXd next, clean, item;
        RowNeighbors nb;
        nb.layer = l;
        nb.num_layers = L;
        nb.prev = &prev;
        nb.w_in = &w_in;
        if (l < L) {
          next = state.hidden[l].row(j);
          nb.next = &next;
          nb.w_out = &w_out;
        } else {
          clean = data.clean.row(j);
          nb.clean = &clean;
        }
        if (l == L / 2) {
          item = state.factors.V.row(j);
          nb.item = &item;
        }
        Eigen::VectorXd x = X.row(j).transpose();
        const bool ok = mala_move(
            x, state.hidden_steps[l - 1], state.rng,
            [&](const Eigen::VectorXd& v) {
              return logpost_x_row(v.transpose(), nb, prec);
            },
            [&](const Eigen::VectorXd& v) {
              return Eigen::VectorXd(grad_logpost_x_row(v.transpose(), nb, prec).transpose());
            });
        X.row(j) = x.transpose();
        ++stats.hidden_proposed[l - 1];
        if (ok) ++stats.hidden_accepted[l - 1];
      }
    }
  }

  const RatingsMatrix& ratings = *data.ratings;
  LatentFactors& f = state.factors;
  if (config.sample_users) {
    const Eigen::MatrixXd gram = confidence_gram(f.V, hyper.conf);
    for (Index i = 0; i < ratings.num_users(); ++i) {
      f.U.row(i) = sample_gaussian(user_system(f.V, ratings.items_of(i),
                                               hyper.conf, hyper.lambda_u, gram),
                                   state.rng)
                       .transpose();
    }
  }
  if (config.sample_items) {
    const Eigen::MatrixXd gram = confidence_gram(f.U, hyper.conf);
    const Eigen::MatrixXd& code = state.hidden[L / 2 - 1];
    for (Index j = 0; j < ratings.num_items(); ++j) {
      f.V.row(j) = sample_gaussian(item_system(f.U, ratings.users_of(j),
                                               hyper.conf, hyper.lambda_v,
                                               code.row(j), gram),
                                   state.rng)
                       .transpose();
    }
  }
  ++state.iteration;
  return stats;
}

namespace {

void adapt_steps(std::vector<double>& steps,
                 const std::vector<std::size_t>& accepted,
                 const std::vector<std::size_t>& proposed, double target,
                 std::size_t iteration) {
  const double gain = 1.0 / std::sqrt(static_cast<double>(iteration) + 1.0);
  for (std::size_t l = 0; l < steps.size(); ++l) {
    if (proposed[l] == 0 || steps[l] == 0.0) continue;
    const double rate =
        static_cast<double>(accepted[l]) / static_cast<double>(proposed[l]);
    steps[l] *= std::exp(gain * (rate - target));
  }
}

double rate_of(std::size_t accepted, std::size_t proposed) {
  return proposed == 0 ? 0.0
                       : static_cast<double>(accepted) /
                             static_cast<double>(proposed);
}

}  // namespace

ChainSummary run_chain(const SamplerData& data, const HyperParams& hyper,
                       const SamplerConfig& config, const Model* init) {
  if (config.thin == 0) fail(ErrorKind::kArgument, "thin must be at least 1");
  if (config.burn_in > config.iterations) {
    fail(ErrorKind::kArgument, "burn_in exceeds iterations");
  }
  if (!(config.target_acceptance > 0.0 && config.target_acceptance < 1.0)) {
    fail(ErrorKind::kArgument, "target acceptance must lie in (0, 1)");
  }
  if (!(config.initial_step >= 0.0) || !std::isfinite(config.initial_step)) {
    fail(ErrorKind::kArgument, "initial step must be finite and non-negative");
  }
  SamplerState state = init_sampler(data, hyper, config, init);
  const std::size_t L = state.network.num_layers();
  const std::size_t code = L / 2;

  ChainSummary summary;
  summary.tracked_names = {"u[0][0]", "v[0][0]", "W1[0][0]",
                           "X" + std::to_string(code) + "[0][0]"};
  auto tracked = [&]() {
    const auto& f = state.factors;
    return std::vector<double>{
        f.U.size() > 0 ? f.U(0, 0) : 0.0, f.V.size() > 0 ? f.V(0, 0) : 0.0,
        state.network.weights[0](0, 0), state.hidden[code - 1](0, 0)};
  };

  std::vector<std::size_t> w_acc(L, 0), w_prop(L, 0), x_acc(L, 0), x_prop(L, 0);
  Eigen::MatrixXd u_sum = Eigen::MatrixXd::Zero(state.factors.U.rows(), state.factors.U.cols());
  Eigen::MatrixXd u_sq = u_sum;
  Eigen::MatrixXd v_sum = Eigen::MatrixXd::Zero(state.factors.V.rows(), state.factors.V.cols());
  Eigen::MatrixXd v_sq = v_sum;
  std::vector<double> t_sum(summary.tracked_names.size(), 0.0);
  std::vector<double> t_sq(summary.tracked_names.size(), 0.0);

  for (std::size_t t = 0; t < config.iterations; ++t) {
    const ScanStats stats = mwg_step(state, data, hyper, config);
    if (t < config.burn_in) {
      if (config.adapt) {
        adapt_steps(state.weight_steps, stats.weight_accepted,
                    stats.weight_proposed, config.target_acceptance, t);
        adapt_steps(state.hidden_steps, stats.hidden_accepted,
                    stats.hidden_proposed, config.target_acceptance, t);
      }
      continue;
    }
    for (std::size_t l = 0; l < L; ++l) {
      w_acc[l] += stats.weight_accepted[l];
      w_prop[l] += stats.weight_proposed[l];
      x_acc[l] += stats.hidden_accepted[l];
      x_prop[l] += stats.hidden_proposed[l];
    }
    if ((t - config.burn_in) % config.thin != 0) continue;
    summary.kept_iterations.push_back(t + 1);
    auto values = tracked();
    for (std::size_t k = 0; k < values.size(); ++k) {
      t_sum[k] += values[k];
      t_sq[k] += values[k] * values[k];
    }
    summary.kept_values.push_back(std::move(values));
    std::vector<double> acc;
    for (std::size_t l = 0; l < L; ++l) {
      acc.push_back(rate_of(stats.weight_accepted[l], stats.weight_proposed[l]));
    }
    for (std::size_t l = 0; l < L; ++l) {
      acc.push_back(rate_of(stats.hidden_accepted[l], stats.hidden_proposed[l]));
    }
    summary.kept_acceptance.push_back(std::move(acc));
    u_sum += state.factors.U;
    u_sq += state.factors.U.cwiseAbs2();
    v_sum += state.factors.V;
    v_sq += state.factors.V.cwiseAbs2();
  }

  const double n = static_cast<double>(summary.kept_iterations.size());
  auto variance = [n](double sum, double sq) {
    if (n < 2.0) return 0.0;
    return std::max(0.0, (sq - sum * sum / n) / (n - 1.0));
  };
  if (n > 0) {
    summary.u_mean = u_sum / n;
    summary.v_mean = v_sum / n;
    summary.u_variance = u_sq.binaryExpr(u_sum, [&](double q, double s) { return variance(s, q); });
    summary.v_variance = v_sq.binaryExpr(v_sum, [&](double q, double s) { return variance(s, q); });
    for (std::size_t k = 0; k < t_sum.size(); ++k) {
      summary.tracked_mean.push_back(t_sum[k] / n);
      summary.tracked_variance.push_back(variance(t_sum[k], t_sq[k]));
    }
  } else {
    summary.warnings.push_back("no samples kept after burn-in");
  }

  for (std::size_t l = 0; l < L; ++l) {
    summary.weight_acceptance.push_back(rate_of(w_acc[l], w_prop[l]));
    summary.hidden_acceptance.push_back(rate_of(x_acc[l], x_prop[l]));
  }
  summary.weight_steps = state.weight_steps;
  summary.hidden_steps = state.hidden_steps;
  auto check_pinned = [&](const char* block, std::size_t l, std::size_t prop,
                          double rate) {
    if (prop == 0) return;
    if (rate < 0.01 || rate > 0.99) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s layer %zu acceptance pinned at %.3f",
                    block, l + 1, rate);
      summary.warnings.emplace_back(buf);
      spdlog::warn("{}", buf);
    }
  };
  for (std::size_t l = 0; l < L; ++l) {
    check_pinned("weight", l, w_prop[l], summary.weight_acceptance[l]);
    check_pinned("hidden", l, x_prop[l], summary.hidden_acceptance[l]);
  }
  return summary;
}

void ChainSummary::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "iteration";
  for (const auto& name : tracked_names) out << '\t' << name;
  for (std::size_t l = 0; l < weight_acceptance.size(); ++l) out << "\tacc_W" << l + 1;
  for (std::size_t l = 0; l < hidden_acceptance.size(); ++l) out << "\tacc_X" << l + 1;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < kept_iterations.size(); ++r) {
    out << kept_iterations[r];
    for (double v : kept_values[r]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << '\t' << buf;
    }
    for (double v : kept_acceptance[r]) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

void ChainSummary::write_summary(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  char buf[160];
  out << "kept\t" << kept_iterations.size() << '\n';
  for (std::size_t l = 0; l < weight_acceptance.size(); ++l) {
    std::snprintf(buf, sizeof buf, "acceptance_W%zu\t%.6f\nstep_W%zu\t%.6g\n",
                  l + 1, weight_acceptance[l], l + 1, weight_steps[l]);
    out << buf;
  }
  for (std::size_t l = 0; l < hidden_acceptance.size(); ++l) {
    std::snprintf(buf, sizeof buf, "acceptance_X%zu\t%.6f\nstep_X%zu\t%.6g\n",
                  l + 1, hidden_acceptance[l], l + 1, hidden_steps[l]);
    out << buf;
  }
  for (std::size_t k = 0; k < tracked_mean.size(); ++k) {
    std::snprintf(buf, sizeof buf, "mean_%s\t%.17g\nvar_%s\t%.17g\n",
                  tracked_names[k].c_str(), tracked_mean[k],
                  tracked_names[k].c_str(), tracked_variance[k]);
    out << buf;
  }
  for (const auto& w : warnings) out << "warning\t" << w << '\n';
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

SamplerData make_sampler_data(const RatingsMatrix& ratings,
                              const ContentMatrix& content,
                              const HyperParams& hyper, std::uint64_t seed) {
  if (content.num_items() != ratings.num_items()) {
    fail(ErrorKind::kShape, "content has " + std::to_string(content.num_items()) +
                                " items but ratings have " +
                                std::to_string(ratings.num_items()));
  }
  SamplerData data;
  data.ratings = &ratings;
  data.clean = Eigen::MatrixXd(content.values());
  data.input = Eigen::MatrixXd(corrupt(content, hyper.noise_level, seed).values());
  return data;
}

}  // namespace cdl
