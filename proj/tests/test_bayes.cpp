#include <doctest.h>

#include "cdl/bayes.hpp"
#include "cdl/synthetic.hpp"
#include "support.hpp"

using namespace cdl;
using namespace cdl::test;

namespace {

// Second evaluator for the weight-column conditional, written with loops.
double ref_logpost_w(const Eigen::VectorXd& w, const Eigen::MatrixXd& x_prev,
                     const Eigen::VectorXd& x_col, double lw, double ls) {
  double out = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) out -= 0.5 * lw * w[k] * w[k];
  for (Eigen::Index j = 0; j < x_prev.rows(); ++j) {
    double z = w[w.size() - 1];
    for (Eigen::Index k = 0; k < x_prev.cols(); ++k) z += x_prev(j, k) * w[k];
    const double r = x_col[j] - ref_sigmoid(z);
    out -= 0.5 * ls * r * r;
  }
  return out;
}

template <typename F, typename V>
V central_difference(F&& f, V x, double h = 1e-6) {
  V g = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = f(x);
    x[k] = keep - h;
    const double down = f(x);
    x[k] = keep;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

template <typename V>
double rel_error(const V& a, const V& b) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), 1e-4});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

template <typename Draw>
Moments moments(Draw&& draw, int n) {
  Eigen::VectorXd first = draw();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(first.size());
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(first.size(), first.size());
  for (int t = 0; t < n; ++t) {
    Eigen::VectorXd x = t == 0 ? first : draw();
    sum += x;
    outer += x * x.transpose();
  }
  Moments m;
  m.mean = sum / n;
  m.cov = (outer - n * m.mean * m.mean.transpose()) / (n - 1);
  return m;
}

// A posterior covariance check normalized by the marginal scales, so that
// near-zero off-diagonal entries are compared on the correlation scale.
double cov_error(const Eigen::MatrixXd& sample, const Eigen::MatrixXd& truth) {
  double worst = 0.0;
  for (Eigen::Index p = 0; p < truth.rows(); ++p) {
    for (Eigen::Index q = 0; q < truth.cols(); ++q) {
      const double scale = std::sqrt(truth(p, p) * truth(q, q));
      worst = std::max(worst, std::abs(sample(p, q) - truth(p, q)) / scale);
    }
  }
  return worst;
}

// Synthetic ratings and content plus the sampler view of them; the view
// points into `syn`, so the struct stays put.
struct Tiny {
  SyntheticData syn;
  SamplerData data;

  Tiny(std::uint64_t seed, HyperParams& h) {
    h.lambda_u = 1.0;
    h.lambda_v = 10.0;
    h.lambda_n = 10.0;
    h.lambda_w = 1.0;
    h.rank = 2;
    h.encoder_layers = 1;
    h.noise_level = 0.3;
    syn = generate_synthetic(5, 5, 8, 2, h, seed, {0.4, 1, 4});
    data = make_sampler_data(syn.ratings, syn.content, h, seed);
  }
  Tiny(const Tiny&) = delete;
  Tiny& operator=(const Tiny&) = delete;
};

}  // namespace

TEST_CASE("weight-column conditional at zero") {
  const double ls = 100.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd x_prev = Eigen::MatrixXd::Zero(6, 3);
  Eigen::VectorXd x_col = Eigen::VectorXd::Zero(6);
  CHECK(logpost_w_col(w, x_prev, x_col, 1.0, ls) == -(ls / 2) * 6 * 0.25);
}

TEST_CASE("weight-column conditional matches a loop evaluator") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd w = random_matrix(5, 1, rng);
    Eigen::MatrixXd x_prev = random_matrix(7, 4, rng).cwiseAbs().cwiseMin(1.0);
    Eigen::VectorXd x_col = random_matrix(7, 1, rng).cwiseAbs().cwiseMin(1.0);
    const double a = logpost_w_col(w, x_prev, x_col, 0.7, 50.0);
    const double b = ref_logpost_w(w, x_prev, x_col, 0.7, 50.0);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));

    auto f = [&](const Eigen::VectorXd& v) { return logpost_w_col(v, x_prev, x_col, 0.7, 50.0); };
    auto g = grad_logpost_w_col(w, x_prev, x_col, 0.7, 50.0);
    CHECK(rel_error(g, central_difference(f, w)) < 1e-5);
  }
}

TEST_CASE("a dominant weight prior puts the mode at zero") {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd x_prev = random_matrix(5, 3, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::VectorXd x_col = random_matrix(5, 1, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  const double at_zero = logpost_w_col(zero, x_prev, x_col, 1e12, 1.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd w = random_matrix(4, 1, rng, 1e-3);
    CHECK(logpost_w_col(w, x_prev, x_col, 1e12, 1.0) < at_zero);
  }
  CHECK(grad_logpost_w_col(zero, x_prev, x_col, 1e12, 1.0).norm() < 1.0);
}

TEST_CASE("weight-column conditional changes by the prior quadratic") {
  // with a zero input block only the bias row reaches the likelihood
  std::mt19937_64 rng(3);
  Eigen::MatrixXd x_prev = Eigen::MatrixXd::Zero(6, 3);
  Eigen::VectorXd x_col = random_matrix(6, 1, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::VectorXd w = random_matrix(4, 1, rng);
  Eigen::VectorXd d = random_matrix(4, 1, rng);
  d[3] = 0.0;
  const double lw = 2.5;
  const double delta = logpost_w_col(w + d, x_prev, x_col, lw, 10.0) -
                       logpost_w_col(w, x_prev, x_col, lw, 10.0);
  const double expect = -lw * w.dot(d) - 0.5 * lw * d.squaredNorm();
  CHECK(delta == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("hidden-row conditional: structure and gradients") {
  std::mt19937_64 rng(4);
  // L = 4: widths 6-4-2-4-6
  auto net = random_network({6, 4, 2, 4, 6}, rng);
  std::vector<Eigen::MatrixXd> plus;
  for (std::size_t l = 1; l <= 4; ++l) plus.push_back(plus_weights(net, l));
  CHECK(plus[0].rows() == 7);
  CHECK(plus[0].bottomRows(1) == Eigen::MatrixXd(net.biases[0]));

  Eigen::RowVectorXd x0 = random_matrix(1, 6, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::RowVectorXd x1 = random_matrix(1, 4, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::RowVectorXd x2 = random_matrix(1, 2, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::RowVectorXd x3 = random_matrix(1, 4, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::RowVectorXd x4 = random_matrix(1, 6, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::RowVectorXd xc = random_matrix(1, 6, rng).cwiseAbs().cwiseMin(1.0);
  Eigen::RowVectorXd v = random_matrix(1, 2, rng);
  Eigen::RowVectorXd v2 = random_matrix(1, 2, rng);
  RowPrecisions prec{100.0, 10.0, 5.0};

  RowNeighbors first{1, 4, &x0, &plus[0], &x2, &plus[1], nullptr, &v};
  RowNeighbors moved = first;
  moved.item = &v2;
  CHECK(logpost_x_row(x1, first, prec) == logpost_x_row(x1, moved, prec));

  RowNeighbors code{2, 4, &x1, &plus[1], &x3, &plus[2], nullptr, &v};
  RowNeighbors code2 = code;
  code2.item = &v2;
  CHECK(logpost_x_row(x2, code, prec) != logpost_x_row(x2, code2, prec));

  RowNeighbors last{4, 4, &x3, &plus[3], nullptr, nullptr, &xc, nullptr};
  for (const auto* nb : {&first, &code, &last}) {
    const Eigen::RowVectorXd& x = nb == &first ? x1 : nb == &code ? x2 : x4;
    auto f = [&](const Eigen::RowVectorXd& y) { return logpost_x_row(y, *nb, prec); };
    CHECK(rel_error(grad_logpost_x_row(x, *nb, prec), central_difference(f, x)) < 1e-5);
  }

  // the top row is Gaussian in x: exact quadratic change
  Eigen::RowVectorXd d = random_matrix(1, 6, rng);
  const double delta = logpost_x_row(x4 + d, last, prec) - logpost_x_row(x4, last, prec);
  const double expect = grad_logpost_x_row(x4, last, prec).dot(d) -
                        0.5 * (prec.lambda_s + prec.lambda_n) * d.squaredNorm();
  CHECK(delta == doctest::Approx(expect).epsilon(1e-10));

  // the item term alone peaks at v_j
  RowPrecisions only_v{0.0, 0.0, 1e8};
  CHECK(grad_logpost_x_row(v, code, only_v).norm() == 0.0);
  CHECK(logpost_x_row(v, code, only_v) > logpost_x_row(v2, code, only_v));

  RowNeighbors missing = last;
  missing.clean = nullptr;
  CHECK(caught([&] { logpost_x_row(x4, missing, prec); })->kind == ErrorKind::kArgument);
  RowNeighbors no_item = code;
  no_item.item = nullptr;
  CHECK(caught([&] { logpost_x_row(x2, no_item, prec); })->kind == ErrorKind::kArgument);
}

TEST_CASE("MALA log ratio: antisymmetry and the proposal densities") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x = random_matrix(3, 1, rng), y = random_matrix(3, 1, rng);
    Eigen::VectorXd gx = random_matrix(3, 1, rng), gy = random_matrix(3, 1, rng);
    const double lx = -1.3 * t, ly = 0.4 * t, h = 0.3;
    const double r = mala_log_ratio(lx, ly, x, y, gx, gy, h);
    CHECK(r == doctest::Approx(-mala_log_ratio(ly, lx, y, x, gy, gx, h)).epsilon(1e-14));
    auto log_q = [&](const Eigen::VectorXd& to, const Eigen::VectorXd& from,
                     const Eigen::VectorXd& g) {
      return -(to - from - 0.5 * h * h * g).squaredNorm() / (2 * h * h);
    };
    CHECK(r == doctest::Approx(ly + log_q(x, y, gy) - lx - log_q(y, x, gx)).epsilon(1e-12));
  }
}

TEST_CASE("user draws: scalar posterior moments") {
  RatingsMatrix r(1, 2, {{0, 0}});
  Eigen::MatrixXd V(2, 1);
  V << 1, 1;
  std::mt19937_64 rng(6);
  const int n = 100000;
  auto m = moments([&] { return sample_u(0, V, r, {1.0, 0.01}, 1.0, rng); }, n);
  const double var = 1.0 / 2.01;
  CHECK(std::abs(m.mean[0] - 1.0 / 2.01) < 4 * std::sqrt(var / n));
  CHECK(std::abs(m.cov(0, 0) / var - 1.0) < 0.05);
}

TEST_CASE("item draws: scalar posterior and prior-mean cases") {
  std::mt19937_64 rng(7);
  const int n = 100000;
  RatingsMatrix r(1, 1, {{0, 0}});
  Eigen::MatrixXd U(1, 1);
  U << 1;
  Eigen::RowVectorXd code(1);
  code << 0.5;
  auto m = moments([&] { return sample_v(0, U, r, {1.0, 0.01}, 1.0, code, rng); }, n);
  CHECK(std::abs(m.mean[0] - 0.75) < 4 * std::sqrt(0.5 / n));

  RatingsMatrix none(3, 1, {});
  Eigen::MatrixXd U3 = random_matrix(3, 2, rng);
  Eigen::RowVectorXd code2(2);
  code2 << 0.2, -0.4;
  auto p = moments([&] { return sample_v(0, U3, none, {1.0, 0.0}, 4.0, code2, rng); }, n);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(p.mean[k] - code2[k]) < 4 * std::sqrt(0.25 / n));
  }
}

TEST_CASE("multivariate draws match the closed-form posterior") {
  std::mt19937_64 rng(8);
  const int n = 100000;
  for (int K = 1; K <= 3; ++K) {
    auto R = random_ratings(6, 8, 0.4, rng);
    Eigen::MatrixXd V = random_matrix(8, K, rng);
    Eigen::MatrixXd U = random_matrix(6, K, rng);
    Eigen::RowVectorXd code = random_matrix(1, K, rng);
    const Confidence conf{1.0, 0.05};

    // user 0: precision and mean from the loop-built oracle
    Eigen::MatrixXd prec = 0.5 * Eigen::MatrixXd::Identity(K, K);
    for (Index j = 0; j < 8; ++j) {
      prec += (R.contains(0, j) ? conf.a : conf.b) * V.row(j).transpose() * V.row(j);
    }
    const Eigen::MatrixXd cov = prec.inverse();
    const Eigen::VectorXd mu = ref_solve_user(0, V, R, conf, 0.5);
    auto mu_lib = update_user(0, V, R, conf, 0.5);
    CHECK((mu - mu_lib).cwiseAbs().maxCoeff() < 1e-10);
    auto m = moments([&] { return sample_u(0, V, R, conf, 0.5, rng); }, n);
    for (int k = 0; k < K; ++k) {
      CHECK(std::abs(m.mean[k] - mu[k]) < 4 * std::sqrt(cov(k, k) / n));
    }
    CHECK(cov_error(m.cov, cov) < 0.05);

    // item 1
    Eigen::MatrixXd prec_v = 2.0 * Eigen::MatrixXd::Identity(K, K);
    Eigen::VectorXd rhs = 2.0 * code.transpose();
    for (Index i = 0; i < 6; ++i) {
      const bool liked = R.contains(i, 1);
      prec_v += (liked ? conf.a : conf.b) * U.row(i).transpose() * U.row(i);
      if (liked) rhs += conf.a * U.row(i).transpose();
    }
    const Eigen::MatrixXd cov_v = prec_v.inverse();
    const Eigen::VectorXd mu_v = cov_v * rhs;
    CHECK((update_item(1, U, R, conf, 2.0, code) - mu_v).cwiseAbs().maxCoeff() < 1e-10);
    auto mv = moments([&] { return sample_v(1, U, R, conf, 2.0, code, rng); }, n);
    for (int k = 0; k < K; ++k) {
      CHECK(std::abs(mv.mean[k] - mu_v[k]) < 4 * std::sqrt(cov_v(k, k) / n));
    }
    CHECK(cov_error(mv.cov, cov_v) < 0.05);
  }
}

TEST_CASE("a dominant user prior concentrates draws at zero") {
  std::mt19937_64 rng(9);
  auto R = random_ratings(2, 5, 0.5, rng);
  Eigen::MatrixXd V = random_matrix(5, 2, rng);
  const double lu = 1e6;
  auto m = moments([&] { return sample_u(0, V, R, {1.0, 0.01}, lu, rng); }, 2000);
  CHECK(m.cov(0, 0) < 2.0 / lu);
  CHECK(m.cov(1, 1) < 2.0 / lu);
}

TEST_CASE("zero step size: every move accepted and nothing moves") {
  HyperParams h;
  Tiny tiny(1, h);
  const SamplerData& data = tiny.data;
  SamplerConfig cfg;
  cfg.initial_step = 0.0;
  cfg.adapt = false;
  cfg.sample_users = false;
  cfg.sample_items = false;
  auto state = init_sampler(data, h, cfg);
  const auto net = state.network;
  const auto hidden = state.hidden;
  auto stats = mwg_step(state, data, h, cfg);
  CHECK(state.network == net);
  CHECK(state.hidden == hidden);
  for (std::size_t l = 0; l < stats.weight_proposed.size(); ++l) {
    CHECK(stats.weight_accepted[l] == stats.weight_proposed[l]);
    CHECK(stats.hidden_accepted[l] == stats.hidden_proposed[l]);
  }
}

TEST_CASE("conjugate sub-model recovers the Gaussian posterior mean") {
  HyperParams h;
  Tiny tiny(2, h);
  const SamplerData& data = tiny.data;
  SamplerConfig cfg;
  cfg.sample_weights = false;
  cfg.sample_hidden = false;
  cfg.sample_items = false;
  cfg.iterations = 20000;
  cfg.burn_in = 1000;
  cfg.seed = 3;
  auto state = init_sampler(data, h, cfg);
  const Eigen::MatrixXd V = state.factors.V;
  auto summary = run_chain(data, h, cfg);
  const double n = static_cast<double>(summary.kept_iterations.size());
  CHECK(n == 19000);
  for (Index i = 0; i < 5; ++i) {
    auto mu = update_user(i, V, *data.ratings, h.conf, h.lambda_u);
    Eigen::MatrixXd prec = h.lambda_u * Eigen::MatrixXd::Identity(2, 2);
    for (Index j = 0; j < 5; ++j) {
      prec += (data.ratings->contains(i, j) ? h.conf.a : h.conf.b) * V.row(j).transpose() *
              V.row(j);
    }
    const Eigen::MatrixXd cov = prec.inverse();
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(summary.u_mean(i, k) - mu[k]) < 4 * std::sqrt(cov(k, k) / n));
      CHECK(summary.u_variance(i, k) == doctest::Approx(cov(k, k)).epsilon(0.05));
    }
  }
  CHECK((summary.v_mean - V).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adapted acceptance on the tiny full model") {
  HyperParams h;
  Tiny tiny(4, h);
  const SamplerData& data = tiny.data;
  SamplerConfig cfg;
  cfg.lambda_s = 100.0;
  cfg.iterations = 2000;
  cfg.burn_in = 1000;
  cfg.seed = 11;
  auto summary = run_chain(data, h, cfg);
  for (double a : summary.weight_acceptance) {
    CHECK(a >= 0.15);
    CHECK(a <= 0.5);
  }
  for (double a : summary.hidden_acceptance) {
    CHECK(a >= 0.15);
    CHECK(a <= 0.5);
  }
  CHECK(summary.warnings.empty());
  CHECK(summary.u_mean.allFinite());
  CHECK(summary.v_mean.allFinite());

  auto again = run_chain(data, h, cfg);
  CHECK(again.kept_values == summary.kept_values);
  CHECK(again.u_mean == summary.u_mean);
  CHECK(again.weight_steps == summary.weight_steps);
}

TEST_CASE("chain outputs and argument checks") {
  HyperParams h;
  Tiny tiny(5, h);
  const SamplerData& data = tiny.data;
  SamplerConfig cfg;
  cfg.iterations = 40;
  cfg.burn_in = 10;
  cfg.thin = 3;
  auto summary = run_chain(data, h, cfg);
  CHECK(summary.kept_iterations.size() == 10);
  CHECK(summary.tracked_names.size() == summary.tracked_mean.size());
  CHECK(summary.kept_values.size() == 10);

  auto dir = temp_dir("bayes_out");
  summary.write_tsv(dir / "chain.tsv");
  summary.write_summary(dir / "summary.tsv");
  auto chain = read_file(dir / "chain.tsv");
  CHECK(chain.rfind("iteration\t", 0) == 0);
  std::size_t lines = 0;
  for (char c : chain) lines += c == '\n';
  CHECK(lines == 11);
  CHECK_FALSE(read_file(dir / "summary.tsv").empty());

  auto bad = cfg;
  bad.thin = 0;
  CHECK(caught([&] { run_chain(data, h, bad); })->kind == ErrorKind::kArgument);
  bad = cfg;
  bad.burn_in = 50;
  CHECK(caught([&] { run_chain(data, h, bad); })->kind == ErrorKind::kArgument);
}

TEST_CASE("pinned acceptance is flagged") {
  HyperParams h;
  Tiny tiny(6, h);
  const SamplerData& data = tiny.data;
  SamplerConfig cfg;
  cfg.iterations = 30;
  cfg.burn_in = 10;
  cfg.adapt = false;
  cfg.initial_step = 50.0;  // far too large: nothing is accepted
  auto summary = run_chain(data, h, cfg);
  CHECK_FALSE(summary.warnings.empty());
}
