#pragma once

// Shared fixtures and independent reference implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "cdl/cf.hpp"
#include "cdl/dataio.hpp"
#include "cdl/error.hpp"
#include "cdl/sdae.hpp"

namespace cdl::test {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("cdl_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct Caught {
  ErrorKind kind;
  std::string message;
};

/// The library error thrown by `fn`, if any.
template <typename Fn>
std::optional<Caught> caught(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return Caught{e.kind(), e.what()};
  }
  return std::nullopt;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

inline RatingsMatrix random_ratings(std::size_t users, std::size_t items,
                                    double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  std::vector<Rating> entries;
  for (Index u = 0; u < users; ++u) {
    for (Index j = 0; j < items; ++j) {
      if (coin(rng)) entries.push_back({u, j});
    }
  }
  return RatingsMatrix(users, items, std::move(entries));
}

/// Binary-presence content with roughly `density` ones.
inline ContentMatrix random_content(std::size_t items, std::size_t words,
                                    double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  std::vector<ContentTriple> triples;
  for (Index j = 0; j < items; ++j) {
    for (Index w = 0; w < words; ++w) {
      if (coin(rng)) triples.push_back({j, w, 1.0});
    }
  }
  return normalize_content(items, words, triples, Normalization::kBinaryPresence);
}

/// Real-valued content in [0, 1] (maxnorm of random counts).
inline ContentMatrix random_graded_content(std::size_t items, std::size_t words,
                                           std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 4);
  std::vector<ContentTriple> triples;
  for (Index j = 0; j < items; ++j) {
    for (Index w = 0; w < words; ++w) {
      const int c = count(rng);
      if (c > 0) triples.push_back({j, w, static_cast<double>(c)});
    }
  }
  return normalize_content(items, words, triples, Normalization::kCountMaxNorm);
}

inline SdaeNetwork random_network(const std::vector<std::size_t>& widths,
                                  std::mt19937_64& rng, double scale = 0.5) {
  SdaeNetwork net;
  net.widths = widths;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    net.weights.push_back(random_matrix(widths[l - 1], widths[l], rng, scale));
    net.biases.push_back(random_matrix(1, widths[l], rng, scale));
  }
  return net;
}

inline Eigen::MatrixXd dense(const RatingsMatrix& r) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r.num_users(), r.num_items());
  for (const auto& e : r.entries()) m(e.user, e.item) = 1.0;
  return m;
}

// ---- reference implementations ------------------------------------------

inline double ref_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Layer outputs computed one scalar at a time: out[l] = X_l for l = 0..L.
inline std::vector<Eigen::MatrixXd> ref_forward(const SdaeNetwork& net,
                                                const Eigen::MatrixXd& x0) {
  std::vector<Eigen::MatrixXd> out{x0};
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& prev = out.back();
    const auto& W = net.weights[l];
    Eigen::MatrixXd next(prev.rows(), W.cols());
    for (Eigen::Index j = 0; j < prev.rows(); ++j) {
      for (Eigen::Index n = 0; n < W.cols(); ++n) {
        double z = net.biases[l][n];
        for (Eigen::Index k = 0; k < W.rows(); ++k) z += prev(j, k) * W(k, n);
        next(j, n) = ref_sigmoid(z);
      }
    }
    out.push_back(std::move(next));
  }
  return out;
}

/// -sum_ij C_ij/2 (R_ij - u_i.v_j)^2 by a double loop.
inline double ref_rating_objective(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                   const RatingsMatrix& R, const Confidence& conf) {
  const Eigen::MatrixXd D = dense(R);
  double total = 0.0;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    for (Eigen::Index j = 0; j < V.rows(); ++j) {
      double p = 0.0;
      for (Eigen::Index k = 0; k < U.cols(); ++k) p += U(i, k) * V(j, k);
      const double c = D(i, j) == 1.0 ? conf.a : conf.b;
      total -= 0.5 * c * (D(i, j) - p) * (D(i, j) - p);
    }
  }
  return total;
}

struct RefTerms {
  double user_prior = 0, weight_prior = 0, item_offset = 0, reconstruction = 0, rating = 0;
  double total() const { return user_prior + weight_prior + item_offset + reconstruction + rating; }
};

/// The full joint objective with every term written out by loops.
inline RefTerms ref_objective(double lu, double lv, double ln, double lw,
                              const Confidence& conf, const SdaeNetwork& net,
                              const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                              const RatingsMatrix& R, const Eigen::MatrixXd& x0,
                              const Eigen::MatrixXd& xc) {
  RefTerms t;
  for (Eigen::Index i = 0; i < U.size(); ++i) t.user_prior -= 0.5 * lu * U(i) * U(i);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index k = 0; k < net.weights[l].size(); ++k) {
      t.weight_prior -= 0.5 * lw * net.weights[l](k) * net.weights[l](k);
    }
    for (Eigen::Index k = 0; k < net.biases[l].size(); ++k) {
      t.weight_prior -= 0.5 * lw * net.biases[l](k) * net.biases[l](k);
    }
  }
  const auto layers = ref_forward(net, x0);
  const auto& code = layers[net.weights.size() / 2];
  const auto& top = layers.back();
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
      t.item_offset -= 0.5 * lv * (V(j, k) - code(j, k)) * (V(j, k) - code(j, k));
    }
    for (Eigen::Index s = 0; s < xc.cols(); ++s) {
      t.reconstruction -= 0.5 * ln * (top(j, s) - xc(j, s)) * (top(j, s) - xc(j, s));
    }
  }
  t.rating = ref_rating_objective(U, V, R, conf);
  return t;
}

/// Conjugate gradients on the u_i subproblem, built from scalar loops
/// (independent of the library's normal-equation assembly).
inline Eigen::VectorXd ref_solve_user(Index user, const Eigen::MatrixXd& V,
                                      const RatingsMatrix& R, const Confidence& conf,
                                      double lambda_u) {
  const Eigen::Index K = V.cols();
  Eigen::MatrixXd A = lambda_u * Eigen::MatrixXd::Identity(K, K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    const bool liked = R.contains(user, static_cast<Index>(j));
    const double c = liked ? conf.a : conf.b;
    for (Eigen::Index p = 0; p < K; ++p) {
      for (Eigen::Index q = 0; q < K; ++q) A(p, q) += c * V(j, p) * V(j, q);
      if (liked) b[p] += c * V(j, p);
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd r = b - A * x;
  Eigen::VectorXd d = r;
  for (int it = 0; it < 1000 && r.norm() > 1e-14; ++it) {
    const Eigen::VectorXd Ad = A * d;
    const double alpha = r.squaredNorm() / d.dot(Ad);
    x += alpha * d;
    Eigen::VectorXd r_next = r - alpha * Ad;
    const double beta = r_next.squaredNorm() / r.squaredNorm();
    r = r_next;
    d = r + beta * d;
  }
  return x;
}

/// Gradient of the user-i part of the objective.
inline Eigen::VectorXd ref_user_gradient(const Eigen::VectorXd& u, Index user,
                                         const Eigen::MatrixXd& V, const RatingsMatrix& R,
                                         const Confidence& conf, double lambda_u) {
  Eigen::VectorXd g = -lambda_u * u;
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    const bool liked = R.contains(user, static_cast<Index>(j));
    const double c = liked ? conf.a : conf.b;
    const double r = (liked ? 1.0 : 0.0) - V.row(j).dot(u);
    g += c * r * V.row(j).transpose();
  }
  return g;
}

inline Eigen::VectorXd ref_item_gradient(const Eigen::VectorXd& v, Index item,
                                         const Eigen::MatrixXd& U, const RatingsMatrix& R,
                                         const Confidence& conf, double lambda_v,
                                         const Eigen::VectorXd& encoding) {
  Eigen::VectorXd g = -lambda_v * (v - encoding);
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const bool liked = R.contains(static_cast<Index>(i), item);
    const double c = liked ? conf.a : conf.b;
    const double r = (liked ? 1.0 : 0.0) - U.row(i).dot(v);
    g += c * r * U.row(i).transpose();
  }
  return g;
}

/// Network terms of the objective evaluated with ref_forward on dense input.
inline double ref_network_objective(const SdaeNetwork& net, const Eigen::MatrixXd& x0,
                                    const Eigen::MatrixXd& xc, const Eigen::MatrixXd& V,
                                    const NetworkWeights& w) {
  const Eigen::MatrixXd no_users(0, V.cols());
  const RatingsMatrix no_ratings(0, static_cast<std::size_t>(V.rows()), {});
  return ref_objective(0.0, w.lambda_v, w.lambda_n, w.lambda_w, Confidence{}, net,
                       no_users, V, no_ratings, x0, xc)
      .total();
}

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares gradients() with central differences of ref_network_objective at
/// every weight and bias. Relative error uses max(|analytic|, |numeric|) with
/// a floor of 1e-4 so coordinates that are numerically zero compare on an
/// absolute scale.
inline GradientCheck check_network_gradient(const SdaeNetwork& net, const ContentMatrix& x0,
                                            const ContentMatrix& xc, const Eigen::MatrixXd& V,
                                            const NetworkWeights& w, double h = 1e-5) {
  const auto analytic = gradients(net, x0.values(), xc.values(), V, w);
  const Eigen::MatrixXd dx0 = x0.values(), dxc = xc.values();
  SdaeNetwork probe = net;
  GradientCheck out;
  auto compare = [&](double& param, double a) {
    const double keep = param;
    param = keep + h;
    const double up = ref_network_objective(probe, dx0, dxc, V, w);
    param = keep - h;
    const double down = ref_network_objective(probe, dx0, dxc, V, w);
    param = keep;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-4});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / scale);
    ++out.coordinates;
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index k = 0; k < net.weights[l].size(); ++k) {
      compare(probe.weights[l](k), analytic.weights[l](k));
    }
    for (Eigen::Index k = 0; k < net.biases[l].size(); ++k) {
      compare(probe.biases[l](k), analytic.biases[l](k));
    }
  }
  return out;
}

// ---- brute-force ranking metrics ----------------------------------------

/// Full ordering of candidate items for one user by exhaustive sort.
inline std::vector<Index> ref_ranking(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                      const RatingsMatrix& train, Index user,
                                      bool exclude_train) {
  std::vector<std::pair<double, Index>> scored;
  for (Index j = 0; j < V.rows(); ++j) {
    if (exclude_train && j < train.num_items() && user < train.num_users() &&
        train.contains(user, j)) {
      continue;
    }
    double s = 0.0;
    for (Eigen::Index k = 0; k < U.cols(); ++k) s += U(user, k) * V(j, k);
    scored.push_back({s, j});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<Index> out;
  for (const auto& p : scored) out.push_back(p.second);
  return out;
}

inline double ref_recall(const std::vector<Index>& order, const std::vector<Index>& liked,
                         std::size_t m) {
  std::size_t hits = 0;
  for (Index item : liked) {
    for (std::size_t r = 0; r < order.size() && r < m; ++r) {
      if (order[r] == item) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(liked.size());
}

inline double ref_average_precision(const std::vector<Index>& order,
                                    const std::vector<Index>& liked, std::size_t cutoff) {
  double sum = 0.0;
  for (Index item : liked) {
    for (std::size_t r = 0; r < order.size() && r < cutoff; ++r) {
      if (order[r] != item) continue;
      // precision at the rank of this hit
      std::size_t hits_so_far = 0;
      for (std::size_t q = 0; q <= r; ++q) {
        if (std::find(liked.begin(), liked.end(), order[q]) != liked.end()) ++hits_so_far;
      }
      sum += static_cast<double>(hits_so_far) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(liked.size());
}

}  // namespace cdl::test
