#pragma once

// Confidence-weighted matrix factorization with an encoder-centred item
// prior: exact block updates for user and item factors, prediction and the
// rating term of the objective.

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "cdl/dataio.hpp"

namespace cdl {

/// C_ij = a for observed entries and b otherwise.
struct Confidence {
  double a = 1.0;
  double b = 0.01;

  void validate() const;
  friend bool operator==(const Confidence&, const Confidence&) = default;
};

struct LatentFactors {
  Eigen::MatrixXd U;  // I x K, row i = u_i
  Eigen::MatrixXd V;  // J x K, row j = v_j

  std::size_t rank() const noexcept { return static_cast<std::size_t>(U.cols()); }
  friend bool operator==(const LatentFactors&, const LatentFactors&) = default;
};

/// precision * x = rhs, the stationarity condition of one block.
struct NormalSystem {
  Eigen::MatrixXd precision;
  Eigen::VectorXd rhs;
};

/// b * F^T F, shared by every block of a sweep over the other side.
Eigen::MatrixXd confidence_gram(const Eigen::MatrixXd& factors,
                                const Confidence& conf);

/// System for u_i: (b V^T V + (a - b) sum_obs v v^T + lambda_u I) u = a sum_obs v.
NormalSystem user_system(const Eigen::MatrixXd& V, std::span<const Index> items,
                         const Confidence& conf, double lambda_u,
                         const Eigen::MatrixXd& gram);

/// System for v_j; the prior mean is the item's encoding.
NormalSystem item_system(const Eigen::MatrixXd& U, std::span<const Index> users,
                         const Confidence& conf, double lambda_v,
                         const Eigen::RowVectorXd& encoding,
                         const Eigen::MatrixXd& gram);

/// Cholesky solve; numeric error when the system is not SPD.
Eigen::VectorXd solve_spd(const NormalSystem& system);

Eigen::VectorXd update_user(Index user, const Eigen::MatrixXd& V,
                            const RatingsMatrix& ratings, const Confidence& conf,
                            double lambda_u);
Eigen::VectorXd update_item(Index item, const Eigen::MatrixXd& U,
                            const RatingsMatrix& ratings, const Confidence& conf,
                            double lambda_v, const Eigen::RowVectorXd& encoding);

/// Replaces every u_i with its exact block maximizer given V.
void sweep_users(LatentFactors& factors, const RatingsMatrix& ratings,
                 const Confidence& conf, double lambda_u,
                 std::size_t threads = 1);
/// Replaces every v_j given U; `encodings` is J x K (row j = prior mean).
void sweep_items(LatentFactors& factors, const RatingsMatrix& ratings,
                 const Confidence& conf, double lambda_v,
                 const Eigen::MatrixXd& encodings, std::size_t threads = 1);

double predict(const Eigen::RowVectorXd& user, const Eigen::RowVectorXd& item);
/// Cold-start score: the item offset is zero, so v_j is the encoding.
double predict_new_item(const Eigen::RowVectorXd& user,
                        const Eigen::RowVectorXd& encoding);

/// -sum_ij C_ij / 2 (R_ij - u_i^T v_j)^2 without touching unobserved pairs
/// individually.
double rating_objective(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                        const RatingsMatrix& ratings, const Confidence& conf);

}  // namespace cdl
