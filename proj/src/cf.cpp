#include "cdl/cf.hpp"

#include <string>

#include "cdl/error.hpp"
#include "cdl/parallel.hpp"

namespace cdl {

void Confidence::validate() const {
  if (!(a > b && b >= 0.0)) {
    fail(ErrorKind::kValidation, "confidence requires a > b >= 0 (a = " +
                                     std::to_string(a) +
                                     ", b = " + std::to_string(b) + ")");
  }
}

Eigen::MatrixXd confidence_gram(const Eigen::MatrixXd& factors,
                                const Confidence& conf) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(factors.cols(), factors.cols());
  if (conf.b != 0.0) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(factors.transpose(), conf.b);
    gram = gram.selfadjointView<Eigen::Lower>();
  }
  return gram;
}

namespace {

NormalSystem block_system(const Eigen::MatrixXd& other,
                          std::span<const Index> observed,
                          const Confidence& conf, double lambda,
                          const Eigen::MatrixXd& gram) {
  const Eigen::Index k = other.cols();
  if (gram.rows() != k || gram.cols() != k) {
    fail(ErrorKind::kShape, "Gram matrix does not match the factor rank");
  }
  NormalSystem system;
  system.precision = gram;
  system.precision.diagonal().array() += lambda;
  system.rhs = Eigen::VectorXd::Zero(k);
  const double extra = conf.a - conf.b;
  for (Index idx : observed) {
    if (idx >= other.rows()) {
      fail(ErrorKind::kShape, "rated index " + std::to_string(idx) +
                                  " beyond the factor matrix");
    }
    auto row = other.row(idx);
    system.precision.noalias() += extra * row.transpose() * row;
    system.rhs.noalias() += conf.a * row.transpose();
  }
  return system;
}

}  // namespace

NormalSystem user_system(const Eigen::MatrixXd& V, std::span<const Index> items,
                         const Confidence& conf, double lambda_u,
                         const Eigen::MatrixXd& gram) {
  return block_system(V, items, conf, lambda_u, gram);
}

NormalSystem item_system(const Eigen::MatrixXd& U, std::span<const Index> users,
                         const Confidence& conf, double lambda_v,
                         const Eigen::RowVectorXd& encoding,
                         const Eigen::MatrixXd& gram) {
  if (encoding.size() != U.cols()) {
    fail(ErrorKind::kShape, "encoding width " + std::to_string(encoding.size()) +
                                " differs from rank " +
                                std::to_string(U.cols()));
  }
  NormalSystem system = block_system(U, users, conf, lambda_v, gram);
  system.rhs.noalias() += lambda_v * encoding.transpose();
  return system;
}

Eigen::VectorXd solve_spd(const NormalSystem& system) {
  if (!system.precision.allFinite() || !system.rhs.allFinite()) {
    fail(ErrorKind::kNumeric, "non-finite normal equations");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(system.precision);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::kNumeric, "normal equations are not positive definite");
  }
  return llt.solve(system.rhs);
}

Eigen::VectorXd update_user(Index user, const Eigen::MatrixXd& V,
                            const RatingsMatrix& ratings, const Confidence& conf,
                            double lambda_u) {
  return solve_spd(user_system(V, ratings.items_of(user), conf, lambda_u,
                               confidence_gram(V, conf)));
}

Eigen::VectorXd update_item(Index item, const Eigen::MatrixXd& U,
                            const RatingsMatrix& ratings, const Confidence& conf,
                            double lambda_v, const Eigen::RowVectorXd& encoding) {
  return solve_spd(item_system(U, ratings.users_of(item), conf, lambda_v,
                               encoding, confidence_gram(U, conf)));
}

void sweep_users(LatentFactors& factors, const RatingsMatrix& ratings,
                 const Confidence& conf, double lambda_u, std::size_t threads) {
  if (static_cast<std::size_t>(factors.U.rows()) != ratings.num_users()) {
    fail(ErrorKind::kShape, "U has " + std::to_string(factors.U.rows()) +
                                " rows for " +
                                std::to_string(ratings.num_users()) + " users");
  }
  const Eigen::MatrixXd gram = confidence_gram(factors.V, conf);
  parallel_for(ratings.num_users(), threads, [&](std::size_t i) {
    auto system = user_system(factors.V, ratings.items_of(static_cast<Index>(i)),
                              conf, lambda_u, gram);
    factors.U.row(i) = solve_spd(system).transpose();
  });
}

void sweep_items(LatentFactors& factors, const RatingsMatrix& ratings,
                 const Confidence& conf, double lambda_v,
                 const Eigen::MatrixXd& encodings, std::size_t threads) {
  if (static_cast<std::size_t>(factors.V.rows()) != ratings.num_items() ||
      encodings.rows() != factors.V.rows() ||
      encodings.cols() != factors.V.cols()) {
    fail(ErrorKind::kShape, "item factors, encodings and ratings disagree");
  }
  const Eigen::MatrixXd gram = confidence_gram(factors.U, conf);
  parallel_for(ratings.num_items(), threads, [&](std::size_t j) {
    auto system =
        item_system(factors.U, ratings.users_of(static_cast<Index>(j)), conf,
                    lambda_v, encodings.row(j), gram);
    factors.V.row(j) = solve_spd(system).transpose();
  });
}

double predict(const Eigen::RowVectorXd& user, const Eigen::RowVectorXd& item) {
  if (user.size() != item.size()) {
    fail(ErrorKind::kShape, "user and item vectors differ in width");
  }
  return user.dot(item);
}

double predict_new_item(const Eigen::RowVectorXd& user,
                        const Eigen::RowVectorXd& encoding) {
  return predict(user, encoding);
}

double rating_objective(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                        const RatingsMatrix& ratings, const Confidence& conf) {
  if (U.cols() != V.cols() ||
      static_cast<std::size_t>(U.rows()) != ratings.num_users() ||
      static_cast<std::size_t>(V.rows()) != ratings.num_items()) {
    fail(ErrorKind::kShape, "factor shapes do not match the ratings");
  }
  // b * sum over all pairs of (u.v)^2, then correct the observed pairs.
  double all_pairs = 0.0;
  if (conf.b != 0.0) {
    Eigen::MatrixXd uu = U.transpose() * U;
    Eigen::MatrixXd vv = V.transpose() * V;
    all_pairs = conf.b * uu.cwiseProduct(vv).sum();
  }
  double observed = 0.0;
  for (Index i = 0; i < ratings.num_users(); ++i) {
    for (Index j : ratings.items_of(i)) {
      const double p = U.row(i).dot(V.row(j));
      observed += conf.a * (1.0 - p) * (1.0 - p) - conf.b * p * p;
    }
  }
  return -0.5 * (all_pairs + observed);
}

}  // namespace cdl
