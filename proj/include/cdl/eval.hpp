#pragma once

// Top-M ranking, recall@M, truncated mAP and aggregation over repeated
// splits.

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdl/dataio.hpp"

namespace cdl {

enum class CandidatePolicy {
  kExcludeTrain,  // a user's training items never compete
  kAllItems,
};

struct RankedList {
  /// items[i]: item ids for user i, best first. Users that were not ranked
  /// have an empty list.
  std::vector<std::vector<Index>> items;
  CandidatePolicy policy = CandidatePolicy::kExcludeTrain;
};

inline constexpr std::size_t kMapCutoff = 500;

/// 50, 100, ..., 300.
std::vector<std::size_t> default_m_grid();

/// Sorts candidates by u_i . v_j descending, ties by ascending item id, and
/// keeps the first `depth`. `users` empty means every user.
RankedList rank(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                const RatingsMatrix& train, CandidatePolicy policy,
                std::size_t depth = std::numeric_limits<std::size_t>::max(),
                std::span<const Index> users = {}, std::size_t threads = 1);

struct UserMetric {
  std::vector<Index> users;  // users with a non-empty test set
  std::vector<double> values;
  double mean = 0.0;  // 0 when no user is evaluated
};

/// |top-M intersect test| / |test| per user with test items.
UserMetric recall_at_m(const RankedList& ranked, const RatingsMatrix& test,
                       std::size_t m);

/// Average precision truncated at `cutoff`, normalized by |test|.
UserMetric average_precision(const RankedList& ranked,
                             const RatingsMatrix& test,
                             std::size_t cutoff = kMapCutoff);

/// Debug-only companion metric: |top-M intersect test| / M.
UserMetric precision_at_m(const RankedList& ranked, const RatingsMatrix& test,
                          std::size_t m);

struct RepetitionMetrics {
  std::vector<double> recall;  // one per M in the grid
  double map = 0.0;
  std::size_t evaluated_users = 0;
};

RepetitionMetrics evaluate_ranking(const RankedList& ranked,
                                   const RatingsMatrix& test,
                                   std::span<const std::size_t> m_grid);

struct MetricReport {
  std::vector<std::size_t> m_grid;
  std::vector<RepetitionMetrics> repetitions;
  std::vector<double> recall_mean;
  std::vector<double> recall_std;
  double map_mean = 0.0;
  double map_std = 0.0;

  /// Header, one row per repetition, then "mean" and "std" rows.
  void write_tsv(const std::filesystem::path& path) const;
};

/// Mean and sample standard deviation (n - 1; zero for one repetition).
MetricReport aggregate(std::span<const std::size_t> m_grid,
                       std::vector<RepetitionMetrics> repetitions);

}  // namespace cdl
