#pragma once

// Hyperparameter grid search with per-user k-fold cross-validation on the
// training ratings.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cdl/config.hpp"
#include "cdl/dataio.hpp"
#include "cdl/eval.hpp"
#include "cdl/trainer.hpp"

namespace cdl {

inline constexpr std::size_t kDefaultFolds = 5;
inline constexpr std::size_t kDefaultSelectM = 300;

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

/// A configuration in which hyperparameter keys may hold lists: scalar keys
/// separate values with ',', "widths" separates whole width lists with ';'.
struct GridSpec {
  Config base;  // every non-list entry
  std::vector<GridAxis> axes;

  std::size_t size() const;
};

/// Splits list-valued hyperparameter keys into axes. An empty list element
/// is a validation error.
GridSpec parse_grid(const Config& config);

/// Every grid point, first axis varying slowest.
std::vector<Config> enumerate_grid(const GridSpec& spec);

struct Fold {
  RatingsMatrix train;
  RatingsMatrix validation;
};

/// Each user's sorted items are dealt round-robin into `folds` parts; fold f
/// validates on part f and trains on the rest.
std::vector<Fold> make_folds(const RatingsMatrix& ratings, std::size_t folds);

struct GridRun {
  std::size_t point = 0;
  std::size_t fold = 0;
  double metric = 0.0;  // mean recall@select_m on the validation part
  std::size_t evaluated_users = 0;
};

struct GridPoint {
  std::size_t index = 0;  // enumeration order
  Config config;
  std::vector<double> fold_metrics;
  double mean = 0.0;
};

struct GridResult {
  std::vector<GridPoint> points;  // sorted by mean descending, stable
  std::vector<GridRun> runs;      // (point, fold) order
  std::size_t select_m = kDefaultSelectM;

  const GridPoint& best() const { return points.front(); }
  /// Columns: rank, point, each axis key, fold metrics, mean.
  void write_tsv(const std::filesystem::path& path,
                 const std::vector<GridAxis>& axes) const;
  void write_runs_tsv(const std::filesystem::path& path) const;
};

struct GridOptions {
  Variant variant = Variant::kCdl;
  std::size_t folds = kDefaultFolds;
  std::size_t select_m = kDefaultSelectM;
  std::size_t workers = 1;  // concurrent training runs
  std::function<void(const GridRun&)> on_run;
};

/// Trains every (point, fold) pair and selects the point with the highest
/// mean recall@select_m; ties go to the earlier point.
GridResult grid_search(const GridSpec& spec, const RatingsMatrix& ratings,
                       const ContentMatrix* content, const GridOptions& options);

}  // namespace cdl
