#include "cdl/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "cdl/error.hpp"
#include "cdl/parallel.hpp"
#include "text_util.hpp"

namespace cdl {

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.values.size();
  return n;
}

GridSpec parse_grid(const Config& config) {
  GridSpec spec;
  const auto& hyper_keys = hyper_config_keys();
  for (const auto& [key, value] : config.entries()) {
    const bool is_hyper =
        std::find(hyper_keys.begin(), hyper_keys.end(), key) != hyper_keys.end();
    const char sep = key == "widths" ? ';' : ',';
    if (!is_hyper || value.find(sep) == std::string::npos) {
      spec.base.set(key, value);
      continue;
    }
    GridAxis axis{key, {}};
    for (auto field : detail::split_on(value, sep)) {
      auto trimmed = detail::trim(field);
      if (trimmed.empty()) {
        fail(ErrorKind::kValidation, "empty grid value for \"" + key + "\"");
      }
      axis.values.emplace_back(trimmed);
    }
    spec.axes.push_back(std::move(axis));
  }
  return spec;
}

std::vector<Config> enumerate_grid(const GridSpec& spec) {
  std::vector<Config> out;
  const std::size_t n = spec.size();
  if (n == 0) fail(ErrorKind::kValidation, "empty grid");
  out.reserve(n);
  std::vector<std::size_t> digit(spec.axes.size(), 0);
  for (std::size_t p = 0; p < n; ++p) {
    Config c = spec.base;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
      c.set(spec.axes[a].key, spec.axes[a].values[digit[a]]);
    }
    out.push_back(std::move(c));
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      if (++digit[a] < spec.axes[a].values.size()) break;
      digit[a] = 0;
    }
  }
  return out;
}

std::vector<Fold> make_folds(const RatingsMatrix& ratings, std::size_t folds) {
  if (folds < 2) fail(ErrorKind::kValidation, "need at least 2 folds");
  std::vector<std::vector<Rating>> train(folds), valid(folds);
  for (Index u = 0; u < ratings.num_users(); ++u) {
    auto items = ratings.items_of(u);
    for (std::size_t k = 0; k < items.size(); ++k) {
      for (std::size_t f = 0; f < folds; ++f) {
        (k % folds == f ? valid[f] : train[f]).push_back({u, items[k]});
      }
    }
  }
  std::vector<Fold> out;
  for (std::size_t f = 0; f < folds; ++f) {
    out.push_back({RatingsMatrix(ratings.num_users(), ratings.num_items(),
                                 std::move(train[f])),
                   RatingsMatrix(ratings.num_users(), ratings.num_items(),
                                 std::move(valid[f]))});
  }
  return out;
}

GridResult grid_search(const GridSpec& spec, const RatingsMatrix& ratings,
                       const ContentMatrix* content,
                       const GridOptions& options) {
  const std::vector<Config> configs = enumerate_grid(spec);
  std::vector<HyperParams> hypers;
  for (const auto& c : configs) hypers.push_back(hyper_from_config(c));
  if (options.select_m == 0) fail(ErrorKind::kValidation, "select_m must be positive");
  const std::vector<Fold> folds = make_folds(ratings, options.folds);

  GridResult result;
  result.select_m = options.select_m;
  result.runs.resize(configs.size() * folds.size());
  std::mutex report_mutex;
  parallel_for(result.runs.size(), options.workers, [&](std::size_t r) {
    const std::size_t p = r / folds.size();
    const std::size_t f = r % folds.size();
    const Fold& fold = folds[f];
    FitResult fit = train(options.variant, fold.train, content, hypers[p]);
    const LatentFactors& fac = fit.model.factors;
    RankedList ranked = rank(fac.U, fac.V.topRows(ratings.num_items()), fold.train,
                             CandidatePolicy::kExcludeTrain, options.select_m);
    UserMetric metric = recall_at_m(ranked, fold.validation, options.select_m);
    GridRun run{p, f, metric.mean, metric.users.size()};
    result.runs[r] = run;
    std::lock_guard<std::mutex> lock(report_mutex);
    spdlog::info("grid point {} fold {}: recall@{} = {:.6f}", p, f,
                 options.select_m, run.metric);
    if (options.on_run) options.on_run(run);
  });

  for (std::size_t p = 0; p < configs.size(); ++p) {
    GridPoint point{p, configs[p], {}, 0.0};
    for (std::size_t f = 0; f < folds.size(); ++f) {
      point.fold_metrics.push_back(result.runs[p * folds.size() + f].metric);
      point.mean += point.fold_metrics.back();
    }
    point.mean /= static_cast<double>(folds.size());
    result.points.push_back(std::move(point));
  }
  std::stable_sort(result.points.begin(), result.points.end(),
                   [](const GridPoint& a, const GridPoint& b) { return a.mean > b.mean; });
  return result;
}

void GridResult::write_tsv(const std::filesystem::path& path,
                           const std::vector<GridAxis>& axes) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "rank\tpoint";
  for (const auto& a : axes) out << '\t' << a.key;
  const std::size_t nfolds = points.empty() ? 0 : points.front().fold_metrics.size();
  for (std::size_t f = 0; f < nfolds; ++f) out << "\tfold" << f;
  out << "\tmean_recall@" << select_m << '\n';
  char buf[64];
  for (std::size_t r = 0; r < points.size(); ++r) {
    const auto& p = points[r];
    out << r + 1 << '\t' << p.index;
    for (const auto& a : axes) out << '\t' << p.config.get(a.key).value_or("");
    for (double m : p.fold_metrics) {
      std::snprintf(buf, sizeof buf, "%.6f", m);
      out << '\t' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.6f", p.mean);
    out << '\t' << buf << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

void GridResult::write_runs_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "point\tfold\trecall@" << select_m << "\tusers\n";
  char buf[64];
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof buf, "%.6f", r.metric);
    out << r.point << '\t' << r.fold << '\t' << buf << '\t' << r.evaluated_users
        << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace cdl
