#include "cdl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "cdl/error.hpp"
#include "cdl/parallel.hpp"

namespace cdl {

namespace {

template <typename PerUser>
UserMetric per_user_metric(const RankedList& ranked, const RatingsMatrix& test,
                           PerUser&& per_user) {
  UserMetric out;
  for (Index u = 0; u < test.num_users(); ++u) {
    auto liked = test.items_of(u);
    if (liked.empty()) continue;
    static const std::vector<Index> kNone;
    const auto& list = u < ranked.items.size() ? ranked.items[u] : kNone;
    out.users.push_back(u);
    out.values.push_back(per_user(list, liked));
  }
  if (!out.values.empty()) {
    out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) /
               static_cast<double>(out.values.size());
  }
  return out;
}

std::size_t hits_in_prefix(const std::vector<Index>& list,
                           std::span<const Index> liked, std::size_t m) {
  const std::size_t n = std::min(m, list.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    hits += std::binary_search(liked.begin(), liked.end(), list[r]) ? 1 : 0;
  }
  return hits;
}

}  // namespace

std::vector<std::size_t> default_m_grid() { return {50, 100, 150, 200, 250, 300}; }

RankedList rank(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                const RatingsMatrix& train, CandidatePolicy policy,
                std::size_t depth, std::span<const Index> users,
                std::size_t threads) {
  if (U.cols() != V.cols()) fail(ErrorKind::kShape, "U and V ranks differ");
  if (static_cast<std::size_t>(V.rows()) < train.num_items() ||
      static_cast<std::size_t>(U.rows()) < train.num_users()) {
    fail(ErrorKind::kShape, "factors smaller than the training matrix");
  }
  RankedList ranked;
  ranked.policy = policy;
  ranked.items.resize(U.rows());
  std::vector<Index> all_users;
  if (users.empty()) {
    all_users.resize(U.rows());
    std::iota(all_users.begin(), all_users.end(), Index{0});
    users = all_users;
  }
  parallel_for(users.size(), threads, [&](std::size_t k) {
    const Index u = users[k];
    if (u >= U.rows()) fail(ErrorKind::kArgument, "unknown user " + std::to_string(u));
    Eigen::VectorXd scores = V * U.row(u).transpose();
    auto seen = train.items_of(u);
    std::vector<Index> candidates;
    candidates.reserve(V.rows());
    for (Index j = 0; j < V.rows(); ++j) {
      if (policy == CandidatePolicy::kExcludeTrain &&
          std::binary_search(seen.begin(), seen.end(), j)) {
        continue;
      }
      candidates.push_back(j);
    }
    auto better = [&](Index x, Index y) {
      if (scores[x] != scores[y]) return scores[x] > scores[y];
      return x < y;
    };
    const std::size_t keep = std::min(depth, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), better);
    candidates.resize(keep);
    ranked.items[u] = std::move(candidates);
  });
  return ranked;
}

UserMetric recall_at_m(const RankedList& ranked, const RatingsMatrix& test,
                       std::size_t m) {
  if (m == 0) fail(ErrorKind::kArgument, "M must be at least 1");
  return per_user_metric(ranked, test, [m](const auto& list, auto liked) {
    return static_cast<double>(hits_in_prefix(list, liked, m)) /
           static_cast<double>(liked.size());
  });
}

UserMetric precision_at_m(const RankedList& ranked, const RatingsMatrix& test,
                          std::size_t m) {
  if (m == 0) fail(ErrorKind::kArgument, "M must be at least 1");
  return per_user_metric(ranked, test, [m](const auto& list, auto liked) {
    return static_cast<double>(hits_in_prefix(list, liked, m)) /
           static_cast<double>(m);
  });
}

UserMetric average_precision(const RankedList& ranked,
                             const RatingsMatrix& test, std::size_t cutoff) {
  return per_user_metric(ranked, test, [cutoff](const auto& list, auto liked) {
    const std::size_t n = std::min(cutoff, list.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (std::binary_search(liked.begin(), liked.end(), list[r])) {
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    return sum / static_cast<double>(liked.size());
  });
}

RepetitionMetrics evaluate_ranking(const RankedList& ranked,
                                   const RatingsMatrix& test,
                                   std::span<const std::size_t> m_grid) {
  RepetitionMetrics out;
  for (std::size_t m : m_grid) {
    auto recall = recall_at_m(ranked, test, m);
    out.recall.push_back(recall.mean);
    out.evaluated_users = recall.users.size();
  }
  auto ap = average_precision(ranked, test, kMapCutoff);
  out.map = ap.mean;
  out.evaluated_users = ap.users.size();
  return out;
}

MetricReport aggregate(std::span<const std::size_t> m_grid,
                       std::vector<RepetitionMetrics> repetitions) {
  if (repetitions.empty()) {
    fail(ErrorKind::kArgument, "aggregate needs at least one repetition");
  }
  MetricReport report;
  report.m_grid.assign(m_grid.begin(), m_grid.end());
  for (const auto& rep : repetitions) {
    if (rep.recall.size() != m_grid.size()) {
      fail(ErrorKind::kShape, "repetition recall does not match the M grid");
    }
  }
  report.repetitions = std::move(repetitions);
  const auto n = static_cast<double>(report.repetitions.size());
  auto mean_std = [&](auto&& value) {
    double mean = 0.0;
    for (const auto& rep : report.repetitions) mean += value(rep);
    mean /= n;
    double ss = 0.0;
    for (const auto& rep : report.repetitions) {
      ss += (value(rep) - mean) * (value(rep) - mean);
    }
    double sd = report.repetitions.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return std::pair{mean, sd};
  };
  for (std::size_t k = 0; k < m_grid.size(); ++k) {
    auto [mean, sd] = mean_std([k](const RepetitionMetrics& r) { return r.recall[k]; });
    report.recall_mean.push_back(mean);
    report.recall_std.push_back(sd);
  }
  auto [map_mean, map_sd] = mean_std([](const RepetitionMetrics& r) { return r.map; });
  report.map_mean = map_mean;
  report.map_std = map_sd;
  return report;
}

void MetricReport::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "row";
  for (std::size_t m : m_grid) out << "\trecall@" << m;
  out << "\tmAP@" << kMapCutoff << "\tusers\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (std::size_t r = 0; r < repetitions.size(); ++r) {
    out << r;
    for (double v : repetitions[r].recall) out << '\t' << num(v);
    out << '\t' << num(repetitions[r].map) << '\t'
        << repetitions[r].evaluated_users << '\n';
  }
  out << "mean";
  for (double v : recall_mean) out << '\t' << num(v);
  out << '\t' << num(map_mean) << "\t-\n";
  out << "std";
  for (double v : recall_std) out << '\t' << num(v);
  out << '\t' << num(map_std) << "\t-\n";
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace cdl
