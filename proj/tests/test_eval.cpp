#include <doctest.h>

#include "cdl/eval.hpp"
#include "support.hpp"

using namespace cdl;
using namespace cdl::test;

namespace {

RankedList one_user(std::vector<Index> order) {
  RankedList r;
  r.items.push_back(std::move(order));
  return r;
}

}  // namespace

TEST_CASE("ranking by score with deterministic ties") {
  Eigen::MatrixXd U(1, 1), V(3, 1);
  U << 1;
  V << 0.9, 0.1, 0.5;
  RatingsMatrix none(1, 3, {});
  auto ranked = rank(U, V, none, CandidatePolicy::kAllItems);
  CHECK(ranked.items[0] == std::vector<Index>{0, 2, 1});

  V << 0.5, 0.9, 0.5;
  ranked = rank(U, V, none, CandidatePolicy::kAllItems);
  CHECK(ranked.items[0] == std::vector<Index>{1, 0, 2});
}

TEST_CASE("exclude-train drops exactly the training items") {
  std::mt19937_64 rng(1);
  auto train = random_ratings(6, 12, 0.3, rng);
  auto U = random_matrix(6, 3, rng), V = random_matrix(12, 3, rng);
  auto ranked = rank(U, V, train, CandidatePolicy::kExcludeTrain);
  for (Index u = 0; u < 6; ++u) {
    CHECK(ranked.items[u].size() == 12 - train.items_of(u).size());
    for (Index j : ranked.items[u]) CHECK_FALSE(train.contains(u, j));
  }
  auto limited = rank(U, V, train, CandidatePolicy::kExcludeTrain, 3);
  for (Index u = 0; u < 6; ++u) {
    const std::size_t n = std::min<std::size_t>(3, ranked.items[u].size());
    CHECK(limited.items[u] ==
          std::vector<Index>(ranked.items[u].begin(), ranked.items[u].begin() + n));
  }
  const std::vector<Index> some{1, 4};
  auto partial = rank(U, V, train, CandidatePolicy::kExcludeTrain, 100, some, 2);
  CHECK(partial.items[0].empty());
  CHECK(partial.items[4] == ranked.items[4]);
}

TEST_CASE("recall examples") {
  // liked {A=0, B=1, C=2}, top-2 {A, D=3}
  RatingsMatrix test(1, 5, {{0, 0}, {0, 1}, {0, 2}});
  auto ranked = one_user({0, 3, 1, 2, 4});
  CHECK(recall_at_m(ranked, test, 2).mean == doctest::Approx(1.0 / 3.0));
  CHECK(recall_at_m(ranked, test, 4).mean == 1.0);
  CHECK(recall_at_m(ranked, test, 100).mean == 1.0);
}

TEST_CASE("users without test items are excluded from the mean") {
  RatingsMatrix test(2, 3, {{1, 2}});
  RankedList ranked;
  ranked.items = {{0, 1, 2}, {2, 0, 1}};
  auto r = recall_at_m(ranked, test, 1);
  CHECK(r.users == std::vector<Index>{1});
  CHECK(r.mean == 1.0);
  RatingsMatrix empty(2, 3, {});
  CHECK(recall_at_m(ranked, empty, 1).mean == 0.0);
  CHECK(recall_at_m(ranked, empty, 1).users.empty());
}

TEST_CASE("average precision examples") {
  RatingsMatrix single(1, 4, {{0, 2}});
  CHECK(average_precision(one_user({2, 0, 1, 3}), single).mean == 1.0);

  RatingsMatrix two(1, 4, {{0, 0}, {0, 2}});
  CHECK(average_precision(one_user({0, 1, 2, 3}), two).mean ==
        doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  // a hit at rank 501 is past the cutoff
  std::vector<Index> order(600);
  for (Index j = 0; j < 600; ++j) order[j] = j;
  RatingsMatrix late(1, 600, {{0, 500}});
  CHECK(average_precision(one_user(order), late).mean == 0.0);
  RatingsMatrix edge(1, 600, {{0, 499}});
  CHECK(average_precision(one_user(order), edge).mean == doctest::Approx(1.0 / 500));

  // without a cutoff, one liked item scores its reciprocal rank
  RatingsMatrix third(1, 600, {{0, 2}});
  CHECK(average_precision(one_user(order), third, 100000).mean ==
        doctest::Approx(1.0 / 3.0));
}

TEST_CASE("aggregation across repetitions") {
  const std::vector<std::size_t> grid{50};
  std::vector<RepetitionMetrics> reps{{{0.2}, 0.1, 3}, {{0.4}, 0.1, 3}};
  auto report = aggregate(grid, reps);
  CHECK(report.recall_mean[0] == doctest::Approx(0.3));
  CHECK(report.recall_std[0] == doctest::Approx(0.1414213562373095).epsilon(1e-12));
  CHECK(report.map_std == 0.0);

  std::vector<RepetitionMetrics> five(5, RepetitionMetrics{{0.25}, 0.05, 4});
  auto flat = aggregate(grid, five);
  CHECK(flat.repetitions.size() == 5);
  CHECK(flat.recall_std[0] == 0.0);

  auto dir = temp_dir("eval_report");
  flat.write_tsv(dir / "m.tsv");
  const auto text = read_file(dir / "m.tsv");
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 1 + 5 + 2);
  CHECK(text.find("mean") != std::string::npos);
  CHECK(text.find("std") != std::string::npos);
}

TEST_CASE("default recall grid") {
  CHECK(default_m_grid() == std::vector<std::size_t>{50, 100, 150, 200, 250, 300});
  CHECK(kMapCutoff == 500);
}

TEST_CASE("metrics match brute force on every small instance") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 15);
  for (int trial = 0; trial < 200; ++trial) {
    const int I = dim(rng), J = dim(rng), K = 1 + trial % 3;
    auto full = random_ratings(I, J, 0.4, rng);
    auto split = split_ratings(full, 1 + trial % 3, trial);
    // coarse scores provoke ties
    Eigen::MatrixXd U = random_matrix(I, K, rng).array().round();
    Eigen::MatrixXd V = random_matrix(J, K, rng).array().round();
    const bool exclude = trial % 2 == 0;
    auto ranked = rank(U, V, split.train,
                       exclude ? CandidatePolicy::kExcludeTrain : CandidatePolicy::kAllItems);
    const std::vector<std::size_t> grid{1, 2, 3, 5, 8, 13};
    auto metrics = evaluate_ranking(ranked, split.test, grid);

    std::vector<double> recall_sum(grid.size(), 0.0);
    double ap_sum = 0.0;
    std::size_t users = 0;
    for (Index u = 0; u < I; ++u) {
      auto order = ref_ranking(U, V, split.train, u, exclude);
      CHECK(ranked.items[u] == order);
      auto liked_span = split.test.items_of(u);
      std::vector<Index> liked(liked_span.begin(), liked_span.end());
      if (liked.empty()) continue;
      ++users;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        recall_sum[g] += ref_recall(order, liked, grid[g]);
      }
      ap_sum += ref_average_precision(order, liked, 500);
    }
    CHECK(metrics.evaluated_users == users);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double expect = users ? recall_sum[g] / users : 0.0;
      CHECK(metrics.recall[g] == doctest::Approx(expect).epsilon(1e-14));
      if (g > 0) CHECK(metrics.recall[g] >= metrics.recall[g - 1]);
    }
    CHECK(metrics.map == doctest::Approx(users ? ap_sum / users : 0.0).epsilon(1e-14));
    CHECK(metrics.map >= 0.0);
    CHECK(metrics.map <= 1.0);
  }
}

TEST_CASE("precision at m") {
  RatingsMatrix test(1, 5, {{0, 0}, {0, 1}});
  auto p = precision_at_m(one_user({0, 3, 1, 2, 4}), test, 4);
  CHECK(p.mean == 0.5);
}
