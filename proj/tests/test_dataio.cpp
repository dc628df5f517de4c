#include <doctest.h>

#include <limits>
#include <set>

#include "cdl/synthetic.hpp"
#include "support.hpp"

using namespace cdl;
using namespace cdl::test;

TEST_CASE("ratings file read-back") {
  auto dir = temp_dir("dataio_ratings");
  write_file(dir / "r.tsv", "0\t0\n1\t2\n");
  auto r = load_ratings(dir / "r.tsv");
  CHECK(r.num_users() == 2);
  CHECK(r.num_items() == 3);
  CHECK(r.nnz() == 2);
  CHECK(r.contains(0, 0));
  CHECK(r.contains(1, 2));
  CHECK_FALSE(r.contains(1, 0));
}

TEST_CASE("empty ratings file") {
  auto dir = temp_dir("dataio_empty");
  write_file(dir / "r.tsv", "");
  auto r = load_ratings(dir / "r.tsv");
  CHECK(r.num_users() == 0);
  CHECK(r.num_items() == 0);
  CHECK(r.nnz() == 0);
}

TEST_CASE("ratings parse and duplicate errors") {
  auto dir = temp_dir("dataio_errors");
  write_file(dir / "bad.tsv", "a b\n");
  auto e = caught([&] { load_ratings(dir / "bad.tsv"); });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kParse);
  CHECK(e->message.find(":1:") != std::string::npos);

  write_file(dir / "dup.tsv", "0\t1\n0\t1\n");
  e = caught([&] { load_ratings(dir / "dup.tsv"); });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kValidation);

  e = caught([&] { load_ratings(dir / "missing.tsv"); });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kIo);
  CHECK(e->message.find("missing.tsv") != std::string::npos);
}

TEST_CASE("dims header widens and save round-trips") {
  auto dir = temp_dir("dataio_dims");
  write_file(dir / "r.tsv", "# dims 5 7\n0\t1\n3\t6\n");
  auto r = load_ratings(dir / "r.tsv");
  CHECK(r.num_users() == 5);
  CHECK(r.num_items() == 7);
  save_ratings(r, dir / "out.tsv");
  CHECK(load_ratings(dir / "out.tsv") == r);

  write_file(dir / "small.tsv", "# dims 1 1\n3\t6\n");
  auto e = caught([&] { load_ratings(dir / "small.tsv"); });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kValidation);
}

TEST_CASE("count-maxnorm and binary normalization") {
  std::vector<ContentTriple> t{{0, 0, 3.0}, {0, 1, 1.0}};
  auto maxnorm = normalize_content(1, 3, t, Normalization::kCountMaxNorm);
  CHECK(maxnorm.values().coeff(0, 0) == 1.0);
  CHECK(maxnorm.values().coeff(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(maxnorm.values().coeff(0, 2) == 0.0);

  auto binary = normalize_content(1, 3, t, Normalization::kBinaryPresence);
  CHECK(binary.values().coeff(0, 0) == 1.0);
  CHECK(binary.values().coeff(0, 1) == 1.0);
  CHECK(binary.values().coeff(0, 2) == 0.0);
}

TEST_CASE("all-zero content row stays zero") {
  std::vector<ContentTriple> t{{0, 0, 2.0}};
  auto c = normalize_content(2, 2, t, Normalization::kCountMaxNorm);
  CHECK(c.empty_rows() == 1);
  CHECK(c.values().row(1).nonZeros() == 0);
}

TEST_CASE("content validation errors") {
  std::vector<ContentTriple> big_word{{0, 5, 1.0}};
  auto e = caught([&] {
    normalize_content(1, 3, big_word, Normalization::kBinaryPresence);
  });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kValidation);

  auto dir = temp_dir("dataio_content");
  write_file(dir / "neg.tsv", "0\t0\t-1\n");
  e = caught([&] { load_content(dir / "neg.tsv", Normalization::kBinaryPresence); });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kValidation);

  write_file(dir / "over.tsv", "# dims 1 2\n0\t4\t1\n");
  e = caught([&] { load_content(dir / "over.tsv", Normalization::kBinaryPresence); });
  REQUIRE(e);
  CHECK(e->kind == ErrorKind::kValidation);
}

TEST_CASE("content values lie in [0, 1] and save round-trips") {
  std::mt19937_64 rng(3);
  auto c = random_graded_content(20, 15, rng);
  const auto& v = c.values();
  for (int k = 0; k < v.nonZeros(); ++k) {
    CHECK(v.valuePtr()[k] > 0.0);
    CHECK(v.valuePtr()[k] <= 1.0);
  }
  auto dir = temp_dir("dataio_content_rt");
  save_content(c, dir / "c.tsv");
  auto back = load_content(dir / "c.tsv", Normalization::kCountMaxNorm);
  CHECK(back.num_items() == c.num_items());
  CHECK(back.vocab_size() == c.vocab_size());
  CHECK((Eigen::MatrixXd(back.values()) - Eigen::MatrixXd(c.values())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corruption edge cases") {
  std::mt19937_64 rng(1);
  auto c = random_graded_content(30, 40, rng);
  auto same = corrupt(c, 0.0, 9);
  CHECK((Eigen::MatrixXd(same.values()) - Eigen::MatrixXd(c.values())).cwiseAbs().maxCoeff() == 0.0);
  auto none = corrupt(c, 1.0, 9);
  CHECK(none.nnz() == 0);
  CHECK(caught([&] { corrupt(c, 1.5, 9); })->kind == ErrorKind::kArgument);
  CHECK(caught([&] { corrupt(c, -0.1, 9); })->kind == ErrorKind::kArgument);
}

TEST_CASE("masked fraction concentrates around the noise level") {
  // 10^5 stored ones; binomial sd is ~0.0014, so +-0.01 is a 7-sigma band
  std::vector<ContentTriple> t;
  for (Index j = 0; j < 1000; ++j) {
    for (Index w = 0; w < 100; ++w) t.push_back({j, w, 1.0});
  }
  auto c = normalize_content(1000, 100, t, Normalization::kBinaryPresence);
  REQUIRE(c.nnz() == 100000);
  auto x0 = corrupt(c, 0.3, 42);
  const double masked = 1.0 - static_cast<double>(x0.nnz()) / 1e5;
  CHECK(std::abs(masked - 0.3) < 0.01);

  // surviving entries are untouched, zeros stay zero
  Eigen::MatrixXd clean = c.values(), noisy = x0.values();
  CHECK((noisy.array() <= clean.array()).all());
  CHECK(((noisy.array() == 0.0) || (noisy.array() == clean.array())).all());

  auto again = corrupt(c, 0.3, 42);
  CHECK(Eigen::MatrixXd(again.values()) == noisy);
}

TEST_CASE("split examples") {
  std::vector<Rating> e;
  for (Index j = 0; j < 5; ++j) e.push_back({0, j});
  e.push_back({1, 0});
  e.push_back({1, 3});
  RatingsMatrix r(2, 5, e);

  auto s = split_ratings(r, 1, 7);
  CHECK(s.train.items_of(0).size() == 1);
  CHECK(s.test.items_of(0).size() == 4);
  CHECK(s.eval_users == std::vector<Index>{0, 1});

  auto dense_split = split_ratings(r, 10, 7);
  CHECK(dense_split.train.items_of(1).size() == 2);
  CHECK(dense_split.test.nnz() == 0);
  CHECK(dense_split.eval_users.empty());

  auto again = split_ratings(r, 1, 7);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
}

TEST_CASE("split preserves the entry multiset") {
  std::mt19937_64 rng(11);
  auto r = random_ratings(40, 60, 0.15, rng);
  for (std::size_t P : {1u, 3u, 10u}) {
    auto s = split_ratings(r, P, 100 + P);
    CHECK(s.train.nnz() + s.test.nnz() == r.nnz());
    for (const auto& x : s.train.entries()) {
      CHECK(r.contains(x.user, x.item));
      CHECK_FALSE(s.test.contains(x.user, x.item));
    }
    for (const auto& x : s.test.entries()) CHECK(r.contains(x.user, x.item));
    for (Index u = 0; u < r.num_users(); ++u) {
      const auto n = r.items_of(u).size();
      CHECK(s.train.items_of(u).size() == std::min(n, P));
    }
  }
}

TEST_CASE("split draws every item with equal probability") {
  // one user with 4 items, P = 1: each item lands in train ~1/4 of the time
  RatingsMatrix r(1, 4, {{0, 0}, {0, 1}, {0, 2}, {0, 3}});
  std::vector<int> hits(4, 0);
  const int trials = 8000;
  for (int t = 0; t < trials; ++t) {
    auto s = split_ratings(r, 1, static_cast<std::uint64_t>(t));
    ++hits[s.train.items_of(0)[0]];
  }
  // sd of each count is sqrt(8000 * 3/16) ~ 38.7
  for (int h : hits) CHECK(std::abs(h - trials / 4) < 5 * 39);
}

TEST_CASE("split manifest round-trip and repetitions") {
  std::mt19937_64 rng(5);
  auto r = random_ratings(25, 30, 0.2, rng);
  auto dir = temp_dir("dataio_manifest");
  auto reps = split_repetitions(r, {2, 17, 3});
  REQUIRE(reps.size() == 3);
  CHECK(reps[1].seed == 18);
  write_split_manifest(reps[1], dir / "split.txt");
  auto back = read_split_manifest(dir / "split.txt", r);
  CHECK(back.train == reps[1].train);
  CHECK(back.test == reps[1].test);
  CHECK(back.eval_users == reps[1].eval_users);
  CHECK(back.seed == 18);
  CHECK(back.train_per_user == 2);

  auto other = random_ratings(26, 30, 0.2, rng);
  CHECK(caught([&] { read_split_manifest(dir / "split.txt", other); })->kind ==
        ErrorKind::kValidation);
}

TEST_CASE("tf-idf vocabulary selection") {
  // word 0 appears in every item (idf 0), word 1 in one item with count 4,
  // words 2 and 3 tie and are ordered by token
  std::vector<ContentTriple> t{{0, 0, 5}, {1, 0, 5}, {2, 0, 5}, {0, 1, 4},
                               {1, 2, 1}, {2, 3, 1}};
  std::vector<std::string> tokens{"the", "kernel", "zeta", "alpha"};
  auto v = select_vocabulary(t, tokens, 3, 3);
  REQUIRE(v.terms.size() == 4);
  CHECK(v.terms[0].token == "kernel");
  CHECK(v.terms[0].score == doctest::Approx(4.0 * std::log(3.0)));
  CHECK(v.terms[1].token == "alpha");
  CHECK(v.terms[2].token == "zeta");
  CHECK(v.terms[3].token == "the");
  CHECK(v.terms[3].score == 0.0);
  CHECK(v.selected().size() == 3);

  auto kept = restrict_to_vocabulary(t, v);
  CHECK(kept.size() == 3);
  std::set<Index> ids;
  for (const auto& k : kept) ids.insert(k.word);
  CHECK(ids == std::set<Index>{0, 1, 2});

  auto dir = temp_dir("dataio_vocab");
  save_vocabulary(v, dir / "vocab.tsv");
  auto reread = load_vocabulary(dir / "vocab.tsv");
  CHECK(reread == std::vector<std::string>{"kernel", "alpha", "zeta"});
}

TEST_CASE("synthetic data: zero item noise and determinism") {
  HyperParams h;
  h.lambda_u = 1.0;
  h.lambda_v = std::numeric_limits<double>::infinity();
  h.lambda_n = 10.0;
  h.lambda_w = 1.0;
  auto a = generate_synthetic(50, 80, 40, 5, h, 3);
  CHECK(a.V == a.encodings);
  auto b = generate_synthetic(50, 80, 40, 5, h, 3);
  CHECK(a.ratings == b.ratings);
  CHECK(a.U == b.U);
  CHECK(Eigen::MatrixXd(a.content.values()) == Eigen::MatrixXd(b.content.values()));
  CHECK(a.network == b.network);

  // u entries ~ N(0, 1/lambda_u): the mean of 250 draws has sd 1/sqrt(250)
  const double mean = a.U.mean();
  CHECK(std::abs(mean) < 3.0 / std::sqrt(250.0));
  CHECK(a.ratings.num_users() == 50);
  CHECK(a.ratings.num_items() == 80);
  CHECK(a.content.vocab_size() == 40);
}
