#include <cmath>
#include <vector>

#include "doctest.h"
#include "granlab/errors.hpp"
#include "granlab/losses.hpp"
#include "oracles.hpp"

using namespace granlab;

namespace {

const double kLog2 = std::log(2.0);

Matrix uniform_probs(int rows, int K) { return Matrix::Constant(rows, K, 1.0 / K); }

}  // namespace

TEST_CASE("hierarchy validates its partition") {
  CHECK_NOTHROW(Hierarchy(4, {0, 1}, {2, 3}));
  CHECK_THROWS_AS(Hierarchy(4, {0, 1}, {1, 2, 3}), ConfigError);  // overlap
  CHECK_THROWS_AS(Hierarchy(4, {0, 1}, {2}), ConfigError);         // missing 3
  CHECK_THROWS_AS(Hierarchy(4, {}, {0, 1, 2, 3}), ConfigError);    // empty side
  CHECK_THROWS_AS(Hierarchy(1, {0}, {}), ConfigError);
  CHECK_THROWS_AS(Hierarchy(3, {0, 5}, {1, 2}), ConfigError);

  const Hierarchy h(4, {3, 1}, {2, 0});
  CHECK(h.c0() == std::vector<int>{1, 3});
  CHECK(h.coarse_label(1) == 1);
  CHECK(h.coarse_label(0) == 0);
}

TEST_CASE("coarse loss on hand-evaluated examples") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<int> y{0, 1};
  CHECK(loss_coarse(p, y) == doctest::Approx(kLog2).epsilon(1e-15));

  const std::vector<double> p2{0.9};
  const std::vector<int> y2{0};
  CHECK(loss_coarse(p2, y2) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
  CHECK(loss_coarse(p2, y2) == doctest::Approx(2.302585).epsilon(1e-6));

  const std::vector<double> exact{1.0, 0.0};
  const std::vector<int> ye{1, 0};
  CHECK(loss_coarse(exact, ye) <= 1e-11);

  CHECK_THROWS_AS(loss_coarse(std::vector<double>{}, std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(loss_coarse(std::vector<double>{0.5}, std::vector<int>{2}), DomainError);
}

TEST_CASE("fine loss") {
  const std::vector<int> y{2};
  CHECK(loss_fine(uniform_probs(1, 4), y) == doctest::Approx(std::log(4.0)).epsilon(1e-15));

  const Matrix perfect = one_hot(std::vector<int>{0, 3}, 4);
  CHECK(loss_fine(perfect, perfect) <= 1e-11);

  SUBCASE("batch mean of per-point losses") {
    Rng rng(3);
    const Matrix p = oracle::random_probs(rng, 2, 5);
    const std::vector<int> labels{1, 4};
    const double a = -std::log(p(0, 1));
    const double b = -std::log(p(1, 4));
    CHECK(std::abs(loss_fine(p, labels) - (a + b) / 2.0) < 1e-12);
  }

  SUBCASE("non-one-hot row is rejected") {
    Matrix bad = Matrix::Zero(2, 3);
    bad(0, 0) = 1.0;
    bad(1, 1) = 0.5;
    bad(1, 2) = 0.5;
    CHECK_THROWS_AS(loss_fine(uniform_probs(2, 3), bad), DomainError);
    Matrix two = Matrix::Zero(1, 3);
    two(0, 0) = two(0, 1) = 1.0;
    CHECK_THROWS_AS(labels_from_one_hot(two), DomainError);
  }
}

TEST_CASE("intra-class loss") {
  SUBCASE("singleton coarse classes give exactly zero") {
    Rng rng(5);
    const Matrix p = oracle::random_probs(rng, 10, 2);
    const auto y = oracle::random_labels(rng, 10, 2);
    CHECK(loss_intra(p, y, Hierarchy::binary()) == 0.0);
  }

  SUBCASE("uniform K=4 with C0={0,1}") {
    const Hierarchy h(4, {0, 1}, {2, 3});
    CHECK(loss_intra(uniform_probs(1, 4), std::vector<int>{0}, h) == doctest::Approx(kLog2).epsilon(1e-15));
  }

  SUBCASE("true probability of zero is floored, not an exception") {
    const Hierarchy h(4, {0, 1}, {2, 3});
    Matrix p(1, 4);
    p << 0.0, 0.5, 0.25, 0.25;
    const double v = loss_intra(p, std::vector<int>{0}, h);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(std::log1p(0.5 / kProbFloor)));
  }

  SUBCASE("hierarchy/K mismatch") {
    CHECK_THROWS_AS(loss_intra(uniform_probs(1, 3), std::vector<int>{0}, Hierarchy(4, {0, 1}, {2, 3})), ConfigError);
  }
}

TEST_CASE("hybrid loss endpoints and hand value") {
  const Hierarchy h(4, {0, 1}, {2, 3});
  const std::vector<int> y{0};
  CHECK(loss_hybrid(uniform_probs(1, 4), y, h, 0.5) == doctest::Approx(1.5 * kLog2).epsilon(1e-15));
  CHECK(loss_hybrid(uniform_probs(1, 4), y, h, 0.5) == doctest::Approx(1.039721).epsilon(1e-6));
  CHECK_THROWS_AS(loss_hybrid(uniform_probs(1, 4), y, h, 1.5), ConfigError);
  CHECK_THROWS_AS(loss_hybrid(uniform_probs(1, 4), y, h, -0.1), ConfigError);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(10));
    const Hierarchy hh = oracle::random_hierarchy(rng, K);
    const Matrix p = oracle::random_probs(rng, 8, K);
    const auto labels = oracle::random_labels(rng, 8, K);
    CHECK(std::abs(loss_hybrid(p, labels, hh, 1.0) - loss_fine(p, labels)) < 1e-9);

    // beta = 0 is the coarse BCE of the aggregated C0 probability.
    std::vector<double> agg(8, 0.0);
    for (int r = 0; r < 8; ++r) {
      for (int k : hh.c0()) agg[static_cast<std::size_t>(r)] += p(r, k);
    }
    const auto Y = hh.coarse_labels(labels);
    CHECK(std::abs(loss_hybrid(p, labels, hh, 0.0) - loss_coarse(agg, Y)) < 1e-12);

    // monotone in beta
    double prev = -1.0;
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double v = loss_hybrid(p, labels, hh, beta);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("decomposition identity holds on random batches") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(15));
    const int rows = 1 + static_cast<int>(rng.below(32));
    const Hierarchy h = oracle::random_hierarchy(rng, K);
    const Matrix p = oracle::random_probs(rng, rows, K, 6.0);
    const auto y = oracle::random_labels(rng, rows, K);
    const DecompositionReport rep = verify_decomposition(p, y, h);
    worst = std::max(worst, rep.residual);
    CHECK(rep.fine >= 0.0);
    CHECK(rep.coarse >= 0.0);
    CHECK(rep.intra >= 0.0);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("decomposition degenerate cases") {
  Rng rng(8);
  const Matrix p = oracle::random_probs(rng, 6, 2);
  const auto y = oracle::random_labels(rng, 6, 2);
  const auto rep = verify_decomposition(p, y, Hierarchy::binary());
  CHECK(rep.intra == 0.0);
  CHECK(std::abs(rep.fine - rep.coarse) < 1e-9);

  const Matrix perfect = one_hot(std::vector<int>{0, 2, 3}, 4);
  const auto rep2 = verify_decomposition(perfect, perfect, Hierarchy(4, {0, 1}, {2, 3}));
  CHECK(rep2.fine <= 1e-10);
  CHECK(rep2.coarse <= 1e-10);
  CHECK(rep2.intra <= 1e-10);
}
