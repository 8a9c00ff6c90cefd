#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lattice/errors.hpp"
#include "lattice/stats.hpp"
#include "oracles.hpp"

using namespace lattice;
using namespace lattice::stats;

TEST_CASE("pearson on hand-computed samples") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> rev{4, 3, 2, 1};
  CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(a, rev) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 1, 4}) ==
        doctest::Approx(6.0 / std::sqrt(84.0)).epsilon(1e-14));
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(pearson(a, std::vector<double>{5, 5, 5, 5}), ValidationError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("pearson is invariant to positive affine maps and flips under negation") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(30), ys(30);
    for (int i = 0; i < 30; ++i) {
      xs[i] = nd(gen);
      ys[i] = 0.5 * xs[i] + nd(gen);
    }
    const double r = pearson(xs, ys);
    std::vector<double> scaled(xs), negated(xs);
    for (int i = 0; i < 30; ++i) {
      scaled[i] = 3.7 * xs[i] + 12.0;
      negated[i] = -2.0 * xs[i] + 1.0;
    }
    CHECK(pearson(scaled, ys) == doctest::Approx(r).epsilon(1e-12));
    CHECK(pearson(negated, ys) == doctest::Approx(-r).epsilon(1e-12));
  }
}

TEST_CASE("spearman ranks with ties averaged") {
  CHECK(average_ranks(std::vector<double>{1, 2, 2, 3}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(average_ranks(std::vector<double>{5, 1, 5, 5}) == std::vector<double>{3, 1, 3, 3});
  CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{10, 20, 20, 30}) ==
        doctest::Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 8, 27, 64}) ==
        doctest::Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{9, 7, 3, 1}) ==
        doctest::Approx(-1.0));

  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> xs(25), ys(25), tx(25);
  for (int i = 0; i < 25; ++i) {
    xs[i] = u(gen);
    ys[i] = xs[i] + u(gen);
    tx[i] = std::exp(xs[i]) + 3;
  }
  CHECK(spearman(tx, ys) == doctest::Approx(spearman(xs, ys)).epsilon(1e-15));
}

TEST_CASE("t statistic") {
  CHECK(t_statistic(0.66, 30) == doctest::Approx(4.6487).epsilon(0.0005 / 4.6487));
  CHECK(t_statistic(0.0, 10) == 0.0);
  CHECK(t_statistic(0.623, 30) == doctest::Approx(4.2146).epsilon(0.0005 / 4.2146));
  CHECK_THROWS_AS(t_statistic(1.0, 30), InfiniteStatistic);
  CHECK_THROWS_AS(t_statistic(-1.0, 30), InfiniteStatistic);
  CHECK_THROWS_AS(t_statistic(0.5, 2), ValidationError);
}

TEST_CASE("incomplete beta agrees with quadrature of the t density") {
  for (double df : {1.0, 2.0, 5.0, 28.0, 100.0, 1000.0}) {
    for (double t : {0.1, 0.7, 1.5, 2.5, 4.0, 6.0}) {
      CHECK(std::abs(p_two_tailed(t, df) - oracle::t_tail_quadrature(t, df)) < 1e-6);
    }
  }
  CHECK(incomplete_beta(0.2, 0.5, 5.0) == doctest::Approx(0.855072).epsilon(1e-6));
  CHECK(incomplete_beta(0.0, 2, 3) == 0.0);
  CHECK(incomplete_beta(1.0, 2, 3) == 1.0);
  // I_x(1, 1) = x and I_x(a, b) = 1 - I_{1-x}(b, a).
  CHECK(incomplete_beta(0.3, 1, 1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(incomplete_beta(0.3, 2.5, 4) ==
        doctest::Approx(1.0 - incomplete_beta(0.7, 4, 2.5)).epsilon(1e-12));
}

TEST_CASE("two-tailed p values") {
  CHECK(p_two_tailed(0.0, 28) == 1.0);
  CHECK(p_two_tailed(0.0, 3) == 1.0);
  const double p_pearson = p_two_tailed(4.6487, 28);
  CHECK(p_pearson == doctest::Approx(0.0001).epsilon(3e-5 / 0.0001));
  CHECK(p_two_tailed(4.2146, 28) == doctest::Approx(0.000233).epsilon(2e-5 / 0.000233));
  CHECK(p_two_tailed(-2.0, 10) == p_two_tailed(2.0, 10));
  CHECK_THROWS_AS(p_two_tailed(1.0, 0.5), ValidationError);

  double prev = 1.0;
  for (double t = 0.05; t < 10.0; t += 0.05) {
    const double p = p_two_tailed(t, 28);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("p values agree with Monte Carlo sampling of the t distribution") {
  constexpr int kSamples = 10'000'000;
  constexpr double kDf = 28.0;
  const std::vector<double> spots{0.5, 1.0, 2.0, 3.0, 4.6487};
  std::vector<long> beyond(spots.size(), 0);
  std::mt19937_64 gen(20130101);
  std::student_t_distribution<double> td(kDf);
  for (int i = 0; i < kSamples; ++i) {
    const double a = std::abs(td(gen));
    for (std::size_t s = 0; s < spots.size(); ++s) {
      if (a > spots[s]) ++beyond[s];
    }
  }
  for (std::size_t s = 0; s < spots.size(); ++s) {
    const double p = p_two_tailed(spots[s], kDf);
    const double empirical = static_cast<double>(beyond[s]) / kSamples;
    const double se = std::sqrt(p * (1 - p) / kSamples);
    CHECK_MESSAGE(std::abs(empirical - p) <= 3 * se, "t=" << spots[s]);
  }
}

TEST_CASE("correlate fills both coefficients and handles perfect correlation") {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  const auto perfect = correlate(xs, xs);
  CHECK(perfect.pearson_r == doctest::Approx(1.0));
  CHECK_FALSE(perfect.pearson_t.has_value());
  CHECK_FALSE(perfect.pearson_p.has_value());
  CHECK(to_json(perfect)["pearson"]["p"].is_null());

  const auto rep = correlate(xs, std::vector<double>{2, 1, 4, 3, 5});
  CHECK(rep.n == 5);
  REQUIRE(rep.pearson_p.has_value());
  CHECK(*rep.pearson_p > 0.0);
  CHECK(*rep.pearson_p <= 1.0);
  CHECK(rep.spearman_r == doctest::Approx(0.8));
}

TEST_CASE("read_pairs accepts common delimiters and a header") {
  const auto [xs, ys] = read_pairs("completion,open\n1,2\n# comment\n3;4\n\n5\t6\n7 8\n");
  CHECK(xs == std::vector<double>{1, 3, 5, 7});
  CHECK(ys == std::vector<double>{2, 4, 6, 8});
  CHECK_THROWS_AS(read_pairs("1,2\n3,x\n"), ParseError);
  CHECK_THROWS_AS(read_pairs("1,2\n3,4,5\n"), ParseError);
}
