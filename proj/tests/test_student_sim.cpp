#include <cmath>
#include <vector>

#include "doctest.h"
#include "lattice/errors.hpp"
#include "lattice/student_sim.hpp"
#include "oracles.hpp"

using namespace lattice;

TEST_CASE("preset profiles carry the archetype table") {
  const auto comp = preset_profiles(TestKind::Completion);
  REQUIRE(comp.size() == 4);
  CHECK(comp[0] == StudentProfile{"Good", {0.9, 0.8, 0.7}});
  CHECK(comp[1] == StudentProfile{"Bad", {0.2, 0.2, 0.2}});
  CHECK(comp[2] == StudentProfile{"Direct", {0.9, 0.5, 0.1}});
  CHECK(comp[3] == StudentProfile{"Inverse", {0.1, 0.5, 0.9}});

  const auto mc = preset_profiles(TestKind::MultipleChoice);
  CHECK(mc[0].p_correct == std::vector<double>{0.95, 0.95, 0.95});
  CHECK(mc[1].p_correct == std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(mc[2].p_correct == std::vector<double>{0.95, 0.70, 0.45});
  CHECK(mc[3].p_correct == std::vector<double>{0.45, 0.70, 0.95});

  for (const auto& set : {comp, mc}) {
    std::vector<double> reversed(set[2].p_correct.rbegin(), set[2].p_correct.rend());
    CHECK(reversed == set[3].p_correct);
  }
  CHECK(preset_profile(TestKind::Completion, "direct").name == "Direct");
  CHECK_THROWS_AS(preset_profile(TestKind::Completion, "average"), NotFoundError);
}

TEST_CASE("node_success_prob matches outcome enumeration") {
  CHECK(node_success_prob(0.37, 1, 1) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(node_success_prob(0.8, 3, 2) == doctest::Approx(0.896).epsilon(1e-14));
  CHECK(node_success_prob(0.95, 3, 3) == doctest::Approx(0.857375).epsilon(1e-14));
  for (int m = 1; m <= 6; ++m) {
    for (int k = 1; k <= m; ++k) {
      for (double p : {0.0, 0.1, 1.0 / 3, 0.5, 0.95, 1.0}) {
        CHECK(std::abs(node_success_prob(p, m, k) - oracle::enumerate_node(p, m, k)) < 1e-14);
      }
    }
  }
  CHECK_THROWS_AS(node_success_prob(0.5, 2, 3), ValidationError);
}

TEST_CASE("exact_distribution matches the hand-enumerated two-row lattice") {
  const auto cfg = new_config(2, 2, 1, 1, TestKind::Completion);
  const auto dist = exact_distribution(cfg, {"hand", {0.9, 0.5}});
  REQUIRE(dist.mass.size() == 3);
  CHECK(dist.mass[0] == doctest::Approx(0.01).epsilon(1e-13));
  CHECK(dist.mass[1] == doctest::Approx(0.54).epsilon(1e-13));
  CHECK(dist.mass[2] == doctest::Approx(0.45).epsilon(1e-13));
  CHECK(dist.sample_count == 0);

  const auto s = summarize(dist, cfg);
  CHECK(s.mean_grade == doctest::Approx(0.72).epsilon(1e-13));
}

TEST_CASE("exact_distribution equals full path enumeration on small lattices") {
  CounterRng rng(99);
  for (int rows = 1; rows <= 10; ++rows) {
    for (int m : {1, 2, 3}) {
      for (int k = 1; k <= m; ++k) {
        const int levels = 1 + static_cast<int>(rng.below(std::min(rows, 4)));
        const auto cfg = new_config(levels, rows, m, k, TestKind::Completion);
        StudentProfile prof{"random", {}};
        for (int l = 0; l < levels; ++l) prof.p_correct.push_back(rng.uniform());
        const auto dp = exact_distribution(cfg, prof);
        const auto brute = oracle::enumerate_paths(cfg, prof);
        CHECK(oracle::tv(dp.mass, brute) < 1e-12);
      }
    }
  }
}

TEST_CASE("constant profiles give binomial final columns") {
  for (double p : {0.2, 1.0 / 3, 0.5, 0.9}) {
    const auto cfg = new_config(3, 36, 1, 1, TestKind::Completion);
    const auto dist = exact_distribution(cfg, {"flat", {p, p, p}});
    for (int c = 0; c <= 36; ++c) {
      CHECK(std::abs(dist.mass[c] - oracle::binomial_pmf(36, c, p)) < 1e-12);
    }
  }
  const auto cfg = new_config(3, 36, 1, 1, TestKind::Completion);
  const auto s = summarize(exact_distribution(cfg, {"bad", {0.2, 0.2, 0.2}}), cfg);
  CHECK(s.mean_grade == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("degenerate profiles pin the final column") {
  const auto cfg = new_config(3, 12, 3, 2, TestKind::Completion);
  const auto top = exact_distribution(cfg, {"ones", {1, 1, 1}});
  CHECK(top.mass[12] == 1.0);
  const auto s = summarize(top, cfg);
  CHECK(s.mean_grade == 1.0);
  CHECK(s.variance_grade == 0.0);

  CounterRng rng(5);
  CHECK(simulate_student(cfg, {"ones", {1, 1, 1}}, rng) == 12);
  CHECK(simulate_student(cfg, {"zeros", {0, 0, 0}}, rng) == 0);

  const auto cohort = simulate_cohort(cfg, {"ones", {1, 1, 1}}, 1000, 3);
  CHECK(cohort.mass[12] == 1.0);
  CHECK(cohort.counts[12] == 1000);
}

TEST_CASE("raising one level probability never lowers the mean grade") {
  CounterRng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto cfg = new_config(3, 12 + static_cast<int>(rng.below(25)), 1, 1,
                                TestKind::Completion);
    StudentProfile prof{"p", {rng.uniform(), rng.uniform(), rng.uniform()}};
    const double base = summarize(exact_distribution(cfg, prof), cfg).mean_grade;
    const auto level = rng.below(3);
    prof.p_correct[level] = prof.p_correct[level] + (1.0 - prof.p_correct[level]) * rng.uniform();
    const double raised = summarize(exact_distribution(cfg, prof), cfg).mean_grade;
    CHECK(raised >= base - 1e-12);
  }
}

TEST_CASE("direct students outscore inverse students on the level-aware lattice") {
  const auto cfg = new_config(3, 36, 1, 1, TestKind::Completion);
  const auto direct = preset_profile(TestKind::Completion, "direct");
  const auto inverse = preset_profile(TestKind::Completion, "inverse");
  CHECK(summarize(exact_distribution(cfg, direct), cfg).mean_grade >
        summarize(exact_distribution(cfg, inverse), cfg).mean_grade);
}

TEST_CASE("simulate_cohort is deterministic and independent of worker count") {
  const auto cfg = new_config(3, 36, 1, 1, TestKind::Completion);
  const auto prof = preset_profile(TestKind::Completion, "direct");
  const auto a = simulate_cohort(cfg, prof, 5000, 11, 1);
  const auto b = simulate_cohort(cfg, prof, 5000, 11, 4);
  const auto c = simulate_cohort(cfg, prof, 5000, 11, 7);
  CHECK(a.counts == b.counts);
  CHECK(a.counts == c.counts);
  const auto d = simulate_cohort(cfg, prof, 5000, 12, 1);
  CHECK(a.counts != d.counts);

  CounterRng r1(11, 42);
  CounterRng r2(11, 42);
  CHECK(simulate_student(cfg, prof, r1) == simulate_student(cfg, prof, r2));
}

TEST_CASE("simulation rejects mismatched profiles") {
  const auto cfg = new_config(3, 36, 1, 1, TestKind::Completion);
  CounterRng rng(1);
  CHECK_THROWS_AS(simulate_student(cfg, {"two", {0.5, 0.5}}, rng), ValidationError);
  CHECK_THROWS_AS(exact_distribution(cfg, {"bad", {0.5, 1.5, 0.5}}), ValidationError);
  CHECK_THROWS_AS(simulate_cohort(cfg, {"x", {0.5, 0.5, 0.5}}, 0, 1), ValidationError);
}

TEST_CASE("summary quantiles read the column CDF") {
  const auto cfg = new_config(2, 2, 1, 1, TestKind::Completion);
  const auto s = summarize(exact_distribution(cfg, {"hand", {0.9, 0.5}}), cfg);
  CHECK(s.q10_grade == 0.5);
  CHECK(s.median_grade == 0.5);
  CHECK(s.q90_grade == 1.0);
  CHECK(s.rows.size() == 3);
  CHECK(s.mean_column == doctest::Approx(1.44));
}

TEST_CASE("requiring every item in a node pulls the good student's grades down") {
  const auto two = new_config(3, 12, 3, 2, TestKind::Completion);
  const auto three = new_config(3, 12, 3, 3, TestKind::Completion);
  const auto good = preset_profile(TestKind::Completion, "good");
  const auto lenient = summarize(exact_distribution(two, good), two);
  const auto strict = summarize(exact_distribution(three, good), three);
  CHECK(strict.mean_grade < lenient.mean_grade);
  CHECK(strict.q10_grade < lenient.q10_grade);
}
