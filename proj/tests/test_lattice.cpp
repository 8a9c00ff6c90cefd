#include <array>
#include <vector>

#include "doctest.h"
#include "lattice/errors.hpp"
#include "lattice/io.hpp"
#include "lattice/lattice.hpp"
#include "lattice/rng.hpp"

using namespace lattice;

TEST_CASE("new_config accepts the standard geometries") {
  const auto fig2a = new_config(3, 36, 1, 1, TestKind::Completion);
  CHECK(fig2a.total_questions() == 36);
  const auto fig3c = new_config(3, 12, 3, 3, TestKind::MultipleChoice, 3);
  CHECK(fig3c.total_questions() == 36);
  CHECK(fig3c.n_choices == 3);
  const auto fig3b = new_config(3, 12, 3, 2, TestKind::MultipleChoice, 3);
  CHECK(fig3b.threshold == 2);
}

TEST_CASE("new_config rejects invariant violations") {
  CHECK_THROWS_AS(new_config(3, 2, 1, 1, TestKind::Completion), ValidationError);
  CHECK_THROWS_AS(new_config(3, 12, 3, 4, TestKind::Completion), ValidationError);
  CHECK_THROWS_AS(new_config(3, 12, 1, 1, TestKind::MultipleChoice, 1), ValidationError);
  CHECK_THROWS_AS(new_config(0, 12, 1, 1, TestKind::Completion), ValidationError);
  CHECK_THROWS_AS(new_config(1, 0, 1, 1, TestKind::Completion), ValidationError);
  CHECK_THROWS_AS(new_config(1, 5, 0, 1, TestKind::Completion), ValidationError);
  CHECK_THROWS_AS(new_config(1, 5, 1, 0, TestKind::Completion), ValidationError);
}

TEST_CASE("level_of_column segments columns into levels") {
  const auto cfg36 = new_config(3, 36, 1, 1, TestKind::Completion);
  CHECK(level_of_column(cfg36, 0) == 1);
  CHECK(level_of_column(cfg36, 11) == 1);
  CHECK(level_of_column(cfg36, 12) == 2);
  CHECK(level_of_column(cfg36, 24) == 3);
  CHECK(level_of_column(cfg36, 36) == 3);
  const auto cfg12 = new_config(3, 12, 3, 3, TestKind::Completion);
  CHECK(level_of_column(cfg12, 4) == 2);
  CHECK(level_of_column(cfg12, 3) == 1);
  CHECK_THROWS_AS(level_of_column(cfg12, 13), ValidationError);
  CHECK_THROWS_AS(level_of_column(cfg12, -1), ValidationError);

  SUBCASE("non-divisible rows use ceil width and cap the last level") {
    const auto cfg = new_config(3, 7, 1, 1, TestKind::Completion);
    CHECK(level_width(cfg) == 3);
    CHECK(level_of_column(cfg, 2) == 1);
    CHECK(level_of_column(cfg, 3) == 2);
    CHECK(level_of_column(cfg, 6) == 3);
    CHECK(level_of_column(cfg, 7) == 3);
  }
}

TEST_CASE("level is non-decreasing and reaches the top only past the last boundary") {
  for (int rows = 1; rows <= 40; ++rows) {
    for (int levels = 1; levels <= std::min(rows, 6); ++levels) {
      const auto cfg = new_config(levels, rows, 1, 1, TestKind::Completion);
      const int width = (rows + levels - 1) / levels;
      int prev = level_of_column(cfg, 0);
      CHECK(prev == 1);
      for (int c = 1; c <= rows; ++c) {
        const int lv = level_of_column(cfg, c);
        CHECK(lv >= prev);
        CHECK(lv <= levels);
        if (lv == levels && levels > 1) {
          CHECK(c >= (levels - 1) * width);
        }
        prev = lv;
      }
    }
  }
}

TEST_CASE("advance moves down, and right on a correct node") {
  const auto cfg = new_config(3, 36, 1, 1, TestKind::Completion);
  CHECK(advance(cfg, {0, 0}, true) == PathState{1, 1});
  CHECK(advance(cfg, {5, 2}, false) == PathState{6, 2});
  CHECK_THROWS_AS(advance(cfg, {36, 10}, true), StateError);
  CHECK_THROWS_AS(advance(cfg, {3, 4}, true), ValidationError);
}

TEST_CASE("path invariant holds over random answer sequences") {
  CounterRng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(40));
    const auto cfg = new_config(1, rows, 1, 1, TestKind::Completion);
    PathState s;
    int correct = 0;
    for (int n = 1; n <= rows; ++n) {
      const bool ok = rng.bernoulli(0.5);
      correct += ok;
      s = advance(cfg, s, ok);
      REQUIRE(s.row == n);
      REQUIRE(s.col == correct);
      REQUIRE(s.col <= s.row);
    }
    CHECK(is_terminal(cfg, s));
  }
}

TEST_CASE("node_outcome counts correct answers against the threshold") {
  const auto single = new_config(1, 3, 1, 1, TestKind::Completion);
  const std::array<bool, 1> one{true};
  CHECK(node_outcome(single, one));

  const auto two_of_three = new_config(1, 3, 3, 2, TestKind::Completion);
  const std::array<bool, 3> tft{true, false, true};
  CHECK(node_outcome(two_of_three, tft));

  const auto three_of_three = new_config(1, 3, 3, 3, TestKind::Completion);
  const std::array<bool, 3> ttf{true, true, false};
  CHECK_FALSE(node_outcome(three_of_three, ttf));
  CHECK_THROWS_AS(node_outcome(three_of_three, one), ValidationError);
}

TEST_CASE("formula_score is the unclamped guessing correction") {
  CHECK(formula_score(1.0, 3) == 1.0);
  CHECK(formula_score(1.0 / 3.0, 3) == 0.0);
  CHECK(formula_score(0.7, 4) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(formula_score(0.2, 3) == doctest::Approx(-0.2).epsilon(1e-15));
  for (int na = 2; na <= 10; ++na) {
    CHECK(formula_score(1.0 / na, na) == 0.0);
    CHECK(formula_score(1.0, na) == 1.0);
  }
  CHECK_THROWS_AS(formula_score(0.5, 1), ValidationError);
  CHECK_THROWS_AS(formula_score(1.5, 3), ValidationError);
}

TEST_CASE("grade maps terminal columns to [0, 1]") {
  const auto comp = new_config(3, 36, 1, 1, TestKind::Completion);
  CHECK(grade(comp, 18) == 0.5);
  CHECK(grade(comp, 0) == 0.0);
  const auto mc = new_config(3, 36, 1, 1, TestKind::MultipleChoice, 3);
  CHECK(grade(mc, 36) == 1.0);
  CHECK(grade(mc, 12) == 0.0);
  CHECK(grade(mc, 5) == 0.0);
  CHECK(grade(mc, 24) == doctest::Approx(0.5));
  CHECK_THROWS_AS(grade(mc, 37), ValidationError);

  for (const auto& cfg : {comp, mc, new_config(3, 12, 3, 3, TestKind::MultipleChoice, 4)}) {
    for (int c = 0; c < cfg.rows; ++c) {
      CHECK(grade(cfg, c) <= grade(cfg, c + 1));
    }
  }
}

TEST_CASE("distinct_grade_count is rows + 1 and every column is reachable") {
  CHECK(distinct_grade_count(new_config(3, 36, 1, 1, TestKind::Completion)) == 37);
  CHECK(distinct_grade_count(new_config(3, 12, 3, 3, TestKind::Completion)) == 13);
  CHECK(distinct_grade_count(new_config(1, 1, 1, 1, TestKind::Completion)) == 2);

  const auto cfg = new_config(3, 12, 3, 2, TestKind::Completion);
  for (int target = 0; target <= cfg.rows; ++target) {
    PathState s;
    for (int r = 0; r < cfg.rows; ++r) s = advance(cfg, s, r < target);
    CHECK(s.col == target);
  }
}

TEST_CASE("config JSON round-trips and reports bad documents") {
  const auto cfg = new_config(3, 12, 3, 3, TestKind::MultipleChoice, 3);
  CHECK(config_from_json(to_json(cfg)) == cfg);
  CHECK(to_json(cfg).dump() ==
        R"({"items_per_node":3,"kind":"multiple_choice","n_choices":3,"n_levels":3,"rows":12,"threshold":3})");
  CHECK(config_hash(cfg) == config_hash(config_from_json(to_json(cfg))));
  CHECK(config_hash(cfg) != config_hash(new_config(3, 12, 3, 2, TestKind::MultipleChoice, 3)));
  CHECK_THROWS_AS(config_from_json(parse_json(R"({"n_levels": 3})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(parse_json(R"({"n_levels": 1, "rows": 3, "kind": "essay"})")),
                  ValidationError);
  CHECK_THROWS_AS(parse_json("{\"rows\": \n 3,,}"), ParseError);
}
