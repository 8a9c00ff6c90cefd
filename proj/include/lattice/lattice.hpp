#pragma once

#include <span>

namespace lattice {

enum class TestKind { Completion, MultipleChoice };

// Geometry and kind of a leveled test. Total questions = rows * items_per_node.
struct LatticeConfig {
  int n_levels = 1;
  int rows = 1;
  int items_per_node = 1;
  int threshold = 1;
  TestKind kind = TestKind::Completion;
  int n_choices = 0;  // meaningful only for MultipleChoice

  int total_questions() const noexcept { return rows * items_per_node; }
  bool operator==(const LatticeConfig&) const = default;
};

// Position in the lattice: row = nodes answered, col = nodes answered correctly.
struct PathState {
  int row = 0;
  int col = 0;

  bool operator==(const PathState&) const = default;
};

// Validates and builds a config. n_choices is ignored for Completion tests.
LatticeConfig new_config(int n_levels, int rows, int items_per_node, int threshold, TestKind kind,
                         int n_choices = 0);

// Throws ValidationError when cfg breaks an invariant.
void validate(const LatticeConfig& cfg);

// Width of one level segment along the column axis: ceil(rows / n_levels).
int level_width(const LatticeConfig& cfg);

// Item level (1-based) served at column col. Depends on the column only.
int level_of_column(const LatticeConfig& cfg, int col);

bool is_terminal(const LatticeConfig& cfg, const PathState& state);

PathState advance(const LatticeConfig& cfg, const PathState& state, bool node_correct);

// True iff at least cfg.threshold of the node's answers are correct.
bool node_outcome(const LatticeConfig& cfg, std::span<const bool> answers);

// Formula scoring, unclamped: (n_choices * C - 1) / (n_choices - 1).
double formula_score(double fraction_correct, int n_choices);

// Final score in [0, 1] for a terminal column. Multiple choice is formula
// scored on C = col / rows and clamped at 0.
double grade(const LatticeConfig& cfg, int final_col);

int distinct_grade_count(const LatticeConfig& cfg);

}  // namespace lattice
