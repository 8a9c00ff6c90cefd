#include "lattice/lattice.hpp"

#include <algorithm>
#include <string>

#include "lattice/errors.hpp"

namespace lattice {

void validate(const LatticeConfig& cfg) {
  if (cfg.n_levels < 1 || cfg.rows < 1 || cfg.items_per_node < 1 || cfg.threshold < 1) {
    throw ValidationError("config dimensions must be positive");
  }
  if (cfg.n_levels > cfg.rows) {
    throw ValidationError("n_levels (" + std::to_string(cfg.n_levels) + ") exceeds rows (" +
                          std::to_string(cfg.rows) + ")");
  }
  if (cfg.threshold > cfg.items_per_node) {
    throw ValidationError("threshold (" + std::to_string(cfg.threshold) +
                          ") exceeds items_per_node (" + std::to_string(cfg.items_per_node) + ")");
  }
  if (cfg.kind == TestKind::MultipleChoice && cfg.n_choices < 2) {
    throw ValidationError("multiple-choice tests need n_choices >= 2");
  }
}

LatticeConfig new_config(int n_levels, int rows, int items_per_node, int threshold, TestKind kind,
                         int n_choices) {
  LatticeConfig cfg{n_levels, rows, items_per_node, threshold, kind,
                    kind == TestKind::MultipleChoice ? n_choices : 0};
  validate(cfg);
  return cfg;
}

int level_width(const LatticeConfig& cfg) {
  return (cfg.rows + cfg.n_levels - 1) / cfg.n_levels;
}

int level_of_column(const LatticeConfig& cfg, int col) {
  if (col < 0 || col > cfg.rows) {
    throw ValidationError("column " + std::to_string(col) + " outside 0.." +
                          std::to_string(cfg.rows));
  }
  return std::min(cfg.n_levels, col / level_width(cfg) + 1);
}

bool is_terminal(const LatticeConfig& cfg, const PathState& state) {
  return state.row == cfg.rows;
}

PathState advance(const LatticeConfig& cfg, const PathState& state, bool node_correct) {
  if (state.row < 0 || state.col < 0 || state.col > state.row || state.row > cfg.rows) {
    throw ValidationError("invalid path state");
  }
  if (is_terminal(cfg, state)) {
    throw StateError("cannot advance a terminal path state");
  }
  return PathState{state.row + 1, state.col + (node_correct ? 1 : 0)};
}

bool node_outcome(const LatticeConfig& cfg, std::span<const bool> answers) {
  if (static_cast<int>(answers.size()) != cfg.items_per_node) {
    throw ValidationError("node expects " + std::to_string(cfg.items_per_node) + " answers, got " +
                          std::to_string(answers.size()));
  }
  const auto correct = std::count(answers.begin(), answers.end(), true);
  return correct >= cfg.threshold;
}

double formula_score(double fraction_correct, int n_choices) {
  if (n_choices < 2) {
    throw ValidationError("formula scoring needs n_choices >= 2");
  }
  if (!(fraction_correct >= 0.0 && fraction_correct <= 1.0)) {
    throw ValidationError("fraction correct must lie in [0, 1]");
  }
  const double na = n_choices;
  return (na * fraction_correct - 1.0) / (na - 1.0);
}

double grade(const LatticeConfig& cfg, int final_col) {
  if (final_col < 0 || final_col > cfg.rows) {
    throw ValidationError("column " + std::to_string(final_col) + " outside 0.." +
                          std::to_string(cfg.rows));
  }
  const double c = static_cast<double>(final_col) / cfg.rows;
  if (cfg.kind == TestKind::Completion) {
    return c;
  }
  return std::clamp(formula_score(c, cfg.n_choices), 0.0, 1.0);
}

int distinct_grade_count(const LatticeConfig& cfg) { return cfg.rows + 1; }

}  // namespace lattice
