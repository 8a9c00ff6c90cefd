#include "lattice/student_sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <thread>

#include "lattice/errors.hpp"

namespace lattice {

std::vector<StudentProfile> preset_profiles(TestKind kind) {
  if (kind == TestKind::Completion) {
    return {
        {"Good", {0.90, 0.80, 0.70}},
        {"Bad", {0.20, 0.20, 0.20}},
        {"Direct", {0.90, 0.50, 0.10}},
        {"Inverse", {0.10, 0.50, 0.90}},
    };
  }
  const double chance = 1.0 / 3.0;
  return {
      {"Good", {0.95, 0.95, 0.95}},
      {"Bad", {chance, chance, chance}},
      {"Direct", {0.95, 0.70, 0.45}},
      {"Inverse", {0.45, 0.70, 0.95}},
  };
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

StudentProfile preset_profile(TestKind kind, const std::string& name) {
  for (auto& profile : preset_profiles(kind)) {
    if (lower(profile.name) == lower(name)) {
      return profile;
    }
  }
  throw NotFoundError("unknown student profile '" + name + "'");
}

void validate_profile(const LatticeConfig& cfg, const StudentProfile& profile) {
  if (static_cast<int>(profile.p_correct.size()) != cfg.n_levels) {
    throw ValidationError("profile '" + profile.name + "' has " +
                          std::to_string(profile.p_correct.size()) + " levels, config has " +
                          std::to_string(cfg.n_levels));
  }
  for (double p : profile.p_correct) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("profile '" + profile.name + "' has a probability outside [0, 1]");
    }
  }
}

double node_success_prob(double p, int m, int k) {
  if (!(p >= 0.0 && p <= 1.0) || m < 1 || k < 1 || k > m) {
    throw ValidationError("node_success_prob needs p in [0,1] and 1 <= k <= m");
  }
  // Sum the upper tail term by term: C(m,j) p^j (1-p)^(m-j).
  double total = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= m; ++j) {
    if (j > 0) {
      binom = binom * (m - j + 1) / j;
    }
    if (j >= k) {
      total += binom * std::pow(p, j) * std::pow(1.0 - p, m - j);
    }
  }
  return std::min(total, 1.0);
}

int simulate_student(const LatticeConfig& cfg, const StudentProfile& profile, CounterRng& rng) {
  validate_profile(cfg, profile);
  auto answers = std::make_unique<bool[]>(cfg.items_per_node);
  const std::span<const bool> node(answers.get(), cfg.items_per_node);
  PathState state;
  while (!is_terminal(cfg, state)) {
    const double p = profile.p_correct[level_of_column(cfg, state.col) - 1];
    for (int i = 0; i < cfg.items_per_node; ++i) {
      answers[i] = rng.bernoulli(p);
    }
    state = advance(cfg, state, node_outcome(cfg, node));
  }
  return state.col;
}

namespace {

GradeDistribution from_counts(std::vector<std::uint64_t> counts, std::uint64_t total) {
  GradeDistribution dist;
  dist.mass.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    dist.mass[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  }
  dist.counts = std::move(counts);
  dist.sample_count = total;
  return dist;
}

}  // namespace

GradeDistribution simulate_cohort(const LatticeConfig& cfg, const StudentProfile& profile,
                                  std::uint64_t n_students, std::uint64_t seed, unsigned workers) {
  validate(cfg);
  validate_profile(cfg, profile);
  if (n_students < 1) {
    throw ValidationError("cohort needs at least one student");
  }
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_students));

  const std::size_t width = static_cast<std::size_t>(cfg.rows) + 1;
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(width, 0));
  auto run_range = [&](unsigned w) {
    const std::uint64_t begin = n_students * w / workers;
    const std::uint64_t end = n_students * (w + 1) / workers;
    for (std::uint64_t i = begin; i < end; ++i) {
      CounterRng rng(seed, i);
      ++partial[w][static_cast<std::size_t>(simulate_student(cfg, profile, rng))];
    }
  };

  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back(run_range, w);
    }
  }

  std::vector<std::uint64_t> counts(width, 0);
  for (const auto& part : partial) {
    for (std::size_t c = 0; c < width; ++c) {
      counts[c] += part[c];
    }
  }
  return from_counts(std::move(counts), n_students);
}

GradeDistribution exact_distribution(const LatticeConfig& cfg, const StudentProfile& profile) {
  validate(cfg);
  validate_profile(cfg, profile);
  const int rows = cfg.rows;

  std::vector<double> node_prob(static_cast<std::size_t>(rows) + 1);
  for (int c = 0; c <= rows; ++c) {
    const double p = profile.p_correct[level_of_column(cfg, c) - 1];
    node_prob[c] = node_success_prob(p, cfg.items_per_node, cfg.threshold);
  }

  std::vector<double> mass(static_cast<std::size_t>(rows) + 1, 0.0);
  mass[0] = 1.0;
  for (int r = 0; r < rows; ++r) {
    // Columns > r are still zero; sweep downwards so mass[c] is read before being overwritten.
    for (int c = r; c >= 0; --c) {
      const double here = mass[c];
      mass[c + 1] += here * node_prob[c];
      mass[c] = here * (1.0 - node_prob[c]);
    }
  }

  GradeDistribution dist;
  dist.mass = std::move(mass);
  return dist;
}

double tv_distance(const GradeDistribution& a, const GradeDistribution& b) {
  if (a.mass.size() != b.mass.size()) {
    throw ValidationError("distributions have different support sizes");
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i) {
    l1 += std::abs(a.mass[i] - b.mass[i]);
  }
  return 0.5 * l1;
}

DistributionSummary summarize(const GradeDistribution& dist, const LatticeConfig& cfg) {
  if (static_cast<int>(dist.mass.size()) != cfg.rows + 1) {
    throw ValidationError("distribution length does not match config rows + 1");
  }
  DistributionSummary s;
  double second = 0.0;
  for (int c = 0; c <= cfg.rows; ++c) {
    const double m = dist.mass[c];
    if (m < 0.0) {
      throw ValidationError("distribution has negative mass");
    }
    const double g = grade(cfg, c);
    s.mean_column += m * c;
    s.mean_grade += m * g;
    second += m * g * g;
    s.rows.push_back({c, g, m, dist.counts.empty() ? 0 : dist.counts[c]});
  }
  s.variance_grade = std::max(0.0, second - s.mean_grade * s.mean_grade);

  // Grade is monotone in column, so quantiles can be read off the column CDF.
  auto quantile = [&](double q) {
    double cdf = 0.0;
    for (int c = 0; c <= cfg.rows; ++c) {
      cdf += dist.mass[c];
      if (cdf >= q - 1e-12) {
        return grade(cfg, c);
      }
    }
    return grade(cfg, cfg.rows);
  };
  s.q10_grade = quantile(0.10);
  s.median_grade = quantile(0.50);
  s.q90_grade = quantile(0.90);
  return s;
}

}  // namespace lattice
