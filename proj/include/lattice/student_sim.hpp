#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lattice/lattice.hpp"
#include "lattice/rng.hpp"

namespace lattice {

// Per-level probability of answering a single item correctly.
struct StudentProfile {
  std::string name;
  std::vector<double> p_correct;

  bool operator==(const StudentProfile&) const = default;
};

// Probability mass over final columns 0..rows. sample_count is 0 for exact results.
struct GradeDistribution {
  std::vector<double> mass;
  std::vector<std::uint64_t> counts;  // empty for exact results
  std::uint64_t sample_count = 0;
};

struct DistributionSummary {
  double mean_column = 0.0;
  double mean_grade = 0.0;
  double variance_grade = 0.0;
  double median_grade = 0.0;
  double q10_grade = 0.0;
  double q90_grade = 0.0;
  struct Row {
    int column;
    double grade;
    double mass;
    std::uint64_t count;
  };
  std::vector<Row> rows;
};

// Good, Bad, Direct, Inverse archetypes for the three-level test kinds.
std::vector<StudentProfile> preset_profiles(TestKind kind);

// Looks up a preset by case-insensitive name; throws NotFoundError.
StudentProfile preset_profile(TestKind kind, const std::string& name);

void validate_profile(const LatticeConfig& cfg, const StudentProfile& profile);

// P(Binomial(m, p) >= k).
double node_success_prob(double p, int m, int k);

// Walks one student through the lattice and returns the final column.
int simulate_student(const LatticeConfig& cfg, const StudentProfile& profile, CounterRng& rng);

// Student i draws from CounterRng(seed, i); workers = 0 picks hardware concurrency.
// Output is identical for any worker count.
GradeDistribution simulate_cohort(const LatticeConfig& cfg, const StudentProfile& profile,
                                  std::uint64_t n_students, std::uint64_t seed,
                                  unsigned workers = 0);

// Forward DP over (row, col) of the path probability mass.
GradeDistribution exact_distribution(const LatticeConfig& cfg, const StudentProfile& profile);

// Half the L1 distance between two mass vectors of equal length.
double tv_distance(const GradeDistribution& a, const GradeDistribution& b);

DistributionSummary summarize(const GradeDistribution& dist, const LatticeConfig& cfg);

}  // namespace lattice
