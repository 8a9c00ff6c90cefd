#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lattice/errors.hpp"

namespace lattice::stats {

// Raised when |r| = 1 makes the t statistic infinite.
class InfiniteStatistic : public Error {
 public:
  using Error::Error;
};

struct CorrelationReport {
  std::size_t n = 0;
  double pearson_r = 0.0;
  std::optional<double> pearson_t;  // empty when |r| = 1
  std::optional<double> pearson_p;
  double spearman_r = 0.0;
  std::optional<double> spearman_t;
  std::optional<double> spearman_p;
};

double pearson(std::span<const double> xs, std::span<const double> ys);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

double spearman(std::span<const double> xs, std::span<const double> ys);

// r * sqrt((n - 2) / (1 - r^2)).
double t_statistic(double r, std::size_t n);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double x, double a, double b);

// Two-tailed Student-t tail probability, I_{df/(df+t^2)}(df/2, 1/2).
double p_two_tailed(double t, double df);

// Both coefficients with t-approximation significance at df = n - 2.
CorrelationReport correlate(std::span<const double> xs, std::span<const double> ys);

nlohmann::json to_json(const CorrelationReport& report);

// Reads paired values from comma, tab, semicolon or space separated text.
// Blank lines, '#' comments and a single leading header line are skipped.
std::pair<std::vector<double>, std::vector<double>> read_pairs(std::string_view text);

}  // namespace lattice::stats
