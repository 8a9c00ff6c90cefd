#include "lattice/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "lattice/item.hpp"

namespace lattice::stats {

namespace {

constexpr double kFractionEps = 1e-10;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 10000;

void check_pairs(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("paired samples differ in length (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) {
    throw ValidationError("correlation needs at least 3 pairs");
  }
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kFractionEps) {
      return h;
    }
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_pairs(xs, ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("correlation is undefined for a constant sample");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  check_pairs(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double t_statistic(double r, std::size_t n) {
  if (n < 3) {
    throw ValidationError("t statistic needs n >= 3");
  }
  if (!(std::abs(r) <= 1.0)) {
    throw ValidationError("correlation coefficient outside [-1, 1]");
  }
  if (std::abs(r) == 1.0) {
    throw InfiniteStatistic("t statistic is infinite for |r| = 1");
  }
  return r * std::sqrt(static_cast<double>(n - 2) / (1.0 - r * r));
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ValidationError("incomplete beta needs a, b > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("incomplete beta needs x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fastest below the mean of the distribution; use symmetry above it.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_fraction(x, a, b) / a;
  }
  return 1.0 - front * beta_fraction(1.0 - x, b, a) / b;
}

double p_two_tailed(double t, double df) {
  if (!(df >= 1.0)) {
    throw ValidationError("degrees of freedom must be >= 1");
  }
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) {
    throw ValidationError("t statistic is NaN");
  }
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(x, df / 2.0, 0.5), 0.0, 1.0);
}

CorrelationReport correlate(std::span<const double> xs, std::span<const double> ys) {
  CorrelationReport rep;
  rep.n = xs.size();
  rep.pearson_r = pearson(xs, ys);
  rep.spearman_r = spearman(xs, ys);
  const double df = static_cast<double>(rep.n - 2);
  auto fill = [&](double r, std::optional<double>& t, std::optional<double>& p) {
    try {
      t = t_statistic(r, rep.n);
      p = p_two_tailed(*t, df);
    } catch (const InfiniteStatistic&) {
      t.reset();
      p.reset();
    }
  };
  fill(rep.pearson_r, rep.pearson_t, rep.pearson_p);
  fill(rep.spearman_r, rep.spearman_t, rep.spearman_p);
  return rep;
}

nlohmann::json to_json(const CorrelationReport& rep) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"n", rep.n},
          {"df", rep.n - 2},
          {"pearson", {{"r", rep.pearson_r}, {"t", opt(rep.pearson_t)}, {"p", opt(rep.pearson_p)}}},
          {"spearman",
           {{"r", rep.spearman_r}, {"t", opt(rep.spearman_t)}, {"p", opt(rep.spearman_p)}}}};
}

std::pair<std::vector<double>, std::vector<double>> read_pairs(std::string_view text) {
  std::vector<double> xs;
  std::vector<double> ys;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace_if(
        line.begin(), line.end(), [](char c) { return c == ',' || c == ';' || c == '\t' || c == '\r'; },
        ' ');
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    const auto a = tokens.size() == 2 ? parse_numeric_answer(tokens[0]) : std::nullopt;
    const auto b = tokens.size() == 2 ? parse_numeric_answer(tokens[1]) : std::nullopt;
    if (!a || !b) {
      if (!seen_data) {
        seen_data = true;  // header
        continue;
      }
      throw ParseError("expected two numeric columns", line_no, 1);
    }
    seen_data = true;
    xs.push_back(*a);
    ys.push_back(*b);
  }
  return {std::move(xs), std::move(ys)};
}

}  // namespace lattice::stats
