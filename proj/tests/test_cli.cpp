#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "lattice/cli.hpp"
#include "lattice/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = lattice::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(LATTICE_TEST_DATA) + "/" + name; }

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("lattice_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

// 30 pairs whose sample correlation is exactly r: y mixes centered x with a
// component orthogonal to it and to the constant vector.
fs::path pairs_with_correlation(double r) {
  constexpr int n = 30;
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = i + 1 - 15.5;
    w[i] = std::sin(3.1 * i);
  }
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };
  double mean_w = 0;
  for (double v : w) mean_w += v / n;
  for (double& v : w) v -= mean_w;
  const double proj = dot(w, x) / dot(x, x);
  for (int i = 0; i < n; ++i) w[i] -= proj * x[i];
  const double scale = std::sqrt(dot(x, x) / dot(w, w));
  const auto path = scratch("pairs.csv");
  std::ofstream f(path);
  f << "completion,open\n";
  char line[96];
  for (int i = 0; i < n; ++i) {
    const double y = 60 + r * x[i] + std::sqrt(1 - r * r) * scale * w[i];
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", 50 + x[i], y);
    f << line;
  }
  return path;
}

}  // namespace

TEST_CASE("simulate is byte-identical for a fixed seed") {
  const std::vector<std::string> args{"simulate", "--config", data("rows2.json"), "--profile",
                                      data("rows2_profile.json"), "--students", "20000", "--seed",
                                      "7"};
  const auto a = run(args);
  CHECK(a.code == 0);
  auto with_workers = args;
  with_workers.insert(with_workers.end(), {"--workers", "3"});
  const auto b = run(with_workers);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("# meta ", 0) == 0);
  CHECK(a.out.find("\"seed\":7") != std::string::npos);
  CHECK(a.out.find("\"config_hash\"") != std::string::npos);

  auto reseeded = args;
  reseeded[8] = "8";
  CHECK(run(reseeded).out != a.out);
}

TEST_CASE("exact reports the hand-computed two-row masses") {
  const auto r = run({"exact", "--config", data("rows2.json"), "--profile",
                      data("rows2_profile.json"), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  const auto& rows = doc["distribution"];
  REQUIRE(rows.size() == 3);
  // Column 0 needs two misses at level 1; column 2 needs a level-1 hit then a level-2 hit.
  CHECK(rows[0]["mass"].get<double>() == doctest::Approx(0.1 * 0.1));
  CHECK(rows[2]["mass"].get<double>() == doctest::Approx(0.9 * 0.5));
  CHECK(rows[1]["mass"].get<double>() == doctest::Approx(0.9 * 0.5 + 0.1 * 0.9));
  CHECK(doc["meta"]["seed"].is_null());
}

TEST_CASE("stats reproduces the reported correlation test") {
  const auto path = pairs_with_correlation(0.66);
  const auto r = run({"stats", path.string()});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["n"] == 30);
  CHECK(doc["pearson"]["r"].get<double>() == doctest::Approx(0.66).epsilon(1e-12));
  CHECK(std::abs(doc["pearson"]["t"].get<double>() - 4.6487) <= 0.0005);
  CHECK(doc["pearson"]["p"].get<double>() < 1.3e-4);
  CHECK(doc["pearson"]["p"].get<double>() > 7e-5);
}

TEST_CASE("gen-items writes one file per student") {
  const auto dir = scratch("items");
  fs::remove_all(dir);
  const auto r = run({"gen-items", "--bank", data("bank.json"), "--students", "4", "--out",
                      dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "student-0001.json"));
  CHECK(fs::exists(dir / "student-0004.json"));
  const auto doc = lattice::parse_json(lattice::read_file((dir / "student-0002.json").string()));
  CHECK(doc["items"].size() == 6);
  CHECK(doc["meta"]["seed"] == 2013);

  const auto lines = run({"gen-items", "--bank", data("bank.json"), "--students", "2"});
  CHECK(std::count(lines.out.begin(), lines.out.end(), '\n') == 2);
  const auto reseeded = run({"gen-items", "--bank", data("bank.json"), "--students", "2", "--seed", "5"});
  CHECK(reseeded.out != lines.out);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == lattice::cli::kUsage);
  CHECK(run({"simulate"}).code == lattice::cli::kUsage);
  CHECK(run({"frobnicate"}).code == lattice::cli::kUsage);
  CHECK(run({"exact", "--config", data("bad_config.json")}).code == lattice::cli::kValidationError);
  CHECK(run({"exact", "--config", data("rows2.json"), "--profile", "genius"}).code ==
        lattice::cli::kRuntimeError);

  const auto broken = scratch("broken.json");
  std::ofstream(broken) << "{\"n_levels\": 2,\n \"rows\": }";
  const auto r = run({"exact", "--config", broken.string()});
  CHECK(r.code == lattice::cli::kParseError);
  CHECK(r.err.find("line 2") != std::string::npos);

  CHECK(run({"exact", "--config", "/nonexistent.json"}).code == lattice::cli::kRuntimeError);
  CHECK(run({"--help"}).code == 0);
}
