#include "lattice/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lattice/errors.hpp"
#include "lattice/io.hpp"
#include "lattice/item.hpp"
#include "lattice/server.hpp"
#include "lattice/session.hpp"
#include "lattice/stats.hpp"
#include "lattice/student_sim.hpp"

namespace lattice::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20130101;
constexpr int kDefaultPort = 8080;
constexpr const char* kPortVariable = "LATTICE_PORT";

struct Options {
  std::string config_path;
  std::string bank_path;
  std::string profile = "good";
  std::uint64_t students = 100000;
  std::uint64_t item_students = 30;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::string out_path;
  std::string format = "tsv";
  unsigned workers = 0;
  std::string input_path;
  std::string keys_path;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string log_path;
  std::string web_root;
  std::string test_id = "default";
};

StudentProfile resolve_profile(const std::string& spec, const LatticeConfig& cfg) {
  if (std::filesystem::exists(spec) && std::filesystem::is_regular_file(spec)) {
    return profile_from_json(parse_json(read_file(spec)));
  }
  return preset_profile(cfg.kind, spec);
}

void write_output(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out_path.empty() || o.out_path == "-") {
    out << text;
    return;
  }
  std::ofstream file(o.out_path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error("cannot write '" + o.out_path + "'");
  }
  file << text;
}

json meta(const Options& o, const LatticeConfig& cfg, const char* command,
          std::optional<std::uint64_t> seed) {
  return {{"command", command},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"config_hash", config_hash(cfg)},
          {"config", to_json(cfg)},
          {"config_path", o.config_path}};
}

std::string render_distribution(const Options& o, const LatticeConfig& cfg,
                                const StudentProfile& profile, const GradeDistribution& dist,
                                json m) {
  const auto summary = summarize(dist, cfg);
  m["profile"] = to_json(profile);
  m["sample_count"] = dist.sample_count;
  if (o.format == "json") {
    json rows = json::array();
    for (const auto& r : summary.rows) {
      rows.push_back({{"column", r.column}, {"grade", r.grade}, {"mass", r.mass}, {"count", r.count}});
    }
    return json{{"meta", m}, {"summary", to_json(summary)}, {"distribution", rows}}.dump(2) + "\n";
  }
  const char sep = o.format == "csv" ? ',' : '\t';
  std::string text;
  text += "# meta " + m.dump() + "\n";
  text += "# summary " + to_json(summary).dump() + "\n";
  text += distribution_table(dist, cfg, sep);
  return text;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const auto cfg = load_config(o.config_path);
  const auto profile = resolve_profile(o.profile, cfg);
  const auto dist = simulate_cohort(cfg, profile, o.students, o.seed, o.workers);
  auto m = meta(o, cfg, "simulate", o.seed);
  m["students"] = o.students;
  write_output(o, render_distribution(o, cfg, profile, dist, m), out);
  return kOk;
}

int cmd_exact(const Options& o, std::ostream& out) {
  const auto cfg = load_config(o.config_path);
  const auto profile = resolve_profile(o.profile, cfg);
  const auto dist = exact_distribution(cfg, profile);
  write_output(o, render_distribution(o, cfg, profile, dist, meta(o, cfg, "exact", std::nullopt)),
               out);
  return kOk;
}

std::vector<std::string> student_keys(const Options& o) {
  std::vector<std::string> keys;
  if (!o.keys_path.empty()) {
    std::istringstream in(read_file(o.keys_path));
    for (std::string line; std::getline(in, line);) {
      line.erase(std::remove(line.begin(), line.end(), '\r'), line.end());
      if (!line.empty()) keys.push_back(line);
    }
  } else {
    for (std::uint64_t i = 1; i <= o.item_students; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "student-%04llu", static_cast<unsigned long long>(i));
      keys.emplace_back(buf);
    }
  }
  if (keys.empty()) {
    throw ValidationError("no student keys to generate items for");
  }
  return keys;
}

int cmd_gen_items(const Options& o, std::ostream& out) {
  const auto bank_text = read_file(o.bank_path);
  const auto bank = parse_bank(bank_text);
  const std::uint64_t seed = o.seed_given ? o.seed : bank.seed;
  const auto keys = student_keys(o);
  json m{{"command", "gen-items"},
         {"seed", seed},
         {"bank_hash", [&] {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(fnv1a64(to_json(bank).dump())));
            return std::string(buf);
          }()}};
  if (!o.config_path.empty()) {
    const auto cfg = load_config(o.config_path);
    m["config_hash"] = config_hash(cfg);
  }

  const bool to_dir = !o.out_path.empty() && o.out_path != "-";
  if (to_dir) {
    std::filesystem::create_directories(o.out_path);
  }
  json index = json::array();
  for (const auto& key : keys) {
    json items = json::array();
    for (const auto& tmpl : bank.items) {
      items.push_back(to_json(instantiate(tmpl, key, seed)));
    }
    json doc{{"meta", m}, {"student_key", key}, {"items", items}};
    if (to_dir) {
      const auto path = std::filesystem::path(o.out_path) / (key + ".json");
      std::ofstream file(path, std::ios::binary | std::ios::trunc);
      if (!file) throw Error("cannot write '" + path.string() + "'");
      file << doc.dump(2) << "\n";
      index.push_back(path.filename().string());
    } else {
      out << doc.dump() << "\n";
    }
  }
  if (to_dir) {
    out << json{{"meta", m}, {"files", index}}.dump(2) << "\n";
  }
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const auto [xs, ys] = stats::read_pairs(read_file(o.input_path));
  const auto report = stats::correlate(xs, ys);
  json doc = stats::to_json(report);
  doc["meta"] = {{"command", "stats"}, {"input", o.input_path}, {"seed", nullptr}};
  write_output(o, doc.dump(2) + "\n", out);
  return kOk;
}

int cmd_serve(const Options& o, std::ostream& out) {
  int port = o.port;
  if (port == 0) {
    if (const char* env = std::getenv(kPortVariable)) {
      port = std::atoi(env);
    }
    if (port == 0) port = kDefaultPort;
  }
  SessionService service(SessionService::Options{o.log_path, true});
  for (const auto& w : service.recovery_warnings()) {
    std::cerr << "warning: " << w << "\n";
  }
  const auto cfg = load_config(o.config_path);
  service.register_config(o.test_id, cfg);
  service.register_bank(o.test_id, load_bank(o.bank_path));
  service.register_test(o.test_id, o.test_id, o.test_id);

  HttpServer server(service, o.web_root);
  const int bound = server.bind(o.host, port);
  out << "serving test '" << o.test_id << "' (" << cfg.total_questions() << " questions, config "
      << config_hash(cfg) << ") on http://" << o.host << ":" << bound << std::endl;
  server.serve();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leveled adaptive assessment: simulation, item generation, statistics, delivery"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", o.config_path, "Lattice config JSON");
    if (required) opt->required();
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", o.out_path, "Output path (default stdout)");
  };

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo grade distribution");
  add_config(simulate, true);
  simulate->add_option("--profile", o.profile, "Preset (good|bad|direct|inverse) or profile JSON");
  simulate->add_option("--students", o.students, "Number of simulated students")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", o.seed, "Random seed");
  simulate->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  simulate->add_option("--format", o.format, "tsv, csv or json")
      ->check(CLI::IsMember({"tsv", "csv", "json"}));
  add_output(simulate);

  auto* exact = app.add_subcommand("exact", "Exact grade distribution by dynamic programming");
  add_config(exact, true);
  exact->add_option("--profile", o.profile, "Preset (good|bad|direct|inverse) or profile JSON");
  exact->add_option("--format", o.format, "tsv, csv or json")
      ->check(CLI::IsMember({"tsv", "csv", "json"}));
  add_output(exact);

  auto* gen = app.add_subcommand("gen-items", "Per-student item instances from an item bank");
  gen->add_option("--bank", o.bank_path, "Item bank JSON")->required();
  add_config(gen, false);
  gen->add_option("--students", o.item_students, "Generate for student-0001..student-N (default 30)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--keys", o.keys_path, "File with one student key per line");
  gen->add_option("--seed", o.seed, "Override the bank seed");
  gen->add_option("--out", o.out_path, "Output directory (default: JSON lines on stdout)");

  auto* st = app.add_subcommand("stats", "Pearson/Spearman correlation report");
  st->add_option("input,--input", o.input_path, "Two-column delimited file of paired grades")
      ->required();
  add_output(st);

  auto* serve = app.add_subcommand("serve", "Run the test-taking service");
  add_config(serve, true);
  serve->add_option("--bank", o.bank_path, "Item bank JSON")->required();
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port", o.port, std::string("Port (default $") + kPortVariable + " or 8080)");
  serve->add_option("--log", o.log_path, "Append-only event log for persistence");
  serve->add_option("--web-root", o.web_root, "Directory of static client files");
  serve->add_option("--test-id", o.test_id, "Test id exposed to clients");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  for (const auto* sub : {simulate, gen}) {
    if (const auto* seed = sub->get_option_no_throw("--seed"); seed && seed->count() > 0) {
      o.seed_given = true;
    }
  }

  try {
    if (*simulate) return cmd_simulate(o, out);
    if (*exact) return cmd_exact(o, out);
    if (*gen) return cmd_gen_items(o, out);
    if (*st) return cmd_stats(o, out);
    if (*serve) return cmd_serve(o, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsage;
}

}  // namespace lattice::cli
