#include "lattice/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lattice/errors.hpp"
#include "lattice/expr.hpp"

namespace lattice {

using nlohmann::json;

std::string_view kind_name(TestKind kind) {
  return kind == TestKind::Completion ? "completion" : "multiple_choice";
}

json to_json(const LatticeConfig& cfg) {
  json doc{{"n_levels", cfg.n_levels},
           {"rows", cfg.rows},
           {"items_per_node", cfg.items_per_node},
           {"threshold", cfg.threshold},
           {"kind", kind_name(cfg.kind)}};
  if (cfg.kind == TestKind::MultipleChoice) {
    doc["n_choices"] = cfg.n_choices;
  }
  return doc;
}

LatticeConfig config_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw ValidationError("config must be a JSON object");
  }
  auto int_field = [&](const char* key, int fallback, bool required) {
    if (!doc.contains(key)) {
      if (required) throw ValidationError(std::string("config is missing '") + key + "'");
      return fallback;
    }
    if (!doc.at(key).is_number_integer()) {
      throw ValidationError(std::string("config field '") + key + "' must be an integer");
    }
    return doc.at(key).get<int>();
  };
  const std::string kind = doc.value("kind", std::string("completion"));
  TestKind k;
  if (kind == "completion") {
    k = TestKind::Completion;
  } else if (kind == "multiple_choice") {
    k = TestKind::MultipleChoice;
  } else {
    throw ValidationError("unknown test kind '" + kind + "'");
  }
  return new_config(int_field("n_levels", 0, true), int_field("rows", 0, true),
                    int_field("items_per_node", 1, false), int_field("threshold", 1, false), k,
                    int_field("n_choices", 0, k == TestKind::MultipleChoice));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw NotFoundError("cannot open '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("malformed JSON document", line, column);
  }
}

LatticeConfig load_config(const std::string& path) {
  return config_from_json(parse_json(read_file(path)));
}

std::string config_hash(const LatticeConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

json to_json(const StudentProfile& profile) {
  return {{"name", profile.name}, {"p_correct", profile.p_correct}};
}

StudentProfile profile_from_json(const json& doc) {
  StudentProfile p;
  try {
    p.name = doc.value("name", std::string("custom"));
    p.p_correct = doc.at("p_correct").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ValidationError("profile needs a 'p_correct' array of numbers");
  }
  for (double v : p.p_correct) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("profile probabilities must lie in [0, 1]");
    }
  }
  return p;
}

std::string distribution_table(const GradeDistribution& dist, const LatticeConfig& cfg,
                               char sep) {
  std::string out = std::string("column") + sep + "grade" + sep + "mass" + sep + "count\n";
  for (int c = 0; c <= cfg.rows; ++c) {
    out += std::to_string(c);
    out += sep;
    out += expr::format_number(grade(cfg, c));
    out += sep;
    out += expr::format_number(dist.mass[c]);
    out += sep;
    out += std::to_string(dist.counts.empty() ? 0 : dist.counts[c]);
    out += '\n';
  }
  return out;
}

json to_json(const DistributionSummary& s) {
  return {{"mean_column", s.mean_column},   {"mean_grade", s.mean_grade},
          {"variance_grade", s.variance_grade}, {"q10_grade", s.q10_grade},
          {"median_grade", s.median_grade}, {"q90_grade", s.q90_grade}};
}

}  // namespace lattice
