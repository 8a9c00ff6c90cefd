#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lattice/expr.hpp"

namespace lattice {

struct Tolerance {
  double relative = 1e-4;
  double absolute = 1e-9;

  bool operator==(const Tolerance&) const = default;
};

// Integers lo, lo+step, ..., <= hi.
struct IntRange {
  long long lo = 0;
  long long hi = 0;
  long long step = 1;
  bool operator==(const IntRange&) const = default;
};

struct DecimalList {
  std::vector<double> values;
  bool operator==(const DecimalList&) const = default;
};

// Text-only values, substituted into the prompt but never into expressions.
struct ChoiceList {
  std::vector<std::string> values;
  bool operator==(const ChoiceList&) const = default;
};

// Computed from other parameters after they are drawn.
struct DerivedParam {
  expr::Expression formula;
  bool operator==(const DerivedParam& o) const { return formula == o.formula; }
};

using ParamDomain = std::variant<IntRange, DecimalList, ChoiceList, DerivedParam>;

struct ItemTemplate {
  std::string id;
  int level = 1;
  std::string prompt;
  std::map<std::string, ParamDomain> params;
  expr::Expression answer;
  Tolerance tolerance;
  int n_choices = 0;  // 0 for completion items
  std::vector<expr::Expression> distractors;

  bool is_multiple_choice() const noexcept { return n_choices > 0; }
  bool operator==(const ItemTemplate&) const = default;
};

using BoundValue = std::variant<double, std::string>;

struct ItemInstance {
  std::string template_id;
  int level = 1;
  std::map<std::string, BoundValue> bindings;
  std::string rendered_prompt;
  double expected_answer = 0.0;
  Tolerance tolerance;
  std::string answer_form;      // canonical text of the template's answer expression
  std::vector<double> choices;  // multiple choice options in presentation order
  int correct_choice = -1;      // 0-based index into choices

  bool operator==(const ItemInstance&) const = default;
};

struct ItemBank {
  std::uint64_t seed = 0;
  std::vector<ItemTemplate> items;

  std::vector<const ItemTemplate*> at_level(int level) const;
  int max_level() const;
};

// Parses one template object. Syntax errors carry line/column within the
// expression text; semantic problems raise ValidationError.
ItemTemplate parse_template(const nlohmann::json& doc);
ItemTemplate parse_template(std::string_view text);
inline ItemTemplate parse_template(const std::string& text) { return parse_template(std::string_view(text)); }
inline ItemTemplate parse_template(const char* text) { return parse_template(std::string_view(text)); }

nlohmann::json to_json(const ItemTemplate& tmpl);

ItemBank parse_bank(const nlohmann::json& doc);
ItemBank parse_bank(std::string_view text);
inline ItemBank parse_bank(const std::string& text) { return parse_bank(std::string_view(text)); }
ItemBank load_bank(const std::string& path);
nlohmann::json to_json(const ItemBank& bank);

nlohmann::json to_json(const ItemInstance& instance);
ItemInstance instance_from_json(const nlohmann::json& doc);

// Number of values a drawn domain can take; derived parameters report 1.
std::size_t domain_size(const ParamDomain& domain);

// Bindings are a pure function of (seed, student_key, template id).
ItemInstance instantiate(const ItemTemplate& tmpl, std::string_view student_key,
                         std::uint64_t seed);

bool check_answer(const ItemInstance& instance, double submitted, const Tolerance& tolerance);
bool check_answer(const ItemInstance& instance, double submitted);

// Text submissions that are not a plain number are simply wrong.
bool check_answer(const ItemInstance& instance, std::string_view submitted,
                  const Tolerance& tolerance);

// Strict decimal parse (sign, digits, point, exponent); nullopt otherwise.
std::optional<double> parse_numeric_answer(std::string_view text);

// Replaces every {{name}} in text; throws ValidationError for unknown names.
std::string render_prompt(std::string_view text, const std::map<std::string, BoundValue>& values);

// Names appearing in {{name}} placeholders.
std::vector<std::string> placeholders(std::string_view text);

}  // namespace lattice
