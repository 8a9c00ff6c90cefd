#include "lattice/item.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <functional>
#include <set>

#include "lattice/errors.hpp"
#include "lattice/io.hpp"
#include "lattice/rng.hpp"

namespace lattice {

using nlohmann::json;

namespace {

expr::Expression parse_field_expr(const json& value, const std::string& where) {
  if (!value.is_string()) {
    throw ValidationError(where + " must be an expression string");
  }
  try {
    return expr::parse(value.get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

template <typename T>
T require(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) {
    throw ValidationError(where + " is missing '" + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + " has an ill-typed '" + key + "'");
  }
}

ParamDomain parse_domain(const std::string& name, const json& spec) {
  const std::string where = "param '" + name + "'";
  if (spec.is_array()) {
    return parse_domain(name, json{{"values", spec}});
  }
  if (!spec.is_object() || spec.size() == 0) {
    throw ValidationError(where + " must be an object");
  }
  if (spec.contains("int")) {
    const auto bounds = spec.at("int");
    if (!bounds.is_array() || bounds.size() != 2 || !bounds[0].is_number_integer() ||
        !bounds[1].is_number_integer()) {
      throw ValidationError(where + ": 'int' must be [lo, hi] integers");
    }
    IntRange r{bounds[0].get<long long>(), bounds[1].get<long long>(),
               spec.value("step", 1LL)};
    if (r.step < 1 || r.hi < r.lo) {
      throw ValidationError(where + ": integer range needs lo <= hi and step >= 1");
    }
    return r;
  }
  if (spec.contains("values")) {
    const auto& values = spec.at("values");
    if (!values.is_array()) {
      throw ValidationError(where + ": 'values' must be an array");
    }
    DecimalList list;
    for (const auto& v : values) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw ValidationError(where + ": 'values' entries must be finite numbers");
      }
      list.values.push_back(v.get<double>());
    }
    return list;
  }
  if (spec.contains("choices")) {
    const auto& values = spec.at("choices");
    if (!values.is_array()) {
      throw ValidationError(where + ": 'choices' must be an array");
    }
    ChoiceList list;
    for (const auto& v : values) {
      if (!v.is_string()) {
        throw ValidationError(where + ": 'choices' entries must be strings");
      }
      list.values.push_back(v.get<std::string>());
    }
    return list;
  }
  if (spec.contains("expr")) {
    return DerivedParam{parse_field_expr(spec.at("expr"), where)};
  }
  throw ValidationError(where + " has no recognized domain (int, values, choices, expr)");
}

json domain_to_json(const ParamDomain& domain) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, IntRange>) {
          json j{{"int", {d.lo, d.hi}}};
          if (d.step != 1) j["step"] = d.step;
          return j;
        } else if constexpr (std::is_same_v<T, DecimalList>) {
          return json{{"values", d.values}};
        } else if constexpr (std::is_same_v<T, ChoiceList>) {
          return json{{"choices", d.values}};
        } else {
          return json{{"expr", d.formula.to_string()}};
        }
      },
      domain);
}

std::size_t distinct_count(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
}

// Derived parameters in an order where each only depends on earlier ones.
std::vector<std::string> derived_order(const ItemTemplate& tmpl) {
  std::vector<std::string> order;
  std::set<std::string> done;
  std::set<std::string> visiting;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    if (done.count(name)) return;
    if (visiting.count(name)) {
      throw ValidationError("template '" + tmpl.id + "': derived parameter cycle through '" +
                            name + "'");
    }
    const auto& domain = tmpl.params.at(name);
    const auto* derived = std::get_if<DerivedParam>(&domain);
    if (derived == nullptr) {
      done.insert(name);
      return;
    }
    visiting.insert(name);
    for (const auto& dep : derived->formula.free_variables()) visit(dep);
    visiting.erase(name);
    done.insert(name);
    order.push_back(name);
  };
  for (const auto& [name, _] : tmpl.params) visit(name);
  return order;
}

void check_numeric_refs(const ItemTemplate& tmpl, const expr::Expression& e,
                        const std::string& where) {
  for (const auto& name : e.free_variables()) {
    const auto it = tmpl.params.find(name);
    if (it == tmpl.params.end()) {
      throw ValidationError("template '" + tmpl.id + "': " + where +
                            " references undeclared parameter '" + name + "'");
    }
    if (std::holds_alternative<ChoiceList>(it->second)) {
      throw ValidationError("template '" + tmpl.id + "': " + where + " uses text parameter '" +
                            name + "' in arithmetic");
    }
  }
}

void validate_template(const ItemTemplate& tmpl) {
  if (tmpl.id.empty()) {
    throw ValidationError("template id must be non-empty");
  }
  if (tmpl.level < 1) {
    throw ValidationError("template '" + tmpl.id + "': level must be >= 1");
  }
  for (const auto& [name, domain] : tmpl.params) {
    if (!std::holds_alternative<DerivedParam>(domain) && domain_size(domain) < 2) {
      throw ValidationError("template '" + tmpl.id + "': param '" + name +
                            "' needs at least two distinct values");
    }
  }
  for (const auto& name : placeholders(tmpl.prompt)) {
    if (!tmpl.params.count(name)) {
      throw ValidationError("template '" + tmpl.id + "': prompt placeholder '{{" + name +
                            "}}' is not a declared parameter");
    }
  }
  check_numeric_refs(tmpl, tmpl.answer, "answer");
  for (const auto& [name, domain] : tmpl.params) {
    if (const auto* derived = std::get_if<DerivedParam>(&domain)) {
      check_numeric_refs(tmpl, derived->formula, "param '" + name + "'");
    }
  }
  derived_order(tmpl);
  if (!(tmpl.tolerance.relative >= 0.0) || !(tmpl.tolerance.absolute >= 0.0)) {
    throw ValidationError("template '" + tmpl.id + "': tolerances must be >= 0");
  }
  if (tmpl.n_choices != 0 || !tmpl.distractors.empty()) {
    if (tmpl.n_choices < 2) {
      throw ValidationError("template '" + tmpl.id + "': n_choices must be >= 2");
    }
    if (static_cast<int>(tmpl.distractors.size()) != tmpl.n_choices - 1) {
      throw ValidationError("template '" + tmpl.id + "': expected " +
                            std::to_string(tmpl.n_choices - 1) + " distractors");
    }
    for (std::size_t i = 0; i < tmpl.distractors.size(); ++i) {
      check_numeric_refs(tmpl, tmpl.distractors[i], "distractor " + std::to_string(i + 1));
    }
  }
}

std::string display_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::size_t domain_size(const ParamDomain& domain) {
  return std::visit(
      [](const auto& d) -> std::size_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, IntRange>) {
          return static_cast<std::size_t>((d.hi - d.lo) / d.step + 1);
        } else if constexpr (std::is_same_v<T, DecimalList>) {
          return distinct_count(d.values);
        } else if constexpr (std::is_same_v<T, ChoiceList>) {
          return std::set<std::string>(d.values.begin(), d.values.end()).size();
        } else {
          return 1;
        }
      },
      domain);
}

std::vector<const ItemTemplate*> ItemBank::at_level(int level) const {
  std::vector<const ItemTemplate*> out;
  for (const auto& t : items) {
    if (t.level == level) out.push_back(&t);
  }
  return out;
}

int ItemBank::max_level() const {
  int m = 0;
  for (const auto& t : items) m = std::max(m, t.level);
  return m;
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const std::size_t close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) {
      throw ValidationError("unterminated '{{' placeholder in prompt");
    }
    std::string name(text.substr(pos + 2, close - pos - 2));
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    names.push_back(std::move(name));
    pos = close + 2;
  }
  return names;
}

std::string render_prompt(std::string_view text, const std::map<std::string, BoundValue>& values) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      return out;
    }
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw ValidationError("unterminated '{{' placeholder in prompt");
    }
    out.append(text.substr(pos, open - pos));
    std::string name(text.substr(open + 2, close - open - 2));
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    const auto it = values.find(name);
    if (it == values.end()) {
      throw ValidationError("no value bound for placeholder '{{" + name + "}}'");
    }
    if (const auto* num = std::get_if<double>(&it->second)) {
      out += expr::format_number(*num);
    } else {
      out += std::get<std::string>(it->second);
    }
    pos = close + 2;
  }
}

ItemTemplate parse_template(const json& doc) {
  if (!doc.is_object()) {
    throw ValidationError("item template must be a JSON object");
  }
  ItemTemplate t;
  t.id = require<std::string>(doc, "id", "item");
  const std::string where = "item '" + t.id + "'";
  t.level = require<int>(doc, "level", where);
  t.prompt = require<std::string>(doc, "prompt", where);
  if (doc.contains("params")) {
    const auto& params = doc.at("params");
    if (!params.is_object()) {
      throw ValidationError(where + ": 'params' must be an object");
    }
    for (const auto& [name, spec] : params.items()) {
      t.params.emplace(name, parse_domain(name, spec));
    }
  }
  if (!doc.contains("answer")) {
    throw ValidationError(where + " is missing 'answer'");
  }
  t.answer = parse_field_expr(doc.at("answer"), where + " answer");
  if (doc.contains("tolerance")) {
    const auto& tol = doc.at("tolerance");
    t.tolerance.relative = tol.value("relative", t.tolerance.relative);
    t.tolerance.absolute = tol.value("absolute", t.tolerance.absolute);
  }
  if (doc.contains("choices")) {
    const auto& choices = doc.at("choices");
    t.n_choices = require<int>(choices, "n_choices", where + " choices");
    if (!choices.contains("distractors") || !choices.at("distractors").is_array()) {
      throw ValidationError(where + ": choices need a 'distractors' array");
    }
    for (const auto& d : choices.at("distractors")) {
      t.distractors.push_back(parse_field_expr(d, where + " distractor"));
    }
  }
  validate_template(t);
  return t;
}

ItemTemplate parse_template(std::string_view text) { return parse_template(parse_json(text)); }

json to_json(const ItemTemplate& t) {
  json params = json::object();
  for (const auto& [name, domain] : t.params) params[name] = domain_to_json(domain);
  json doc{{"id", t.id},
           {"level", t.level},
           {"prompt", t.prompt},
           {"params", params},
           {"answer", t.answer.to_string()},
           {"tolerance", {{"relative", t.tolerance.relative}, {"absolute", t.tolerance.absolute}}}};
  if (t.is_multiple_choice()) {
    json distractors = json::array();
    for (const auto& d : t.distractors) distractors.push_back(d.to_string());
    doc["choices"] = {{"n_choices", t.n_choices}, {"distractors", distractors}};
  }
  return doc;
}

ItemBank parse_bank(const json& doc) {
  if (!doc.is_object() || !doc.contains("items") || !doc.at("items").is_array()) {
    throw ValidationError("item bank must be an object with an 'items' array");
  }
  ItemBank bank;
  bank.seed = doc.value("seed", std::uint64_t{0});
  std::set<std::string> ids;
  for (const auto& item : doc.at("items")) {
    auto t = parse_template(item);
    if (!ids.insert(t.id).second) {
      throw ValidationError("duplicate item id '" + t.id + "'");
    }
    bank.items.push_back(std::move(t));
  }
  return bank;
}

ItemBank parse_bank(std::string_view text) { return parse_bank(parse_json(text)); }

ItemBank load_bank(const std::string& path) { return parse_bank(read_file(path)); }

json to_json(const ItemBank& bank) {
  json items = json::array();
  for (const auto& t : bank.items) items.push_back(to_json(t));
  return json{{"seed", bank.seed}, {"items", items}};
}

json to_json(const ItemInstance& inst) {
  json bindings = json::object();
  for (const auto& [name, value] : inst.bindings) {
    std::visit([&](const auto& v) { bindings[name] = v; }, value);
  }
  json doc{{"template_id", inst.template_id},
           {"level", inst.level},
           {"bindings", bindings},
           {"prompt", inst.rendered_prompt},
           {"expected_answer", inst.expected_answer},
           {"tolerance",
            {{"relative", inst.tolerance.relative}, {"absolute", inst.tolerance.absolute}}},
           {"answer_form", inst.answer_form}};
  if (!inst.choices.empty()) {
    doc["choices"] = inst.choices;
    doc["correct_choice"] = inst.correct_choice;
  }
  return doc;
}

ItemInstance instance_from_json(const json& doc) {
  ItemInstance inst;
  inst.template_id = doc.at("template_id").get<std::string>();
  inst.level = doc.at("level").get<int>();
  for (const auto& [name, value] : doc.at("bindings").items()) {
    if (value.is_string()) {
      inst.bindings.emplace(name, value.get<std::string>());
    } else {
      inst.bindings.emplace(name, value.get<double>());
    }
  }
  inst.rendered_prompt = doc.at("prompt").get<std::string>();
  inst.expected_answer = doc.at("expected_answer").get<double>();
  inst.tolerance.relative = doc.at("tolerance").at("relative").get<double>();
  inst.tolerance.absolute = doc.at("tolerance").at("absolute").get<double>();
  inst.answer_form = doc.value("answer_form", std::string{});
  if (doc.contains("choices")) {
    inst.choices = doc.at("choices").get<std::vector<double>>();
    inst.correct_choice = doc.at("correct_choice").get<int>();
  }
  return inst;
}

ItemInstance instantiate(const ItemTemplate& tmpl, std::string_view student_key,
                         std::uint64_t seed) {
  CounterRng rng(seed, combine_keys(fnv1a64(student_key), fnv1a64(tmpl.id)));

  ItemInstance inst;
  inst.template_id = tmpl.id;
  inst.level = tmpl.level;
  inst.tolerance = tmpl.tolerance;
  inst.answer_form = tmpl.answer.to_string();

  expr::Bindings numeric;
  for (const auto& [name, domain] : tmpl.params) {
    if (const auto* r = std::get_if<IntRange>(&domain)) {
      const auto n = static_cast<std::uint64_t>(domain_size(domain));
      const double v = static_cast<double>(r->lo + static_cast<long long>(rng.below(n)) * r->step);
      numeric[name] = v;
      inst.bindings[name] = v;
    } else if (const auto* list = std::get_if<DecimalList>(&domain)) {
      const double v = list->values[rng.below(list->values.size())];
      numeric[name] = v;
      inst.bindings[name] = v;
    } else if (const auto* choices = std::get_if<ChoiceList>(&domain)) {
      inst.bindings[name] = choices->values[rng.below(choices->values.size())];
    }
  }

  try {
    for (const auto& name : derived_order(tmpl)) {
      const double v = std::get<DerivedParam>(tmpl.params.at(name)).formula.evaluate(numeric);
      numeric[name] = v;
      inst.bindings[name] = v;
    }
    inst.expected_answer = tmpl.answer.evaluate(numeric);
  } catch (const EvalError& e) {
    throw EvalError("template '" + tmpl.id + "': " + e.what());
  }

  inst.rendered_prompt = render_prompt(tmpl.prompt, inst.bindings);

  if (tmpl.is_multiple_choice()) {
    inst.choices.push_back(inst.expected_answer);
    for (const auto& d : tmpl.distractors) {
      try {
        inst.choices.push_back(d.evaluate(numeric));
      } catch (const EvalError& e) {
        throw EvalError("template '" + tmpl.id + "' distractor: " + e.what());
      }
    }
    for (std::size_t i = 1; i < inst.choices.size(); ++i) {
      const double gap = std::abs(inst.choices[i] - inst.expected_answer);
      if (gap <= std::max(tmpl.tolerance.absolute,
                          tmpl.tolerance.relative * std::abs(inst.expected_answer))) {
        throw EvalError("template '" + tmpl.id + "': distractor " + std::to_string(i) +
                        " is indistinguishable from the answer");
      }
    }
    std::vector<std::size_t> order(inst.choices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
    std::vector<double> shuffled;
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled.push_back(inst.choices[order[i]]);
      if (order[i] == 0) inst.correct_choice = static_cast<int>(i);
    }
    inst.choices = std::move(shuffled);
    inst.rendered_prompt += "\nOptions:";
    for (std::size_t i = 0; i < inst.choices.size(); ++i) {
      inst.rendered_prompt += "\n  (" + std::to_string(i + 1) + ") " + display_number(inst.choices[i]);
    }
  }
  return inst;
}

bool check_answer(const ItemInstance& instance, double submitted, const Tolerance& tolerance) {
  if (!std::isfinite(submitted)) {
    return false;
  }
  const double allowed =
      std::max(tolerance.absolute, tolerance.relative * std::abs(instance.expected_answer));
  return std::abs(submitted - instance.expected_answer) <= allowed;
}

bool check_answer(const ItemInstance& instance, double submitted) {
  return check_answer(instance, submitted, instance.tolerance);
}

bool check_answer(const ItemInstance& instance, std::string_view submitted,
                  const Tolerance& tolerance) {
  const auto value = parse_numeric_answer(submitted);
  return value && check_answer(instance, *value, tolerance);
}

std::optional<double> parse_numeric_answer(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;

  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  // Require digits[.digits][e[+-]digits] so from_chars never sees inf/nan/hex.
  std::size_t i = 0;
  std::size_t digits = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++digits;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++digits;
  }
  if (digits == 0) return std::nullopt;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;

  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return negative ? -value : value;
}

}  // namespace lattice
