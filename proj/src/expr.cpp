#include "lattice/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <string>

#include "lattice/errors.hpp"

namespace lattice::expr {

namespace {

constexpr std::string_view kIntegrandVariable = "x";
constexpr double kEndpointSlack = 1e-9;
constexpr double kMaxIterations = 1e8;

struct Builtin {
  std::string_view name;
  std::size_t arity;
};

constexpr std::array<Builtin, 8> kBuiltins{{
    {"sin", 1},
    {"cos", 1},
    {"tan", 1},
    {"exp", 1},
    {"log", 1},
    {"sqrt", 1},
    {"abs", 1},
    {"midpoint_sum", 4},
}};

const Builtin* find_builtin(std::string_view name) {
  for (const auto& b : kBuiltins) {
    if (b.name == name) {
      return &b;
    }
  }
  return nullptr;
}

NodePtr make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->value = v;
  return n;
}

NodePtr make_variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->name = std::move(name);
  return n;
}

NodePtr make_negate(NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Negate;
  n->args.push_back(std::move(operand));
  return n;
}

NodePtr make_binary(char op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Binary;
  n->op = op;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return n;
}

NodePtr make_call(std::string name, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->name = std::move(name);
  n->args = std::move(args);
  return n;
}

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    skip_space();
    if (at_end()) {
      fail("empty expression");
    }
    NodePtr root = parse_expr();
    skip_space();
    if (!at_end()) {
      fail(std::string("unexpected '") + text_[pos_] + "'");
    }
    return root;
  }

 private:
  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      skip_space();
      if (peek() == '+' || peek() == '-') {
        const char op = text_[pos_++];
        lhs = make_binary(op, std::move(lhs), parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      skip_space();
      if (peek() == '*' || peek() == '/') {
        const char op = text_[pos_++];
        lhs = make_binary(op, std::move(lhs), parse_factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    NodePtr base = parse_unary();
    skip_space();
    if (peek() == '^') {
      ++pos_;
      return make_binary('^', std::move(base), parse_factor());
    }
    return base;
  }

  NodePtr parse_unary() {
    skip_space();
    if (peek() == '-') {
      ++pos_;
      return make_negate(parse_unary());
    }
    return parse_atom();
  }

  NodePtr parse_atom() {
    skip_space();
    if (at_end()) {
      fail("unexpected end of expression");
    }
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (is_digit(c) || c == '.') {
      return parse_number();
    }
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      while (!at_end() && is_ident_char(text_[pos_])) {
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      skip_space();
      if (peek() != '(') {
        return make_variable(std::move(name));
      }
      const Builtin* builtin = find_builtin(name);
      if (builtin == nullptr) {
        fail_at(start, "unknown function '" + name + "'");
      }
      ++pos_;
      std::vector<NodePtr> args;
      args.push_back(parse_expr());
      skip_space();
      while (peek() == ',') {
        ++pos_;
        args.push_back(parse_expr());
        skip_space();
      }
      expect(')');
      if (args.size() != builtin->arity) {
        fail_at(start, "function '" + name + "' takes " + std::to_string(builtin->arity) +
                           " argument(s), got " + std::to_string(args.size()));
      }
      return make_call(std::move(name), std::move(args));
    }
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (!at_end() && is_digit(text_[pos_])) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (!at_end() && is_digit(text_[pos_])) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (at_end() || !is_digit(text_[pos_])) {
        pos_ = save;
      } else {
        while (!at_end() && is_digit(text_[pos_])) ++pos_;
      }
    }
    const std::string_view token = text_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || end != token.data() + token.size() || !std::isfinite(value)) {
      fail_at(start, "malformed number '" + std::string(token) + "'");
    }
    return make_number(value);
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) {
      fail(at_end() ? std::string("expected '") + c + "' before end of expression"
                    : std::string("expected '") + c + "', found '" + text_[pos_] + "'");
    }
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                         text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }

  [[noreturn]] void fail_at(std::size_t offset, const std::string& message) const {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("expression syntax error: " + message, line, column);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw EvalError(std::string("non-finite result in ") + what);
  }
  return v;
}

// Bindings visible while evaluating: an optional innermost x over the outer map.
struct Scope {
  const Bindings& outer;
  const double* x = nullptr;

  double lookup(const std::string& name) const {
    if (x != nullptr && name == kIntegrandVariable) {
      return *x;
    }
    const auto it = outer.find(name);
    if (it == outer.end()) {
      throw EvalError("unbound variable '" + name + "'");
    }
    return it->second;
  }
};

double eval_node(const Node& n, const Scope& scope);

double midpoint_loop(const Node& integrand, double lo, double hi, double inc,
                     const Bindings& outer) {
  if (!(inc > 0.0)) {
    throw EvalError("midpoint_sum increment must be positive");
  }
  if (lo > hi) {
    throw EvalError("midpoint_sum needs lo <= hi");
  }
  const double steps = std::floor((hi - lo) / inc + kEndpointSlack);
  if (!(steps < kMaxIterations)) {
    throw EvalError("midpoint_sum iteration count too large");
  }
  const auto n = static_cast<long long>(steps);
  double total = 0.0;
  for (long long j = 0; j <= n; ++j) {
    const double x = lo + static_cast<double>(j) * inc + inc / 2.0;
    total += eval_node(integrand, Scope{outer, &x});
  }
  return checked(total * inc, "midpoint_sum");
}

double eval_call(const Node& n, const Scope& scope) {
  if (n.name == "midpoint_sum") {
    const double lo = eval_node(*n.args[1], scope);
    const double hi = eval_node(*n.args[2], scope);
    const double inc = eval_node(*n.args[3], scope);
    // The integrand sees the caller's bindings with x rebound.
    if (scope.x == nullptr) {
      return midpoint_loop(*n.args[0], lo, hi, inc, scope.outer);
    }
    Bindings merged = scope.outer;
    merged.insert_or_assign(std::string(kIntegrandVariable), *scope.x);
    return midpoint_loop(*n.args[0], lo, hi, inc, merged);
  }
  const double a = eval_node(*n.args[0], scope);
  if (n.name == "sin") return checked(std::sin(a), "sin");
  if (n.name == "cos") return checked(std::cos(a), "cos");
  if (n.name == "tan") return checked(std::tan(a), "tan");
  if (n.name == "exp") return checked(std::exp(a), "exp");
  if (n.name == "abs") return std::abs(a);
  if (n.name == "log") {
    if (!(a > 0.0)) throw EvalError("log of non-positive value");
    return std::log(a);
  }
  if (n.name == "sqrt") {
    if (a < 0.0) throw EvalError("sqrt of negative value");
    return std::sqrt(a);
  }
  throw EvalError("unknown function '" + n.name + "'");
}

double eval_node(const Node& n, const Scope& scope) {
  switch (n.kind) {
    case NodeKind::Number:
      return n.value;
    case NodeKind::Variable:
      return scope.lookup(n.name);
    case NodeKind::Negate:
      return -eval_node(*n.args[0], scope);
    case NodeKind::Call:
      return eval_call(n, scope);
    case NodeKind::Binary: {
      const double a = eval_node(*n.args[0], scope);
      const double b = eval_node(*n.args[1], scope);
      switch (n.op) {
        case '+':
          return checked(a + b, "addition");
        case '-':
          return checked(a - b, "subtraction");
        case '*':
          return checked(a * b, "multiplication");
        case '/':
          if (b == 0.0) throw EvalError("division by zero");
          return checked(a / b, "division");
        case '^':
          return checked(std::pow(a, b), "power");
      }
      break;
    }
  }
  throw EvalError("malformed expression node");
}

void collect_free(const Node& n, bool x_bound, std::set<std::string>& out) {
  switch (n.kind) {
    case NodeKind::Number:
      return;
    case NodeKind::Variable:
      if (!(x_bound && n.name == kIntegrandVariable)) {
        out.insert(n.name);
      }
      return;
    case NodeKind::Call:
      if (n.name == "midpoint_sum") {
        collect_free(*n.args[0], true, out);
        for (std::size_t i = 1; i < n.args.size(); ++i) collect_free(*n.args[i], x_bound, out);
        return;
      }
      [[fallthrough]];
    default:
      for (const auto& a : n.args) collect_free(*a, x_bound, out);
  }
}

int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::Binary:
      if (n.op == '+' || n.op == '-') return 1;
      if (n.op == '*' || n.op == '/') return 2;
      return 3;
    case NodeKind::Negate:
      return 4;
    default:
      return 5;
  }
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number:
      out += format_number(n.value);
      return;
    case NodeKind::Variable:
      out += n.name;
      return;
    case NodeKind::Negate:
      out += '-';
      print_child(*n.args[0], precedence(*n.args[0]) < 4, out);
      return;
    case NodeKind::Call:
      out += n.name;
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i > 0) out += ", ";
        print_node(*n.args[i], out);
      }
      out += ')';
      return;
    case NodeKind::Binary: {
      const int p = precedence(n);
      const int lp = precedence(*n.args[0]);
      const int rp = precedence(*n.args[1]);
      if (n.op == '^') {
        print_child(*n.args[0], lp <= 3, out);
        out += '^';
        print_child(*n.args[1], rp < 3, out);
      } else {
        print_child(*n.args[0], lp < p, out);
        out += ' ';
        out += n.op;
        out += ' ';
        print_child(*n.args[1], rp <= p, out);
      }
      return;
    }
  }
}

bool equal_nodes(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.op != b.op || a.name != b.name || a.args.size() != b.args.size()) {
    return false;
  }
  if (a.kind == NodeKind::Number && a.value != b.value) {
    return false;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!equal_nodes(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

}  // namespace

Expression parse(std::string_view text) { return Expression(Parser(text).parse_all()); }

double Expression::evaluate(const Bindings& bindings) const {
  if (empty()) {
    throw EvalError("empty expression");
  }
  return eval_node(*root_, Scope{bindings});
}

std::set<std::string> Expression::free_variables() const {
  std::set<std::string> out;
  if (!empty()) collect_free(*root_, false, out);
  return out;
}

std::string Expression::to_string() const {
  std::string out;
  if (!empty()) print_node(*root_, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return equal_nodes(*a.root_, *b.root_);
}

double evaluate(std::string_view text, const Bindings& bindings) {
  return parse(text).evaluate(bindings);
}

double midpoint_sum(const Expression& integrand, double lo, double hi, double inc,
                    const Bindings& outer) {
  if (integrand.empty()) {
    throw EvalError("empty integrand");
  }
  return midpoint_loop(integrand.root(), lo, hi, inc, outer);
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) {
    return std::to_string(value);
  }
  return std::string(buf.data(), end);
}

}  // namespace lattice::expr
