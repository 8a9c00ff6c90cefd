#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lattice::expr {

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?
//   unary  := '-' unary | atom
//   atom   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
// Unary minus binds tighter than '^', so -2^2 evaluates to 4.
// midpoint_sum(f, lo, hi, inc) binds the variable x inside f.

enum class NodeKind { Number, Variable, Negate, Binary, Call };

struct Node {
  NodeKind kind = NodeKind::Number;
  double value = 0.0;         // Number
  std::string name;           // Variable, Call
  char op = 0;                // Binary: + - * / ^
  std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;
using Bindings = std::map<std::string, double, std::less<>>;

// Immutable expression tree. Copies share structure.
class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  const Node& root() const { return *root_; }
  bool empty() const noexcept { return root_ == nullptr; }

  double evaluate(const Bindings& bindings) const;

  // Names referenced outside the scope of a midpoint_sum integrand's x.
  std::set<std::string> free_variables() const;

  // Canonical text with the minimum parentheses needed to reparse to the same tree.
  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  NodePtr root_;
};

// Throws ParseError with 1-based line/column of the offending character.
Expression parse(std::string_view text);

double evaluate(std::string_view text, const Bindings& bindings);

// Left-endpoint loop x_j = lo + j*inc for j = 0..floor((hi-lo)/inc + 1e-9),
// accumulating f(x_j + inc/2) and scaling the total by inc.
double midpoint_sum(const Expression& integrand, double lo, double hi, double inc,
                    const Bindings& outer = {});

// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

}  // namespace lattice::expr
