#ifndef EVOLAB_EXPRESSION_HPP
#define EVOLAB_EXPRESSION_HPP

#include "evolab/core.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace evolab {

namespace detail {
struct ExprNode;
}

/// Scalar expression in t and x1..xd, compiled to a postfix program.
///
/// Grammar (whitespace ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | 't' | 'x'k | func '(' expr ')' | 'norm' '(' 'x' ')' | '(' expr ')'
///   func    := exp | log | sin | cos | abs | sqrt
class Expression {
 public:
  static Expression parse(std::string_view source, int dimension, std::size_t base_offset = 0);

  double operator()(double t, Eigen::Ref<const Vector> x) const;

  /// Canonical text with minimal parentheses.
  std::string to_string() const;

  int dimension() const { return dim_; }
  bool uses_x() const { return uses_x_; }
  bool uses_t() const { return uses_t_; }

  enum class Op : std::uint8_t {
    Const, Time, Coord, Norm, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sin, Cos, Abs, Sqrt
  };
  struct Instr {
    Op op;
    int index = 0;
    double value = 0.0;
  };

 private:
  std::shared_ptr<const detail::ExprNode> root_;
  std::vector<Instr> code_;
  int max_depth_ = 0;
  int dim_ = 0;
  bool uses_x_ = false;
  bool uses_t_ = false;
};

/// Vector field with one expression per component.
class DriftExpression {
 public:
  DriftExpression() = default;
  explicit DriftExpression(std::vector<Expression> components);

  void operator()(double t, Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) const;
  Vector operator()(double t, Eigen::Ref<const Vector> x) const;

  int dimension() const { return static_cast<int>(components_.size()); }
  const std::vector<Expression>& components() const { return components_; }
  std::string to_string() const;

 private:
  std::vector<Expression> components_;
};

/// Components are separated by ';' and must number exactly `dimension`.
DriftExpression parse_drift_expression(std::string_view source, int dimension);

}  // namespace evolab

#endif  // EVOLAB_EXPRESSION_HPP
