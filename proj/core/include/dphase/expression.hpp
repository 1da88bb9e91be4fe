#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dphase {

class ExpressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form scalar field f(x, y, t) written in a small arithmetic language.
///
/// Grammar: numbers, the variables `x`, `y`, `t`, the constants `pi` and `e`,
/// binary `+ - * / ^` (`^` is right-associative and binds tighter than unary
/// minus), parentheses, and the functions `min(a,b)`, `max(a,b)`, `abs`,
/// `sin`, `cos`, `exp`, `sqrt`, `log`. The source is compiled once to a
/// postfix program; evaluation is allocation-free apart from a small stack.
class Expression {
 public:
  Expression();  // the constant 0

  static Expression parse(std::string_view source);
  static Expression constant(double value);

  double operator()(double x, double y, double t) const;

  bool depends_on(char variable) const;
  bool depends_on_time() const { return depends_on('t'); }

  const std::string& source() const { return source_; }

  enum class Op : unsigned char {
    kConst, kX, kY, kT, kAdd, kSub, kMul, kDiv, kPow, kNeg,
    kMin, kMax, kAbs, kSin, kCos, kExp, kSqrt, kLog
  };
  struct Instr {
    Op op;
    double value;
  };

 private:
  std::string source_;
  std::vector<Instr> program_;
  std::size_t max_depth_ = 1;
};

}  // namespace dphase
