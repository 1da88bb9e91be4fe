#include "dphase/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace dphase {

namespace {

using Op = Expression::Op;
using Instr = Expression::Instr;

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::vector<Instr> run() {
    parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression '" + std::string(src_) + "': " + what +
                          " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void emit(Op op, double v = 0.0) { out_.push_back({op, v}); }

  // sum := product (('+'|'-') product)*
  void parse_sum() {
    parse_product();
    for (;;) {
      if (accept('+')) {
        parse_product();
        emit(Op::kAdd);
      } else if (accept('-')) {
        parse_product();
        emit(Op::kSub);
      } else {
        return;
      }
    }
  }

  // product := unary (('*'|'/') unary)*
  void parse_product() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::kMul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::kDiv);
      } else {
        return;
      }
    }
  }

  // unary := ('-'|'+') unary | power
  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::kNeg);
      return;
    }
    if (accept('+')) {
      parse_unary();
      return;
    }
    parse_power();
  }

  // power := primary ('^' unary)?   (right-associative)
  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();
      emit(Op::kPow);
    }
  }

  void parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_sum();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double value = 0.0;
      const char* begin = src_.data() + pos_;
      const char* end = src_.data() + src_.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(ptr - begin);
      emit(Op::kConst, value);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      parse_identifier(name);
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void parse_identifier(std::string_view name) {
    if (name == "x") return emit(Op::kX);
    if (name == "y") return emit(Op::kY);
    if (name == "t") return emit(Op::kT);
    if (name == "pi") return emit(Op::kConst, std::numbers::pi);
    if (name == "e") return emit(Op::kConst, std::numbers::e);

    struct Fn {
      std::string_view name;
      Op op;
      int arity;
    };
    static constexpr Fn kFunctions[] = {
        {"min", Op::kMin, 2}, {"max", Op::kMax, 2}, {"abs", Op::kAbs, 1},
        {"sin", Op::kSin, 1}, {"cos", Op::kCos, 1}, {"exp", Op::kExp, 1},
        {"sqrt", Op::kSqrt, 1}, {"log", Op::kLog, 1},
    };
    for (const auto& fn : kFunctions) {
      if (fn.name != name) continue;
      expect('(');
      parse_sum();
      for (int k = 1; k < fn.arity; ++k) {
        expect(',');
        parse_sum();
      }
      expect(')');
      emit(fn.op);
      return;
    }
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Instr> out_;
};

int stack_effect(Op op) {
  switch (op) {
    case Op::kConst:
    case Op::kX:
    case Op::kY:
    case Op::kT:
      return 1;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kPow:
    case Op::kMin:
    case Op::kMax:
      return -1;
    default:
      return 0;
  }
}

}  // namespace

Expression::Expression() : source_("0"), program_{{Op::kConst, 0.0}} {}

Expression Expression::constant(double value) {
  Expression e;
  e.source_ = std::to_string(value);
  e.program_ = {{Op::kConst, value}};
  return e;
}

Expression Expression::parse(std::string_view source) {
  Expression e;
  e.source_ = std::string(source);
  e.program_ = Parser(source).run();
  long depth = 0;
  long max_depth = 0;
  for (const auto& ins : e.program_) {
    depth += stack_effect(ins.op);
    max_depth = std::max(max_depth, depth);
  }
  e.max_depth_ = static_cast<std::size_t>(std::max(1L, max_depth));
  return e;
}

bool Expression::depends_on(char variable) const {
  const Op wanted = variable == 'x' ? Op::kX : variable == 'y' ? Op::kY : Op::kT;
  return std::any_of(program_.begin(), program_.end(),
                     [wanted](const Instr& i) { return i.op == wanted; });
}

double Expression::operator()(double x, double y, double t) const {
  // Most configs stay well under 16 stack slots.
  double small[16] = {};
  std::vector<double> large;
  double* stack = small;
  if (max_depth_ > 16) {
    large.resize(max_depth_);
    stack = large.data();
  }
  std::size_t top = 0;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::kConst: stack[top++] = ins.value; break;
      case Op::kX: stack[top++] = x; break;
      case Op::kY: stack[top++] = y; break;
      case Op::kT: stack[top++] = t; break;
      case Op::kAdd: --top; stack[top - 1] += stack[top]; break;
      case Op::kSub: --top; stack[top - 1] -= stack[top]; break;
      case Op::kMul: --top; stack[top - 1] *= stack[top]; break;
      case Op::kDiv: --top; stack[top - 1] /= stack[top]; break;
      case Op::kPow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
      case Op::kMin: --top; stack[top - 1] = std::min(stack[top - 1], stack[top]); break;
      case Op::kMax: --top; stack[top - 1] = std::max(stack[top - 1], stack[top]); break;
      case Op::kNeg: stack[top - 1] = -stack[top - 1]; break;
      case Op::kAbs: stack[top - 1] = std::abs(stack[top - 1]); break;
      case Op::kSin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::kCos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::kExp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Op::kSqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
      case Op::kLog: stack[top - 1] = std::log(stack[top - 1]); break;
    }
  }
  return stack[0];
}

}  // namespace dphase
