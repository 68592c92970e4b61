#include "hjb/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "hjb/errors.hpp"

namespace hjb {

class ExprParser {
 public:
  ExprParser(const std::string& src, Expr& out) : src_(src), out_(out) {}

  void run() {
    if (src_.size() > 65536) fail("expression too long");
    parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing input");
    if (out_.ops_.empty()) fail("empty expression");
    // The evaluator uses a fixed stack; verify it suffices.
    int height = 0, peak = 0;
    for (const auto& in : out_.ops_) {
      switch (in.op) {
        case Expr::Op::Number: case Expr::Op::VarT: case Expr::Op::VarX1:
        case Expr::Op::VarX2: case Expr::Op::VarAlpha:
          peak = std::max(peak, ++height);
          break;
        case Expr::Op::Neg: case Expr::Op::Sin: case Expr::Op::Cos:
        case Expr::Op::Exp:
          break;
        default:
          --height;
          break;
      }
    }
    if (peak > 63) fail("expression too deeply nested");
  }

 private:
  const std::string& src_;
  Expr& out_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  struct DepthGuard {
    int& d;
    explicit DepthGuard(ExprParser& p) : d(p.depth_) {
      if (++d > 256) p.fail("expression too deeply nested");
    }
    ~DepthGuard() { --d; }
  };

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression '" + src_ + "' at position " +
                      std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Expr::Op op, double num = 0) { out_.ops_.push_back({op, num}); }

  void parse_expr() {
    DepthGuard guard(*this);
    parse_term();
    for (;;) {
      if (consume('+')) {
        parse_term();
        emit(Expr::Op::Add);
      } else if (consume('-')) {
        parse_term();
        emit(Expr::Op::Sub);
      } else {
        return;
      }
    }
  }

  void parse_term() {
    parse_unary();
    for (;;) {
      if (consume('*')) {
        parse_unary();
        emit(Expr::Op::Mul);
      } else if (consume('/')) {
        parse_unary();
        emit(Expr::Op::Div);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (consume('-')) {
      parse_unary();
      emit(Expr::Op::Neg);
      return;
    }
    parse_primary();
  }

  void parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];

    if (c == '(') {
      ++pos_;
      parse_expr();
      if (!consume(')')) fail("expected ')'");
      return;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      emit(Expr::Op::Number, v);
      return;
    }

    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string name = src_.substr(start, pos_ - start);

      if (name == "t") return emit(Expr::Op::VarT);
      if (name == "x1") return emit(Expr::Op::VarX1);
      if (name == "x2") return emit(Expr::Op::VarX2);
      if (name == "alpha") return emit(Expr::Op::VarAlpha);

      if (name == "sin" || name == "cos" || name == "exp") {
        if (!consume('(')) fail("expected '(' after " + name);
        parse_expr();
        if (!consume(')')) fail("expected ')'");
        emit(name == "sin" ? Expr::Op::Sin
                           : name == "cos" ? Expr::Op::Cos : Expr::Op::Exp);
        return;
      }
      if (name == "pow" || name == "min" || name == "max") {
        if (!consume('(')) fail("expected '(' after " + name);
        parse_expr();
        if (!consume(',')) fail("expected ',' in " + name);
        parse_expr();
        if (!consume(')')) fail("expected ')'");
        emit(name == "pow" ? Expr::Op::Pow
                           : name == "min" ? Expr::Op::Min : Expr::Op::Max);
        return;
      }
      fail("unknown identifier '" + name + "'");
    }

    fail(std::string("unexpected character '") + c + "'");
  }
};

Expr Expr::parse(const std::string& source) {
  Expr e;
  e.source_ = source;
  ExprParser(source, e).run();
  return e;
}

double Expr::eval(const ExprEnv& env) const {
  double stack[64];
  int top = -1;
  for (const Instr& in : ops_) {
    switch (in.op) {
      case Op::Number:   stack[++top] = in.number; break;
      case Op::VarT:     stack[++top] = env.t; break;
      case Op::VarX1:    stack[++top] = env.x1; break;
      case Op::VarX2:    stack[++top] = env.x2; break;
      case Op::VarAlpha: stack[++top] = env.alpha; break;
      case Op::Add: stack[top - 1] += stack[top]; --top; break;
      case Op::Sub: stack[top - 1] -= stack[top]; --top; break;
      case Op::Mul: stack[top - 1] *= stack[top]; --top; break;
      case Op::Div: stack[top - 1] /= stack[top]; --top; break;
      case Op::Neg: stack[top] = -stack[top]; break;
      case Op::Sin: stack[top] = std::sin(stack[top]); break;
      case Op::Cos: stack[top] = std::cos(stack[top]); break;
      case Op::Exp: stack[top] = std::exp(stack[top]); break;
      case Op::Pow: stack[top - 1] = std::pow(stack[top - 1], stack[top]); --top; break;
      case Op::Min: stack[top - 1] = std::min(stack[top - 1], stack[top]); --top; break;
      case Op::Max: stack[top - 1] = std::max(stack[top - 1], stack[top]); --top; break;
    }
  }
  return stack[0];
}

}  // namespace hjb
