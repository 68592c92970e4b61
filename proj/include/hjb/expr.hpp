#pragma once

#include <string>
#include <vector>

namespace hjb {

// Tiny arithmetic expression language used by JSON problem files.
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | primary
//   primary := number | 't' | 'x1' | 'x2' | 'alpha'
//            | ('sin'|'cos'|'exp') '(' expr ')'
//            | ('pow'|'min'|'max') '(' expr ',' expr ')'
//            | '(' expr ')'
//
// Parsed once into a postfix program, evaluated many times.

struct ExprEnv {
  double t = 0;
  double x1 = 0;
  double x2 = 0;
  double alpha = 0;
};

class Expr {
 public:
  Expr() = default;

  // Throws ConfigError with position info on malformed input.
  static Expr parse(const std::string& source);

  double eval(const ExprEnv& env) const;

  bool empty() const { return ops_.empty(); }
  const std::string& source() const { return source_; }

 private:
  enum class Op : unsigned char {
    Number, VarT, VarX1, VarX2, VarAlpha,
    Add, Sub, Mul, Div, Neg,
    Sin, Cos, Exp, Pow, Min, Max,
  };
  struct Instr {
    Op op;
    double number = 0;
  };
  std::vector<Instr> ops_;
  std::string source_;
  friend class ExprParser;
};

}  // namespace hjb
