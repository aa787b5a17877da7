#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace istab::expr {

// Variable classes of the expression language. State variables x<i> and
// their primed copies y<i>, input variables u<i> and primed copies v<i>.
enum class VarKind { X, Y, U, V };

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Tanh, Sqrt, Abs };
enum class BinOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable expression tree. Nodes are shared and never mutated after
// construction; eval and diff are pure.
struct Node {
  enum class Tag { Const, Var, Unary, Binary };

  Tag tag;
  double value = 0.0;          // Const
  VarKind var_kind = VarKind::X;
  int var_index = 0;           // zero-based; Var
  UnaryOp uop = UnaryOp::Neg;  // Unary
  BinOp bop = BinOp::Add;      // Binary
  NodePtr lhs;                 // Unary operand / Binary left
  NodePtr rhs;                 // Binary right
};

struct Dims {
  int n = 0; // state dimension (x<i>, y<i>)
  int m = 0; // input dimension (u<i>, v<i>)
};

// Variable bindings for evaluation. Spans may be empty when a variable
// class does not occur; referencing a variable outside the bound span is
// an unbound-variable error.
struct Env {
  std::span<const double> x{};
  std::span<const double> y{};
  std::span<const double> u{};
  std::span<const double> v{};
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
        position(pos) {}
  std::size_t position;
};

class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DiffError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

NodePtr constant(double v);
NodePtr variable(VarKind kind, int index);
NodePtr unary(UnaryOp op, NodePtr operand);
NodePtr binary(BinOp op, NodePtr lhs, NodePtr rhs);

// Parses an expression over x1..xn, y1..yn, u1..um, v1..vm. Precedence
// ^ > unary minus > * / > + -, left-associative within a tier.
NodePtr parse(std::string_view text, Dims dims);

// Evaluates the tree. Non-finite intermediates and domain violations
// (log of nonpositive, sqrt of negative) raise EvalError rather than
// propagating NaN/Inf.
double eval(const Node& ast, const Env& env);
inline double eval(const NodePtr& ast, const Env& env) { return eval(*ast, env); }

// Exact symbolic partial derivative with light simplification. Rejects
// abs (nonsmooth) and non-constant exponents.
NodePtr diff(const NodePtr& ast, VarKind kind, int index);

std::string print(const Node& ast);
inline std::string print(const NodePtr& ast) { return print(*ast); }

bool structurally_equal(const Node& a, const Node& b);

bool contains_abs(const Node& ast);
bool is_constant(const Node& ast, double value);

} // namespace istab::expr
