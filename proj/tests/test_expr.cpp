#include "istab/expr.hpp"
#include "istab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace istab;
using expr::Dims;
using expr::Env;
using expr::NodePtr;
using expr::VarKind;

namespace {

double ev(const std::string& text, Dims dims, const Env& env) {
  return expr::eval(expr::parse(text, dims), env);
}

// independent check of a symbolic partial: central finite differences
double central_fd(const NodePtr& ast, std::vector<double>& x, std::vector<double>& y,
                  VarKind kind, int index) {
  double& slot = kind == VarKind::X ? x[index] : y[index];
  double center = slot;
  double h = 1e-5 * std::max(1.0, std::fabs(center));
  slot = center + h;
  double hi = expr::eval(ast, Env{.x = x, .y = y});
  slot = center - h;
  double lo = expr::eval(ast, Env{.x = x, .y = y});
  slot = center;
  return (hi - lo) / (2.0 * h);
}

} // namespace

TEST_CASE("parse builds the expected tree shapes") {
  auto ast = expr::parse("x1 + 2*u1", Dims{1, 1});
  REQUIRE(ast->tag == expr::Node::Tag::Binary);
  CHECK(ast->bop == expr::BinOp::Add);
  CHECK(ast->lhs->tag == expr::Node::Tag::Var);
  CHECK(ast->rhs->bop == expr::BinOp::Mul);
  CHECK(ast->rhs->lhs->value == 2.0);

  auto sq = expr::parse("(exp(x1)-exp(y1))^2", Dims{1, 0});
  REQUIRE(sq->bop == expr::BinOp::Pow);
  CHECK(sq->lhs->bop == expr::BinOp::Sub);
  CHECK(sq->rhs->value == 2.0);
}

TEST_CASE("precedence and associativity") {
  double u1 = 0.0;
  Env env{.x = {}, .y = {}, .u = std::span<const double>(&u1, 1)};
  CHECK(ev("2+3*4", Dims{0, 1}, env) == 14.0);
  CHECK(ev("2*3^2", Dims{0, 1}, env) == 18.0);
  CHECK(ev("-2^2", Dims{0, 1}, env) == -4.0);  // ^ binds tighter than unary -
  CHECK(ev("2^2^3", Dims{0, 1}, env) == 64.0); // left associative
  CHECK(ev("8/4/2", Dims{0, 1}, env) == 1.0);
  CHECK(ev("1-2-3", Dims{0, 1}, env) == -4.0);
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(expr::parse("x1 +", Dims{1, 0}), expr::ParseError);
  CHECK_THROWS_AS(expr::parse("", Dims{1, 0}), expr::ParseError);
  CHECK_THROWS_AS(expr::parse("x1 + z3", Dims{1, 0}), expr::ParseError);
  CHECK_THROWS_AS(expr::parse("x2", Dims{1, 0}), expr::ParseError); // out of range
  CHECK_THROWS_AS(expr::parse("u1", Dims{1, 0}), expr::ParseError); // m = 0
  try {
    expr::parse("x1 + ?", Dims{1, 0});
    FAIL("expected ParseError");
  } catch (const expr::ParseError& e) {
    CHECK(e.position == 5);
  }
}

TEST_CASE("eval basics and error paths") {
  double u = 0.3;
  CHECK(ev("-1 + u1", Dims{0, 1}, Env{.u = std::span<const double>(&u, 1)}) ==
        doctest::Approx(-0.7));
  double x0 = 0.0;
  CHECK(ev("exp(x1)", Dims{1, 0}, Env{.x = std::span<const double>(&x0, 1)}) == 1.0);

  double x2 = 2.0;
  Env only_x{.x = std::span<const double>(&x2, 1)};
  CHECK_THROWS_AS(ev("x1*y1", Dims{1, 0}, only_x), expr::EvalError);
  CHECK_THROWS_AS(ev("log(x1 - 3)", Dims{1, 0}, only_x), expr::EvalError);
  CHECK_THROWS_AS(ev("sqrt(-x1)", Dims{1, 0}, only_x), expr::EvalError);
  CHECK_THROWS_AS(ev("x1/(x1-2)", Dims{1, 0}, only_x), expr::EvalError);
}

TEST_CASE("eval is deterministic") {
  auto ast = expr::parse("sin(x1)*exp(y1) + x1^3/(1+y1^2)", Dims{1, 0});
  double x0 = 0.37, y0 = -1.21;
  Env env{.x = std::span<const double>(&x0, 1), .y = std::span<const double>(&y0, 1)};
  double first = expr::eval(ast, env);
  for (int i = 0; i < 10; ++i) CHECK(expr::eval(ast, env) == first);
}

TEST_CASE("symbolic differentiation examples") {
  auto d1 = expr::diff(expr::parse("x1^2", Dims{1, 0}), VarKind::X, 0);
  CHECK(expr::structurally_equal(
      *d1, *expr::parse("2*x1", Dims{1, 0})));

  auto d0 = expr::diff(expr::parse("x1^2", Dims{1, 0}), VarKind::Y, 0);
  CHECK(expr::is_constant(*d0, 0.0));

  // cross-check against finite differences at random points
  auto V = expr::parse("(exp(x1)-exp(y1))^2", Dims{1, 0});
  auto dV = expr::diff(V, VarKind::X, 0);
  Rng rng(7);
  std::vector<double> x(1), y(1);
  for (int k = 0; k < 100; ++k) {
    x[0] = rng.uniform(-2.0, 2.0);
    y[0] = rng.uniform(-2.0, 2.0);
    double sym = expr::eval(dV, Env{.x = x, .y = y});
    double fd = central_fd(V, x, y, VarKind::X, 0);
    CHECK(std::fabs(sym - fd) <= 1e-5 * std::max({1.0, std::fabs(sym), std::fabs(fd)}));
  }
}

TEST_CASE("finite-difference cross-check over a mixed function basis") {
  auto V = expr::parse("sin(x1)*cos(y1) + tanh(x1*y1) + sqrt(1 + x1^2) + log(2 + y1)",
                       Dims{1, 0});
  Rng rng(21);
  std::vector<double> x(1), y(1);
  for (auto kind : {VarKind::X, VarKind::Y}) {
    auto dV = expr::diff(V, kind, 0);
    for (int k = 0; k < 100; ++k) {
      x[0] = rng.uniform(-1.5, 1.5);
      y[0] = rng.uniform(-1.5, 1.5);
      double sym = expr::eval(dV, Env{.x = x, .y = y});
      double fd = central_fd(V, x, y, kind, 0);
      CHECK(std::fabs(sym - fd) <=
            1e-5 * std::max({1.0, std::fabs(sym), std::fabs(fd)}));
    }
  }
}

TEST_CASE("differentiation rejects nonsmooth and unsupported forms") {
  CHECK_THROWS_AS(expr::diff(expr::parse("abs(x1)", Dims{1, 0}), VarKind::X, 0),
                  expr::DiffError);
  CHECK_THROWS_AS(expr::diff(expr::parse("x1^y1", Dims{1, 0}), VarKind::X, 0),
                  expr::DiffError);
  CHECK(expr::contains_abs(*expr::parse("x1 + abs(y1)", Dims{1, 0})));
}

TEST_CASE("print/parse round-trip is a fixpoint") {
  const Dims dims{2, 2};
  for (const char* text :
       {"x1 + 2*u1", "(exp(x1)-exp(y1))^2", "-x1^2", "(-x1)^2", "x1 - (y1 - x2)",
        "sin(x1)*cos(u2)/tanh(v1 + 1)", "2^2^3", "x1*(y2 + 3)^2", "-(x1 + y1)",
        "1 - 2 - x1", "sqrt(x1^2 + 1e-3)"}) {
    auto first = expr::parse(text, dims);
    auto second = expr::parse(expr::print(first), dims);
    CAPTURE(text);
    CAPTURE(expr::print(first));
    CHECK(expr::structurally_equal(*first, *second));
    CHECK(expr::print(first) == expr::print(second));
  }
}

TEST_CASE("printed derivatives stay parseable") {
  auto V = expr::parse("(exp(x1)-exp(y1))^2 + x1*y1^3", Dims{1, 0});
  auto dV = expr::diff(V, VarKind::X, 0);
  auto reparsed = expr::parse(expr::print(dV), Dims{1, 0});
  std::vector<double> x{0.4}, y{-0.9};
  Env env{.x = x, .y = y};
  CHECK(expr::eval(dV, env) == expr::eval(reparsed, env));
}
