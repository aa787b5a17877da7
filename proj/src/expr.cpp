#include "istab/expr.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

namespace istab::expr {

NodePtr constant(double v) {
  auto n = std::make_shared<Node>();
  n->tag = Node::Tag::Const;
  n->value = v;
  return n;
}

NodePtr variable(VarKind kind, int index) {
  auto n = std::make_shared<Node>();
  n->tag = Node::Tag::Var;
  n->var_kind = kind;
  n->var_index = index;
  return n;
}

NodePtr unary(UnaryOp op, NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->tag = Node::Tag::Unary;
  n->uop = op;
  n->lhs = std::move(operand);
  return n;
}

NodePtr binary(BinOp op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->tag = Node::Tag::Binary;
  n->bop = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

bool is_constant(const Node& ast, double value) {
  return ast.tag == Node::Tag::Const && ast.value == value;
}

namespace {

// ---------------------------------------------------------------- parsing

struct Token {
  enum class Kind { Number, Ident, Op, LParen, RParen, End };
  Kind kind;
  double number = 0.0;
  std::string text;
  std::size_t pos = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    tok_.pos = pos_;
    if (pos_ >= text_.size()) {
      tok_.kind = Token::Kind::End;
      return;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
        ++pos_;
      // scientific suffix
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t mark = pos_ + 1;
        if (mark < text_.size() && (text_[mark] == '+' || text_[mark] == '-')) ++mark;
        if (mark < text_.size() && std::isdigit(static_cast<unsigned char>(text_[mark]))) {
          pos_ = mark;
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        }
      }
      std::string num(text_.substr(start, pos_ - start));
      try {
        tok_.number = std::stod(num);
      } catch (const std::exception&) {
        throw ParseError("malformed number '" + num + "'", start);
      }
      tok_.kind = Token::Kind::Number;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::Ident;
      tok_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    if (c == '(') {
      tok_.kind = Token::Kind::LParen;
      ++pos_;
      return;
    }
    if (c == ')') {
      tok_.kind = Token::Kind::RParen;
      ++pos_;
      return;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      tok_.kind = Token::Kind::Op;
      tok_.text = std::string(1, c);
      ++pos_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token tok_;
};

const std::map<std::string, UnaryOp, std::less<>> kFunctions = {
    {"exp", UnaryOp::Exp},  {"log", UnaryOp::Log},   {"sin", UnaryOp::Sin},
    {"cos", UnaryOp::Cos},  {"tanh", UnaryOp::Tanh}, {"sqrt", UnaryOp::Sqrt},
    {"abs", UnaryOp::Abs}};

class Parser {
public:
  Parser(std::string_view text, Dims dims) : lex_(text), dims_(dims) {}

  NodePtr run() {
    NodePtr e = sum();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::End)
      throw ParseError("unexpected trailing input", t.pos);
    return e;
  }

private:
  NodePtr sum() {
    NodePtr e = term();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      Token op = lex_.take();
      e = binary(op.text == "+" ? BinOp::Add : BinOp::Sub, e, term());
    }
    return e;
  }

  NodePtr term() {
    NodePtr e = factor();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      Token op = lex_.take();
      e = binary(op.text == "*" ? BinOp::Mul : BinOp::Div, e, factor());
    }
    return e;
  }

  // unary minus binds looser than ^: -x^2 is -(x^2)
  NodePtr factor() {
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
      lex_.take();
      return negate(factor());
    }
    return power();
  }

  // fold negated literals so print/parse round-trips are stable
  static NodePtr negate(NodePtr e) {
    if (e->tag == Node::Tag::Const) return constant(-e->value);
    return unary(UnaryOp::Neg, std::move(e));
  }

  NodePtr power() {
    NodePtr e = atom();
    while (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "^") {
      lex_.take();
      e = binary(BinOp::Pow, e, exponent());
    }
    return e;
  }

  NodePtr exponent() {
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
      lex_.take();
      return negate(exponent());
    }
    return atom();
  }

  NodePtr atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Number:
        return constant(t.number);
      case Token::Kind::LParen: {
        NodePtr e = sum();
        Token close = lex_.take();
        if (close.kind != Token::Kind::RParen)
          throw ParseError("expected ')'", close.pos);
        return e;
      }
      case Token::Kind::Ident: {
        auto fn = kFunctions.find(t.text);
        if (fn != kFunctions.end()) {
          Token open = lex_.take();
          if (open.kind != Token::Kind::LParen)
            throw ParseError("expected '(' after function '" + t.text + "'", open.pos);
          NodePtr arg = sum();
          Token close = lex_.take();
          if (close.kind != Token::Kind::RParen)
            throw ParseError("expected ')'", close.pos);
          return unary(fn->second, arg);
        }
        return parse_variable(t);
      }
      case Token::Kind::End:
        throw ParseError("unexpected end of input", t.pos);
      default:
        throw ParseError("unexpected token", t.pos);
    }
  }

  NodePtr parse_variable(const Token& t) {
    if (t.text.size() < 2)
      throw ParseError("unknown variable '" + t.text + "'", t.pos);
    char head = t.text[0];
    VarKind kind;
    int limit;
    switch (head) {
      case 'x': kind = VarKind::X; limit = dims_.n; break;
      case 'y': kind = VarKind::Y; limit = dims_.n; break;
      case 'u': kind = VarKind::U; limit = dims_.m; break;
      case 'v': kind = VarKind::V; limit = dims_.m; break;
      default:
        throw ParseError("unknown variable '" + t.text + "'", t.pos);
    }
    for (std::size_t i = 1; i < t.text.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
        throw ParseError("unknown variable '" + t.text + "'", t.pos);
    int index = std::stoi(t.text.substr(1));
    if (index < 1 || index > limit)
      throw ParseError("variable '" + t.text + "' out of declared range (1.." +
                           std::to_string(limit) + ")",
                       t.pos);
    return variable(kind, index - 1);
  }

  Lexer lex_;
  Dims dims_;
};

const char* var_prefix(VarKind k) {
  switch (k) {
    case VarKind::X: return "x";
    case VarKind::Y: return "y";
    case VarKind::U: return "u";
    case VarKind::V: return "v";
  }
  return "?";
}

std::string var_name(VarKind k, int index) {
  return std::string(var_prefix(k)) + std::to_string(index + 1);
}

double lookup(const Env& env, VarKind kind, int index) {
  std::span<const double> s;
  switch (kind) {
    case VarKind::X: s = env.x; break;
    case VarKind::Y: s = env.y; break;
    case VarKind::U: s = env.u; break;
    case VarKind::V: s = env.v; break;
  }
  if (index < 0 || static_cast<std::size_t>(index) >= s.size())
    throw EvalError("unbound variable " + var_name(kind, index));
  return s[index];
}

double checked(double v, const char* what) {
  if (!std::isfinite(v))
    throw EvalError(std::string("non-finite value in ") + what);
  return v;
}

} // namespace

NodePtr parse(std::string_view text, Dims dims) {
  if (text.empty()) throw ParseError("empty expression", 0);
  return Parser(text, dims).run();
}

double eval(const Node& ast, const Env& env) {
  switch (ast.tag) {
    case Node::Tag::Const:
      return ast.value;
    case Node::Tag::Var:
      return lookup(env, ast.var_kind, ast.var_index);
    case Node::Tag::Unary: {
      double a = eval(*ast.lhs, env);
      switch (ast.uop) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Exp: return checked(std::exp(a), "exp");
        case UnaryOp::Log:
          if (a <= 0.0) throw EvalError("log of nonpositive argument");
          return checked(std::log(a), "log");
        case UnaryOp::Sin: return std::sin(a);
        case UnaryOp::Cos: return std::cos(a);
        case UnaryOp::Tanh: return std::tanh(a);
        case UnaryOp::Sqrt:
          if (a < 0.0) throw EvalError("sqrt of negative argument");
          return std::sqrt(a);
        case UnaryOp::Abs: return std::fabs(a);
      }
      break;
    }
    case Node::Tag::Binary: {
      double a = eval(*ast.lhs, env);
      double b = eval(*ast.rhs, env);
      switch (ast.bop) {
        case BinOp::Add: return checked(a + b, "+");
        case BinOp::Sub: return checked(a - b, "-");
        case BinOp::Mul: return checked(a * b, "*");
        case BinOp::Div:
          if (b == 0.0) throw EvalError("division by zero");
          return checked(a / b, "/");
        case BinOp::Pow:
          return checked(std::pow(a, b), "^");
      }
      break;
    }
  }
  throw EvalError("corrupt expression node");
}

namespace {

// construction helpers with light simplification

NodePtr s_add(NodePtr a, NodePtr b) {
  if (is_constant(*a, 0.0)) return b;
  if (is_constant(*b, 0.0)) return a;
  if (a->tag == Node::Tag::Const && b->tag == Node::Tag::Const)
    return constant(a->value + b->value);
  return binary(BinOp::Add, std::move(a), std::move(b));
}

NodePtr s_sub(NodePtr a, NodePtr b) {
  if (is_constant(*b, 0.0)) return a;
  if (a->tag == Node::Tag::Const && b->tag == Node::Tag::Const)
    return constant(a->value - b->value);
  if (is_constant(*a, 0.0)) return unary(UnaryOp::Neg, std::move(b));
  return binary(BinOp::Sub, std::move(a), std::move(b));
}

NodePtr s_mul(NodePtr a, NodePtr b) {
  if (is_constant(*a, 0.0) || is_constant(*b, 0.0)) return constant(0.0);
  if (is_constant(*a, 1.0)) return b;
  if (is_constant(*b, 1.0)) return a;
  if (a->tag == Node::Tag::Const && b->tag == Node::Tag::Const)
    return constant(a->value * b->value);
  return binary(BinOp::Mul, std::move(a), std::move(b));
}

NodePtr s_div(NodePtr a, NodePtr b) {
  if (is_constant(*a, 0.0)) return constant(0.0);
  if (is_constant(*b, 1.0)) return a;
  return binary(BinOp::Div, std::move(a), std::move(b));
}

NodePtr s_pow(NodePtr base, double e) {
  if (e == 1.0) return base;
  if (e == 0.0) return constant(1.0);
  return binary(BinOp::Pow, std::move(base), constant(e));
}

NodePtr diff_node(const NodePtr& ast, VarKind kind, int index);

NodePtr diff_unary(const NodePtr& ast, VarKind kind, int index) {
  const NodePtr& a = ast->lhs;
  NodePtr da = diff_node(a, kind, index);
  switch (ast->uop) {
    case UnaryOp::Neg:
      if (is_constant(*da, 0.0)) return constant(0.0);
      return unary(UnaryOp::Neg, da);
    case UnaryOp::Exp: return s_mul(unary(UnaryOp::Exp, a), da);
    case UnaryOp::Log: return s_div(da, a);
    case UnaryOp::Sin: return s_mul(unary(UnaryOp::Cos, a), da);
    case UnaryOp::Cos:
      if (is_constant(*da, 0.0)) return constant(0.0);
      return unary(UnaryOp::Neg, s_mul(unary(UnaryOp::Sin, a), da));
    case UnaryOp::Tanh:
      return s_mul(s_sub(constant(1.0), s_pow(unary(UnaryOp::Tanh, a), 2.0)), da);
    case UnaryOp::Sqrt:
      return s_div(da, s_mul(constant(2.0), unary(UnaryOp::Sqrt, a)));
    case UnaryOp::Abs:
      throw DiffError("differentiation through abs is nonsmooth; abs is not allowed here");
  }
  throw DiffError("corrupt unary node");
}

NodePtr diff_node(const NodePtr& ast, VarKind kind, int index) {
  switch (ast->tag) {
    case Node::Tag::Const:
      return constant(0.0);
    case Node::Tag::Var:
      return constant(ast->var_kind == kind && ast->var_index == index ? 1.0 : 0.0);
    case Node::Tag::Unary:
      return diff_unary(ast, kind, index);
    case Node::Tag::Binary: {
      const NodePtr& a = ast->lhs;
      const NodePtr& b = ast->rhs;
      switch (ast->bop) {
        case BinOp::Add:
          return s_add(diff_node(a, kind, index), diff_node(b, kind, index));
        case BinOp::Sub:
          return s_sub(diff_node(a, kind, index), diff_node(b, kind, index));
        case BinOp::Mul:
          return s_add(s_mul(diff_node(a, kind, index), b),
                       s_mul(a, diff_node(b, kind, index)));
        case BinOp::Div:
          return s_div(s_sub(s_mul(diff_node(a, kind, index), b),
                             s_mul(a, diff_node(b, kind, index))),
                       s_pow(b, 2.0));
        case BinOp::Pow: {
          if (b->tag != Node::Tag::Const)
            throw DiffError("cannot differentiate power with non-constant exponent");
          double e = b->value;
          if (e == 0.0) return constant(0.0);
          return s_mul(s_mul(constant(e), s_pow(a, e - 1.0)),
                       diff_node(a, kind, index));
        }
      }
      break;
    }
  }
  throw DiffError("corrupt expression node");
}

int precedence(const Node& n) {
  if (n.tag == Node::Tag::Binary) {
    switch (n.bop) {
      case BinOp::Add:
      case BinOp::Sub: return 1;
      case BinOp::Mul:
      case BinOp::Div: return 2;
      case BinOp::Pow: return 4;
    }
  }
  if (n.tag == Node::Tag::Unary && n.uop == UnaryOp::Neg) return 3;
  return 5;
}

const char* fn_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Tanh: return "tanh";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Abs: return "abs";
  }
  return "?";
}

void print_node(const Node& n, std::ostream& os, int parent_prec, bool rhs_of_binary) {
  int prec = precedence(n);
  bool parens = prec < parent_prec || (prec == parent_prec && rhs_of_binary);
  switch (n.tag) {
    case Node::Tag::Const: {
      if (n.value < 0) {
        os << "(";
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << n.value;
        os << tmp.str() << ")";
      } else {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << n.value;
        os << tmp.str();
      }
      return;
    }
    case Node::Tag::Var:
      os << var_name(n.var_kind, n.var_index);
      return;
    case Node::Tag::Unary:
      if (n.uop == UnaryOp::Neg) {
        if (parens) os << "(";
        os << "-";
        print_node(*n.lhs, os, prec + 1, false);
        if (parens) os << ")";
      } else {
        os << fn_name(n.uop) << "(";
        print_node(*n.lhs, os, 0, false);
        os << ")";
      }
      return;
    case Node::Tag::Binary: {
      const char* op = "?";
      switch (n.bop) {
        case BinOp::Add: op = " + "; break;
        case BinOp::Sub: op = " - "; break;
        case BinOp::Mul: op = "*"; break;
        case BinOp::Div: op = "/"; break;
        case BinOp::Pow: op = "^"; break;
      }
      if (parens) os << "(";
      print_node(*n.lhs, os, prec, false);
      os << op;
      print_node(*n.rhs, os, prec, true);
      if (parens) os << ")";
      return;
    }
  }
}

} // namespace

NodePtr diff(const NodePtr& ast, VarKind kind, int index) {
  return diff_node(ast, kind, index);
}

std::string print(const Node& ast) {
  std::ostringstream os;
  print_node(ast, os, 0, false);
  return os.str();
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.tag != b.tag) return false;
  switch (a.tag) {
    case Node::Tag::Const: return a.value == b.value;
    case Node::Tag::Var: return a.var_kind == b.var_kind && a.var_index == b.var_index;
    case Node::Tag::Unary:
      return a.uop == b.uop && structurally_equal(*a.lhs, *b.lhs);
    case Node::Tag::Binary:
      return a.bop == b.bop && structurally_equal(*a.lhs, *b.lhs) &&
             structurally_equal(*a.rhs, *b.rhs);
  }
  return false;
}

bool contains_abs(const Node& ast) {
  switch (ast.tag) {
    case Node::Tag::Const:
    case Node::Tag::Var: return false;
    case Node::Tag::Unary:
      return ast.uop == UnaryOp::Abs || contains_abs(*ast.lhs);
    case Node::Tag::Binary:
      return contains_abs(*ast.lhs) || contains_abs(*ast.rhs);
  }
  return false;
}

} // namespace istab::expr
