#include "hforge/expression.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "hforge/smooth.hpp"

namespace hforge {

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Abs, Step, Bump, Plateau };

struct Expression::Node {
  enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call } kind = Kind::Number;
  double number = 0.0;
  int variable = 0;
  Func func = Func::Sin;
  std::array<double, 4> params{};
  std::vector<std::unique_ptr<Node>> kids;

  [[nodiscard]] bool uses(int mask) const {
    if (kind == Kind::Variable) return ((1 << variable) & mask) != 0;
    for (const auto& k : kids) {
      if (k->uses(mask)) return true;
    }
    return false;
  }

  [[nodiscard]] Dual eval(const DualPoint& p) const {
    switch (kind) {
      case Kind::Number:
        return Dual(number);
      case Kind::Variable:
        return p[static_cast<std::size_t>(variable)];
      case Kind::Negate:
        return -kids[0]->eval(p);
      case Kind::Add:
        return kids[0]->eval(p) + kids[1]->eval(p);
      case Kind::Sub:
        return kids[0]->eval(p) - kids[1]->eval(p);
      case Kind::Mul: {
        const Dual left = kids[0]->eval(p);
        if (left.is_zero()) return Dual(0.0);
        return left * kids[1]->eval(p);
      }
      case Kind::Div:
        return kids[0]->eval(p) / kids[1]->eval(p);
      case Kind::Pow:
        return pow(kids[0]->eval(p), kids[1]->eval(p));
      case Kind::Call:
        return call(p);
    }
    return Dual(0.0);
  }

 private:
  [[nodiscard]] Dual call(const DualPoint& p) const {
    const Dual u = kids[0]->eval(p);
    switch (func) {
      case Func::Sin: return sin(u);
      case Func::Cos: return cos(u);
      case Func::Tan: return tan(u);
      case Func::Exp: return exp(u);
      case Func::Log: return log(u);
      case Func::Sqrt: return sqrt(u);
      case Func::Tanh: return tanh(u);
      case Func::Abs: return abs(u);
      case Func::Step: return smooth_step(u, params[0], params[1]);
      case Func::Bump: return smooth_bump(u, params[0], params[1]);
      case Func::Plateau: return smooth_plateau(u, params[0], params[1], params[2], params[3]);
    }
    return Dual(0.0);
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::unique_ptr<Node>;

NodePtr make_number(double v) {
  auto n = std::make_unique<Node>();
  n->kind = Node::Kind::Number;
  n->number = v;
  return n;
}

NodePtr make_binary(Node::Kind kind, NodePtr a, NodePtr b) {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  n->kids.push_back(std::move(a));
  n->kids.push_back(std::move(b));
  return n;
}

struct FuncSpec {
  std::string_view name;
  Func func;
  int arity;
};

constexpr std::array<FuncSpec, 11> kFunctions{{
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"tan", Func::Tan, 1},
    {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},
    {"sqrt", Func::Sqrt, 1},
    {"tanh", Func::Tanh, 1},
    {"abs", Func::Abs, 1},
    {"step", Func::Step, 3},
    {"bump", Func::Bump, 3},
    {"plateau", Func::Plateau, 5},
}};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto root = expr();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return root;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  NodePtr expr() {
    auto left = term();
    while (true) {
      if (accept('+')) {
        left = make_binary(Node::Kind::Add, std::move(left), term());
      } else if (accept('-')) {
        left = make_binary(Node::Kind::Sub, std::move(left), term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    auto left = unary();
    while (true) {
      if (accept('*')) {
        left = make_binary(Node::Kind::Mul, std::move(left), unary());
      } else if (accept('/')) {
        left = make_binary(Node::Kind::Div, std::move(left), unary());
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_unique<Node>();
      n->kind = Node::Kind::Negate;
      n->kids.push_back(unary());
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make_binary(Node::Kind::Pow, std::move(base), unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    const std::string tail(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (end == tail.c_str()) throw ParseError("malformed number", start);
    pos_ += static_cast<std::size_t>(end - tail.c_str());
    if (!std::isfinite(v)) throw ParseError("number out of range", start);
    return make_number(v);
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view id = text_.substr(start, pos_ - start);
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') return call(id, start);

    static constexpr std::array<std::string_view, 4> kVars{"x", "y", "r", "theta"};
    for (std::size_t i = 0; i < kVars.size(); ++i) {
      if (id == kVars[i]) {
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::Variable;
        n->variable = static_cast<int>(i);
        return n;
      }
    }
    if (id == "pi") return make_number(std::numbers::pi);
    if (id == "e") return make_number(std::numbers::e);
    throw ParseError("unknown name '" + std::string(id) + "'", start);
  }

  NodePtr call(std::string_view id, std::size_t start) {
    const FuncSpec* spec = nullptr;
    for (const auto& f : kFunctions) {
      if (f.name == id) spec = &f;
    }
    if (spec == nullptr) throw ParseError("unknown function '" + std::string(id) + "'", start);
    expect('(');
    std::vector<NodePtr> args;
    args.push_back(expr());
    while (accept(',')) args.push_back(expr());
    expect(')');
    if (static_cast<int>(args.size()) != spec->arity) {
      throw ParseError("function '" + std::string(id) + "' takes " + std::to_string(spec->arity) +
                           " argument(s)",
                       start);
    }
    auto n = std::make_unique<Node>();
    n->kind = Node::Kind::Call;
    n->func = spec->func;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i]->uses(0b1111)) {
        throw ParseError("shape parameters of '" + std::string(id) + "' must be constants", start);
      }
      n->params[i - 1] = args[i]->eval(DualPoint{}).v;
    }
    const auto& prm = n->params;
    const bool ordered = spec->arity == 3 ? prm[0] < prm[1]
                                          : (prm[0] < prm[1] && prm[1] <= prm[2] && prm[2] < prm[3]);
    if (spec->arity > 1 && !ordered) {
      throw ParseError("shape parameters of '" + std::string(id) + "' must be increasing", start);
    }
    n->kids.push_back(std::move(args[0]));
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.source_ = std::string(text);
  return e;
}

Dual Expression::eval(const DualPoint& p) const { return root_->eval(p); }

double Expression::eval(double x, double y, double r, double theta) const {
  return root_->eval(DualPoint{Dual(x), Dual(y), Dual(r), Dual(theta)}).v;
}

bool Expression::is_constant() const { return !root_->uses(0b1111); }

bool Expression::is_fiber_constant() const { return !root_->uses(0b1100); }

bool Expression::uses_only(unsigned allowed) const { return !root_->uses(static_cast<int>(~allowed & 0b1111u)); }

Field Expression::to_field() const {
  auto root = root_;
  return Field([root](const DualPoint& p) { return root->eval(p); });
}

}  // namespace hforge
