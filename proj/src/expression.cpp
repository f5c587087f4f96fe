#include "gsanova/expression.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gsanova::expression {

namespace {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, call };

using UnaryFn = double (*)(double);

}  // namespace

struct Expression::Node {
  Op op;
  double value = 0.0;    // constant
  int index = 0;         // variable
  UnaryFn fn = nullptr;  // call
  std::unique_ptr<Node> lhs, rhs;

  [[nodiscard]] double eval(const Eigen::VectorXd& x) const {
    switch (op) {
      case Op::constant: return value;
      case Op::variable: return x(index);
      case Op::add: return lhs->eval(x) + rhs->eval(x);
      case Op::sub: return lhs->eval(x) - rhs->eval(x);
      case Op::mul: return lhs->eval(x) * rhs->eval(x);
      case Op::div: return lhs->eval(x) / rhs->eval(x);
      case Op::pow: return std::pow(lhs->eval(x), rhs->eval(x));
      case Op::neg: return -lhs->eval(x);
      case Op::call: return fn(lhs->eval(x));
    }
    return 0.0;
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::unique_ptr<Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto node = std::make_unique<Node>();
  node->op = op;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

class Parser {
 public:
  Parser(const std::string& src, int d) : src_(src), d_(d) {}

  NodePtr parse() {
    auto node = expr();
    skip_space();
    if (pos_ != src_.size()) fail("trailing input");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression: " + what + " at position " +
                                std::to_string(pos_) + " in '" + src_ + "'");
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto node = term();
    for (;;) {
      if (consume('+')) {
        node = make(Op::add, std::move(node), term());
      } else if (consume('-')) {
        node = make(Op::sub, std::move(node), term());
      } else {
        return node;
      }
    }
  }

  NodePtr term() {
    auto node = unary();
    for (;;) {
      if (consume('*')) {
        node = make(Op::mul, std::move(node), unary());
      } else if (consume('/')) {
        node = make(Op::div, std::move(node), unary());
      } else {
        return node;
      }
    }
  }

  NodePtr unary() {
    if (consume('-')) return make(Op::neg, unary());
    return power();
  }

  NodePtr power() {
    auto base = atom();
    if (consume('^')) return make(Op::pow, std::move(base), unary());
    return base;
  }

  NodePtr atom() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (consume('(')) {
      auto node = expr();
      if (!consume(')')) fail("expected ')'");
      return node;
    }
    fail("unexpected character");
  }

  NodePtr number() {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(src_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("bad number");
    }
    pos_ += used;
    auto node = make(Op::constant);
    node->value = value;
    return node;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = src_.substr(start, pos_ - start);
    if (name == "pi") {
      auto node = make(Op::constant);
      node->value = M_PI;
      return node;
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int index = 0;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) fail("bad variable");
        index = index * 10 + (name[i] - '0');
      }
      if (index < 1 || index > d_) fail("variable index out of range");
      auto node = make(Op::variable);
      node->index = index - 1;
      return node;
    }
    static const std::pair<const char*, UnaryFn> functions[] = {
        {"sin", [](double v) { return std::sin(v); }},
        {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},
        {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},
        {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::fabs(v); }},
    };
    for (const auto& [fname, fn] : functions) {
      if (name == fname) {
        if (!consume('(')) fail("expected '(' after function name");
        auto arg = expr();
        if (!consume(')')) fail("expected ')'");
        auto node = make(Op::call, std::move(arg));
        node->fn = fn;
        return node;
      }
    }
    fail("unknown identifier '" + name + "'");
  }

  const std::string& src_;
  int d_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& source, int d)
    : source_(source), d_(d) {
  if (d < 1) throw std::invalid_argument("expression: d must be >= 1");
  root_ = Parser(source, d).parse();
}

Expression::~Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::operator()(const Eigen::VectorXd& x) const {
  if (x.size() < d_) throw std::invalid_argument("expression: input too short");
  return root_->eval(x);
}

}  // namespace gsanova::expression
