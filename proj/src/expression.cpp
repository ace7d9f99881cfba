#include "evolab/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace evolab {

namespace detail {

struct ExprNode {
  Expression::Op op;
  int index = 0;
  double value = 0.0;
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

}  // namespace detail

namespace {

using detail::ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;
using Op = Expression::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

struct FuncName {
  std::string_view name;
  Op op;
};
constexpr std::array<FuncName, 6> kFuncs{{{"exp", Op::Exp},
                                          {"log", Op::Log},
                                          {"sin", Op::Sin},
                                          {"cos", Op::Cos},
                                          {"abs", Op::Abs},
                                          {"sqrt", Op::Sqrt}}};

class Parser {
 public:
  Parser(std::string_view src, int dim, std::size_t base) : src_(src), dim_(dim), base_(base) {}

  NodePtr parse() {
    skip();
    if (pos_ >= src_.size()) fail("empty expression");
    NodePtr n = expr();
    skip();
    if (pos_ < src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return n;
  }

  bool uses_x = false;
  bool uses_t = false;

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, base_ + pos_); }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = make(Op::Add, n, term());
      } else if (accept('-')) {
        n = make(Op::Sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = make(Op::Mul, n, unary());
      } else if (accept('/')) {
        n = make(Op::Div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);
    if (id == "t") {
      uses_t = true;
      return make(Op::Time);
    }
    if (id.size() > 1 && id[0] == 'x' &&
        id.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      int k = 0;
      std::from_chars(id.data() + 1, id.data() + id.size(), k);
      if (k < 1 || k > dim_ || id[1] == '0') {
        throw UnknownIdentifier(std::string(id), base_ + start);
      }
      uses_x = true;
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Coord;
      n->index = k - 1;
      return n;
    }
    if (id == "norm") {
      expect('(');
      skip();
      if (pos_ >= src_.size() || src_[pos_] != 'x' ||
          (pos_ + 1 < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])))) {
        fail("norm takes the vector x");
      }
      ++pos_;
      expect(')');
      uses_x = true;
      return make(Op::Norm);
    }
    for (const auto& f : kFuncs) {
      if (id == f.name) {
        expect('(');
        NodePtr arg = expr();
        expect(')');
        return make(f.op, arg);
      }
    }
    throw UnknownIdentifier(std::string(id), base_ + start);
  }

  std::string_view src_;
  int dim_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

int compile(const NodePtr& n, std::vector<Expression::Instr>& code) {
  int depth = 1;
  if (n->lhs) depth = std::max(depth, compile(n->lhs, code));
  if (n->rhs) depth = std::max(depth, 1 + compile(n->rhs, code));
  code.push_back({n->op, n->index, n->value});
  return depth;
}

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string_view func_name(Op op) {
  for (const auto& f : kFuncs) {
    if (f.op == op) return f.name;
  }
  return {};
}

std::string print(const NodePtr& n) {
  auto wrap = [](const NodePtr& c, bool paren) {
    std::string s = print(c);
    return paren ? "(" + s + ")" : s;
  };
  const int p = precedence(n->op);
  switch (n->op) {
    case Op::Const: {
      std::array<char, 32> buf{};
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), n->value);
      return std::string(buf.data(), res.ptr);
    }
    case Op::Time:
      return "t";
    case Op::Coord:
      return "x" + std::to_string(n->index + 1);
    case Op::Norm:
      return "norm(x)";
    case Op::Neg:
      return "-" + wrap(n->lhs, precedence(n->lhs->op) < 3);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const char sym = n->op == Op::Add ? '+' : n->op == Op::Sub ? '-' : n->op == Op::Mul ? '*' : '/';
      return wrap(n->lhs, precedence(n->lhs->op) < p) + sym +
             wrap(n->rhs, precedence(n->rhs->op) <= p);
    }
    case Op::Pow:
      return wrap(n->lhs, precedence(n->lhs->op) <= p) + "^" +
             wrap(n->rhs, precedence(n->rhs->op) < 3);
    default:
      return std::string(func_name(n->op)) + "(" + print(n->lhs) + ")";
  }
}

}  // namespace

Expression Expression::parse(std::string_view source, int dimension, std::size_t base_offset) {
  if (dimension < 1) throw PreconditionError("dimension must be positive");
  Parser parser(source, dimension, base_offset);
  Expression e;
  e.root_ = parser.parse();
  e.max_depth_ = compile(e.root_, e.code_);
  e.dim_ = dimension;
  e.uses_x_ = parser.uses_x;
  e.uses_t_ = parser.uses_t;
  return e;
}

double Expression::operator()(double t, Eigen::Ref<const Vector> x) const {
  std::array<double, 32> small{};
  std::vector<double> big;
  double* st = small.data();
  if (max_depth_ > static_cast<int>(small.size())) {
    big.resize(max_depth_);
    st = big.data();
  }
  int sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const:
        st[sp++] = in.value;
        break;
      case Op::Time:
        st[sp++] = t;
        break;
      case Op::Coord:
        st[sp++] = x[in.index];
        break;
      case Op::Norm:
        st[sp++] = x.norm();
        break;
      case Op::Neg:
        st[sp - 1] = -st[sp - 1];
        break;
      case Op::Add:
        --sp;
        st[sp - 1] += st[sp];
        break;
      case Op::Sub:
        --sp;
        st[sp - 1] -= st[sp];
        break;
      case Op::Mul:
        --sp;
        st[sp - 1] *= st[sp];
        break;
      case Op::Div:
        --sp;
        st[sp - 1] /= st[sp];
        break;
      case Op::Pow:
        --sp;
        st[sp - 1] = std::pow(st[sp - 1], st[sp]);
        break;
      case Op::Exp:
        st[sp - 1] = std::exp(st[sp - 1]);
        break;
      case Op::Log:
        if (!(st[sp - 1] > 0.0)) throw DomainError("log of nonpositive argument");
        st[sp - 1] = std::log(st[sp - 1]);
        break;
      case Op::Sin:
        st[sp - 1] = std::sin(st[sp - 1]);
        break;
      case Op::Cos:
        st[sp - 1] = std::cos(st[sp - 1]);
        break;
      case Op::Abs:
        st[sp - 1] = std::abs(st[sp - 1]);
        break;
      case Op::Sqrt:
        if (!(st[sp - 1] >= 0.0)) throw DomainError("sqrt of negative argument");
        st[sp - 1] = std::sqrt(st[sp - 1]);
        break;
    }
  }
  return st[0];
}

std::string Expression::to_string() const { return print(root_); }

DriftExpression::DriftExpression(std::vector<Expression> components)
    : components_(std::move(components)) {}

void DriftExpression::operator()(double t, Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) const {
  for (std::size_t i = 0; i < components_.size(); ++i) out[static_cast<Eigen::Index>(i)] = components_[i](t, x);
}

Vector DriftExpression::operator()(double t, Eigen::Ref<const Vector> x) const {
  Vector out(dimension());
  (*this)(t, x, out);
  return out;
}

std::string DriftExpression::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) s += "; ";
    s += components_[i].to_string();
  }
  return s;
}

DriftExpression parse_drift_expression(std::string_view source, int dimension) {
  std::vector<std::pair<std::size_t, std::size_t>> pieces;
  std::size_t start = 0;
  for (;;) {
    const std::size_t semi = source.find(';', start);
    const std::size_t end = semi == std::string_view::npos ? source.size() : semi;
    pieces.emplace_back(start, end - start);
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  if (static_cast<int>(pieces.size()) != dimension) {
    throw ArityError("drift has " + std::to_string(pieces.size()) + " components, dimension is " +
                     std::to_string(dimension));
  }
  std::vector<Expression> comps;
  for (auto [off, len] : pieces) comps.push_back(Expression::parse(source.substr(off, len), dimension, off));
  return DriftExpression(std::move(comps));
}

}  // namespace evolab
