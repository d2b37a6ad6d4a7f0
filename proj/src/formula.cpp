#include "polyads/formula.hpp"

#include <charconv>
#include <cmath>

namespace polyads {

struct FormulaCovariates::Node {
  enum class Kind { constant, attr, add, sub, mul, neg, eq };
  Kind kind;
  double value = 0.0;  // constant
  int dim = 0;         // attr, 1-based
  int attr = 0;        // attr, column index
  std::unique_ptr<Node> a, b;
};

namespace {

using Node = FormulaCovariates::Node;
using Kind = Node::Kind;

struct Parser {
  const std::string& text;
  size_t pos = 0;
  const std::vector<AttributeTable>& tables;

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("formula error at offset " + std::to_string(pos) + ": " +
                     msg);
  }

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  std::unique_ptr<Node> parse_expr() {
    auto lhs = parse_term();
    while (true) {
      if (eat('+')) {
        auto n = std::make_unique<Node>();
        n->kind = Kind::add;
        n->a = std::move(lhs);
        n->b = parse_term();
        lhs = std::move(n);
      } else if (eat('-')) {
        auto n = std::make_unique<Node>();
        n->kind = Kind::sub;
        n->a = std::move(lhs);
        n->b = parse_term();
        lhs = std::move(n);
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> parse_term() {
    auto lhs = parse_factor();
    while (eat('*')) {
      auto n = std::make_unique<Node>();
      n->kind = Kind::mul;
      n->a = std::move(lhs);
      n->b = parse_factor();
      lhs = std::move(n);
    }
    return lhs;
  }

  std::unique_ptr<Node> parse_factor() {
    char c = peek();
    if (c == '-') {
      ++pos;
      auto n = std::make_unique<Node>();
      n->kind = Kind::neg;
      n->a = parse_factor();
      return n;
    }
    if (c == '(') {
      ++pos;
      auto inner = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_name();
    fail("expected a number, name@dim, eq(...), or '('");
  }

  std::unique_ptr<Node> parse_number() {
    skip_ws();
    double v = 0.0;
    auto [ptr, ec] =
        std::from_chars(text.data() + pos, text.data() + text.size(), v);
    if (ec != std::errc()) fail("bad number");
    pos = static_cast<size_t>(ptr - text.data());
    auto n = std::make_unique<Node>();
    n->kind = Kind::constant;
    n->value = v;
    return n;
  }

  std::unique_ptr<Node> parse_name() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);
    if (name == "eq") {
      if (!eat('(')) fail("eq needs '('");
      auto n = std::make_unique<Node>();
      n->kind = Kind::eq;
      n->a = parse_expr();
      if (!eat(',')) fail("eq needs two arguments");
      n->b = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (!eat('@')) fail("attribute reference '" + name + "' needs @dimension");
    skip_ws();
    size_t dim_start = pos;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (pos == dim_start) fail("missing dimension after '@'");
    int dim = std::stoi(text.substr(dim_start, pos - dim_start));
    if (dim < 1 || dim > static_cast<int>(tables.size()))
      fail("dimension " + std::to_string(dim) + " out of range");
    const AttributeTable& table = tables[static_cast<size_t>(dim) - 1];
    int attr = -1;
    for (size_t k = 0; k < table.names.size(); ++k)
      if (table.names[k] == name) {
        attr = static_cast<int>(k);
        break;
      }
    if (attr < 0)
      fail("attribute '" + name + "' not found for dimension " +
           std::to_string(dim));
    auto n = std::make_unique<Node>();
    n->kind = Kind::attr;
    n->dim = dim;
    n->attr = attr;
    return n;
  }
};

// Returns false when a referenced attribute row is absent.
bool eval(const Node& n, const std::vector<AttributeTable>& tables,
          const EdgeIndex& e, double* out) {
  double a = 0.0, b = 0.0;
  switch (n.kind) {
    case Kind::constant:
      *out = n.value;
      return true;
    case Kind::attr: {
      const AttributeTable& table = tables[static_cast<size_t>(n.dim) - 1];
      int32_t node = e[n.dim - 1];
      if (node < 1 || static_cast<size_t>(node) > table.present.size() ||
          !table.present[static_cast<size_t>(node) - 1])
        return false;
      *out = table.values[static_cast<size_t>(node) - 1]
                         [static_cast<size_t>(n.attr)];
      return true;
    }
    case Kind::neg:
      if (!eval(*n.a, tables, e, &a)) return false;
      *out = -a;
      return true;
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::eq:
      if (!eval(*n.a, tables, e, &a) || !eval(*n.b, tables, e, &b))
        return false;
      switch (n.kind) {
        case Kind::add:
          *out = a + b;
          break;
        case Kind::sub:
          *out = a - b;
          break;
        case Kind::mul:
          *out = a * b;
          break;
        default:
          *out = a == b ? 1.0 : 0.0;
      }
      return true;
  }
  return false;
}

}  // namespace

FormulaCovariates::FormulaCovariates(const std::string& spec,
                                     std::vector<AttributeTable> tables)
    : tables_(std::move(tables)) {
  Parser parser{spec, 0, tables_};
  while (true) {
    size_t start = parser.pos;
    features_.push_back(parser.parse_expr());
    parser.skip_ws();
    std::string text = spec.substr(start, parser.pos - start);
    size_t b = text.find_first_not_of(" \t");
    size_t e = text.find_last_not_of(" \t");
    feature_texts_.push_back(
        b == std::string::npos ? "" : text.substr(b, e - b + 1));
    if (parser.pos >= spec.size()) break;
    if (!parser.eat(';')) parser.fail("expected ';' between features");
    parser.skip_ws();
    if (parser.pos >= spec.size())
      parser.fail("trailing ';' without a feature");
  }
}

FormulaCovariates::~FormulaCovariates() = default;

bool FormulaCovariates::try_load(const EdgeIndex& e, double* out) const {
  for (size_t k = 0; k < features_.size(); ++k)
    if (!eval(*features_[k], tables_, e, out + k)) return false;
  return true;
}

}  // namespace polyads
