#include "agentdistill/eval/game24.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <vector>

namespace agentdistill::eval {

std::optional<Rational> Rational::make(__int128 num, __int128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr __int128 kMax = INT64_MAX;
  if (num > kMax || num < -kMax || den > kMax) return std::nullopt;
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  return r;
}

std::optional<Rational> add(const Rational& a, const Rational& b) {
  return Rational::make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                        static_cast<__int128>(a.den_) * b.den_);
}

std::optional<Rational> sub(const Rational& a, const Rational& b) {
  return Rational::make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                        static_cast<__int128>(a.den_) * b.den_);
}

std::optional<Rational> mul(const Rational& a, const Rational& b) {
  return Rational::make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

std::optional<Rational> div(const Rational& a, const Rational& b) {
  if (b.num_ == 0) return std::nullopt;
  return Rational::make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

namespace {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  // nullopt on syntax error, overflow, or division by zero.
  std::optional<Rational> parse() {
    auto value = expr();
    skip_space();
    if (!value || pos_ != text_.size()) return std::nullopt;
    return value;
  }

  const std::vector<std::int64_t>& leaves() const { return leaves_; }

 private:
  enum class Op { none, add, sub, mul, div };

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool match(std::string_view token) {
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  Op additive() {
    skip_space();
    if (match("+")) return Op::add;
    if (match("-") || match("\xE2\x88\x92")) return Op::sub;  // U+2212
    return Op::none;
  }

  Op multiplicative() {
    skip_space();
    if (match("*") || match("\xC3\x97")) return Op::mul;
    if (match("/") || match("\xC3\xB7")) return Op::div;
    return Op::none;
  }

  std::optional<Rational> expr() {
    auto lhs = term();
    while (lhs) {
      const Op op = additive();
      if (op == Op::none) break;
      auto rhs = term();
      if (!rhs) return std::nullopt;
      lhs = op == Op::add ? add(*lhs, *rhs) : sub(*lhs, *rhs);
    }
    return lhs;
  }

  std::optional<Rational> term() {
    auto lhs = factor();
    while (lhs) {
      const Op op = multiplicative();
      if (op == Op::none) break;
      auto rhs = factor();
      if (!rhs) return std::nullopt;
      lhs = op == Op::mul ? mul(*lhs, *rhs) : div(*lhs, *rhs);
    }
    return lhs;
  }

  std::optional<Rational> factor() {
    skip_space();
    if (match("(")) {
      auto inner = expr();
      skip_space();
      if (!inner || !match(")")) return std::nullopt;
      return inner;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start || pos_ - start > 18) return std::nullopt;
    const std::int64_t value = std::stoll(std::string(text_.substr(start, pos_ - start)));
    leaves_.push_back(value);
    return Rational(value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::int64_t> leaves_;
};

struct Node {
  Rational value;
  std::string text;
};

std::optional<Node> combine(const Node& a, const Node& b, char op) {
  std::optional<Rational> v;
  switch (op) {
    case '+': v = add(a.value, b.value); break;
    case '-': v = sub(a.value, b.value); break;
    case '*': v = mul(a.value, b.value); break;
    default: v = div(a.value, b.value); break;
  }
  if (!v) return std::nullopt;
  return Node{*v, "(" + a.text + op + b.text + ")"};
}

std::string strip_outer_parens(const std::string& text) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') return text;
  int depth = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')') --depth;
    if (depth == 0) return text;
  }
  return text.substr(1, text.size() - 2);
}

}  // namespace

bool verify_game24(const Game24Numbers& numbers, std::string_view expression) {
  ExpressionParser parser(expression);
  const auto value = parser.parse();
  if (!value || !(*value == Rational(24))) return false;
  std::vector<std::int64_t> leaves = parser.leaves();
  std::vector<std::int64_t> expected(numbers.begin(), numbers.end());
  std::sort(leaves.begin(), leaves.end());
  std::sort(expected.begin(), expected.end());
  return leaves == expected;
}

std::optional<std::string> solve_game24(const Game24Numbers& numbers) {
  if (std::any_of(numbers.begin(), numbers.end(), [](std::int64_t n) { return n < 0; })) {
    return std::nullopt;
  }
  static constexpr char kOps[] = {'+', '-', '*', '/'};
  const Rational target(24);
  std::array<std::int64_t, 4> leaves = numbers;
  std::sort(leaves.begin(), leaves.end());
  do {
    std::array<Node, 4> n;
    for (std::size_t i = 0; i < 4; ++i) n[i] = Node{Rational(leaves[i]), std::to_string(leaves[i])};
    for (char x : kOps) {
      for (char y : kOps) {
        for (char z : kOps) {
          auto check = [&](const std::optional<Node>& root) -> std::optional<std::string> {
            if (root && root->value == target) return strip_outer_parens(root->text);
            return std::nullopt;
          };
          auto both = [&](const std::optional<Node>& l, const std::optional<Node>& r, char op) {
            return l && r ? combine(*l, *r, op) : std::nullopt;
          };
          const std::optional<Node> a{n[0]}, b{n[1]}, c{n[2]}, d{n[3]};
          // ((a b) c) d
          if (auto e = check(both(both(both(a, b, x), c, y), d, z))) return e;
          // (a (b c)) d
          if (auto e = check(both(both(a, both(b, c, x), y), d, z))) return e;
          // (a b) (c d)
          if (auto e = check(both(both(a, b, x), both(c, d, z), y))) return e;
          // a ((b c) d)
          if (auto e = check(both(a, both(both(b, c, x), d, y), z))) return e;
          // a (b (c d))
          if (auto e = check(both(a, both(b, both(c, d, x), y), z))) return e;
        }
      }
    }
  } while (std::next_permutation(leaves.begin(), leaves.end()));
  return std::nullopt;
}

std::optional<Game24Numbers> parse_game24_numbers(std::string_view text) {
  Game24Numbers out{};
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++pos;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (count == 4 || pos - start > 18) return std::nullopt;
    out[count++] = std::stoll(std::string(text.substr(start, pos - start)));
  }
  if (count != 4) return std::nullopt;
  if (std::any_of(out.begin(), out.end(), [](std::int64_t n) { return n <= 0; })) return std::nullopt;
  return out;
}

}  // namespace agentdistill::eval
