#pragma once

// Test-only Game-of-24 oracles that share no code with the library: a
// shunting-yard evaluator over arbitrary-precision rationals and a
// pick-two-and-combine solvability search.

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

using Q = boost::multiprecision::cpp_rational;

template <typename T>
struct Evaluated {
  T value;
  std::vector<long long> leaves;
};

// ASCII + - * / and parentheses only; no unary operators.
template <typename T>
std::optional<Evaluated<T>> evaluate_as(const std::string& text) {
  using Q = T;
  std::vector<Q> values;
  std::vector<char> ops;
  std::vector<long long> leaves;
  auto prec = [](char op) { return op == '+' || op == '-' ? 1 : 2; };
  auto apply = [&]() -> bool {
    if (values.size() < 2 || ops.empty()) return false;
    const Q b = values.back();
    values.pop_back();
    const Q a = values.back();
    values.pop_back();
    const char op = ops.back();
    ops.pop_back();
    if (op == '+') values.push_back(a + b);
    else if (op == '-') values.push_back(a - b);
    else if (op == '*') values.push_back(a * b);
    else {
      if (b == 0) return false;
      values.push_back(a / b);
    }
    return true;
  };
  bool expect_operand = true;
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      if (!expect_operand) return std::nullopt;
      long long v = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) v = v * 10 + (text[i++] - '0');
      values.push_back(Q(v));
      leaves.push_back(v);
      expect_operand = false;
    } else if (c == '(') {
      if (!expect_operand) return std::nullopt;
      ops.push_back(c);
      ++i;
    } else if (c == ')') {
      if (expect_operand) return std::nullopt;
      while (!ops.empty() && ops.back() != '(') {
        if (!apply()) return std::nullopt;
      }
      if (ops.empty()) return std::nullopt;
      ops.pop_back();
      ++i;
    } else if (c == '+' || c == '-' || c == '*' || c == '/') {
      if (expect_operand) return std::nullopt;
      while (!ops.empty() && ops.back() != '(' && prec(ops.back()) >= prec(c)) {
        if (!apply()) return std::nullopt;
      }
      ops.push_back(c);
      expect_operand = true;
      ++i;
    } else {
      return std::nullopt;
    }
  }
  if (expect_operand) return std::nullopt;
  while (!ops.empty()) {
    if (ops.back() == '(' || !apply()) return std::nullopt;
  }
  if (values.size() != 1) return std::nullopt;
  return Evaluated<T>{values.front(), leaves};
}

inline std::optional<Evaluated<Q>> evaluate(const std::string& text) { return evaluate_as<Q>(text); }

inline bool reachable(std::vector<Q> items, const Q& target) {
  if (items.size() == 1) return items.front() == target;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (i == j) continue;
      std::vector<Q> rest;
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (k != i && k != j) rest.push_back(items[k]);
      }
      std::vector<Q> candidates{items[i] + items[j], items[i] - items[j], items[i] * items[j]};
      if (items[j] != 0) candidates.push_back(items[i] / items[j]);
      for (const auto& c : candidates) {
        rest.push_back(c);
        if (reachable(rest, target)) return true;
        rest.pop_back();
      }
    }
  }
  return false;
}

inline bool solvable(const std::array<long long, 4>& numbers) {
  return reachable({Q(numbers[0]), Q(numbers[1]), Q(numbers[2]), Q(numbers[3])}, Q(24));
}

inline std::vector<std::array<long long, 4>> multisets_1_to_9() {
  std::vector<std::array<long long, 4>> out;
  for (long long a = 1; a <= 9; ++a)
    for (long long b = a; b <= 9; ++b)
      for (long long c = b; c <= 9; ++c)
        for (long long d = c; d <= 9; ++d) out.push_back({a, b, c, d});
  return out;
}

}  // namespace oracle
