#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace agentdistill::eval {

using Game24Numbers = std::array<std::int64_t, 4>;

// Exact rational with int64 parts. Arithmetic reports overflow and division
// by zero as nullopt instead of wrapping.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)
  static std::optional<Rational> make(__int128 num, __int128 den);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  friend std::optional<Rational> add(const Rational& a, const Rational& b);
  friend std::optional<Rational> sub(const Rational& a, const Rational& b);
  friend std::optional<Rational> mul(const Rational& a, const Rational& b);
  friend std::optional<Rational> div(const Rational& a, const Rational& b);

  bool operator==(const Rational&) const = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Parses an expression over integers, + - * / (also the Unicode operator
// glyphs), and parentheses. Returns the exact value when it parses, every
// division is defined, and its integer leaves match `numbers` as a multiset.
bool verify_game24(const Game24Numbers& numbers, std::string_view expression);

// Exhaustive search over leaf orderings, operator triples, and the five
// binary tree shapes. The witness is fully parenthesized ASCII. Inputs with
// negative numbers have no representable witness and yield nullopt.
std::optional<std::string> solve_game24(const Game24Numbers& numbers);

// "4 4 6 8" -> {4,4,6,8}. Accepts commas or whitespace as separators.
std::optional<Game24Numbers> parse_game24_numbers(std::string_view text);

}  // namespace agentdistill::eval
