#pragma once

// Second-order forward-mode values: a quantity together with its first and
// second derivative with respect to one scalar variable. Composite transforms
// are assembled with these so that product/quotient/chain rules are applied
// exactly rather than by numerical differentiation.

namespace agefresh {

struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  static constexpr Jet constant(double c) { return {c, 0.0, 0.0}; }
  static constexpr Jet variable(double x) { return {x, 1.0, 0.0}; }
};

constexpr Jet operator-(const Jet& a) { return {-a.value, -a.d1, -a.d2}; }

constexpr Jet operator+(const Jet& a, const Jet& b) {
  return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2};
}
constexpr Jet operator-(const Jet& a, const Jet& b) {
  return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2};
}
constexpr Jet operator*(const Jet& a, const Jet& b) {
  return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
          a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2};
}
constexpr Jet operator/(const Jet& a, const Jet& b) {
  const double q = a.value / b.value;
  const double q1 = (a.d1 - q * b.d1) / b.value;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.value;
  return {q, q1, q2};
}

constexpr Jet operator+(const Jet& a, double c) { return {a.value + c, a.d1, a.d2}; }
constexpr Jet operator+(double c, const Jet& a) { return a + c; }
constexpr Jet operator-(const Jet& a, double c) { return {a.value - c, a.d1, a.d2}; }
constexpr Jet operator-(double c, const Jet& a) { return {c - a.value, -a.d1, -a.d2}; }
constexpr Jet operator*(const Jet& a, double c) { return {a.value * c, a.d1 * c, a.d2 * c}; }
constexpr Jet operator*(double c, const Jet& a) { return a * c; }
constexpr Jet operator/(const Jet& a, double c) { return {a.value / c, a.d1 / c, a.d2 / c}; }
constexpr Jet operator/(double c, const Jet& a) { return Jet::constant(c) / a; }

/// f(a(s)) given f, f', f'' evaluated at a(s).
constexpr Jet compose(double f0, double f1, double f2, const Jet& arg) {
  return {f0, f1 * arg.d1, f2 * arg.d1 * arg.d1 + f1 * arg.d2};
}

}  // namespace agefresh
