#include "divided_difference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace agefresh::detail {

DividedDifference::DividedDifference(Derivs f, double center, std::vector<double> taylor)
    : f_(std::move(f)), c_(center), t_(std::move(taylor)) {
  // Largest early coefficient ratio; it bounds how fast the series decays.
  double kappa = 0.0;
  for (std::size_t n = 0; n + 1 < t_.size() && n < 7; ++n) {
    if (t_[n] != 0.0) kappa = std::max(kappa, std::abs(t_[n + 1] / t_[n]));
  }
  window_ = kappa > 0.0 ? 0.1 / kappa : std::numeric_limits<double>::infinity();
}

std::array<double, 3> DividedDifference::at(double x) const {
  const double d = x - c_;
  if (std::abs(d) > window_) {
    const auto fx = f_(x);
    const double q = (fx[0] - t_[0]) / d;
    const double q1 = (fx[1] - q) / d;
    const double q2 = (fx[2] - 2.0 * q1) / d;
    return {q, q1, q2};
  }
  // Horner on q(d) = sum t_{n+1} d^n and its first two derivatives.
  const std::size_t n_max = t_.size() - 1;
  double q = 0.0, q1 = 0.0, q2 = 0.0;
  for (std::size_t n = n_max; n >= 1; --n) {
    q2 = q2 * d + 2.0 * q1;
    q1 = q1 * d + q;
    q = q * d + t_[n];
  }
  return {q, q1, q2};
}

std::vector<double> cauchy_product(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) out[i] += a[j] * b[i - j];
  }
  return out;
}

}  // namespace agefresh::detail
