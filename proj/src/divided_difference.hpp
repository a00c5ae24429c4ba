#pragma once

#include <array>
#include <functional>
#include <vector>

#include "agefresh/jet.hpp"

namespace agefresh::detail {

/// q(x) = (f(x) - f(c)) / (x - c) together with q' and q''.
///
/// The raw quotient loses most of its digits near x = c, and the second
/// derivative loses them three times over, so inside a window scaled by the
/// decay rate of f's Taylor coefficients the series sum_n t_{n+1} d^n is used.
class DividedDifference {
 public:
  using Derivs = std::function<std::array<double, 3>(double)>;

  /// taylor holds t_0..t_{N-1} of f(c + d); N >= 4.
  DividedDifference(Derivs f, double center, std::vector<double> taylor);

  std::array<double, 3> at(double x) const;

  Jet operator()(const Jet& x) const {
    const auto q = at(x.value);
    return compose(q[0], q[1], q[2], x);
  }

  static constexpr int kTerms = 40;

 private:
  Derivs f_;
  double c_;
  std::vector<double> t_;
  double window_;
};

/// Taylor coefficients of a product from the coefficients of its factors.
std::vector<double> cauchy_product(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace agefresh::detail
