#pragma once

#include <array>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agefresh/jet.hpp"

namespace agefresh {

struct Exponential {
  double rate;
};

/// Shape alpha, scale beta; LST (1 + beta s)^-alpha.
struct Gamma {
  double shape;
  double scale;
};

struct Deterministic {
  double value;
};

class DistributionSpec {
 public:
  using Kind = std::variant<Exponential, Gamma, Deterministic>;

  static DistributionSpec exponential(double rate);
  static DistributionSpec gamma(double shape, double scale);
  static DistributionSpec deterministic(double value);

  const Kind& kind() const { return kind_; }
  bool is_exponential() const { return std::holds_alternative<Exponential>(kind_); }
  bool is_gamma() const { return std::holds_alternative<Gamma>(kind_); }
  bool is_deterministic() const { return std::holds_alternative<Deterministic>(kind_); }
  /// True for Deterministic(0), the only constructible distribution with zero mean.
  bool is_degenerate_zero() const;

  friend bool operator==(const DistributionSpec& a, const DistributionSpec& b);

 private:
  explicit DistributionSpec(Kind k) : kind_(k) {}
  Kind kind_;
};

struct LstQuery {
  double s = 0.0;
  int order = 0;
};

/// order-th derivative of X*(s). Throws ValidationError for s < 0 or order outside {0,1,2}.
double lst(const DistributionSpec& dist, LstQuery q);

/// E[X^n] for n in {1,2}.
double moment(const DistributionSpec& dist, int n);

double sample(const DistributionSpec& dist, std::mt19937_64& rng);

/// X*(x), X*'(x), X*''(x) at a real point x > -radius. No range check; internal use.
std::array<double, 3> lst_derivatives(const DistributionSpec& dist, double x);

/// 1 - X*(x) evaluated without cancellation near x = 0.
double lst_complement(const DistributionSpec& dist, double x);

/// X*(a(s)) as a jet, where a is itself a jet in s.
Jet lst_jet(const DistributionSpec& dist, const Jet& arg);

/// 1 - X*(a(s)) as a jet, accurate when a(s) is close to 0.
Jet lst_complement_jet(const DistributionSpec& dist, const Jet& arg);

/// Taylor coefficients t_0..t_{n-1} of X*(c + d) in powers of d.
std::vector<double> lst_taylor(const DistributionSpec& dist, double c, int n);

/// Parses `exp(rate)`, `gamma(shape,scale)` or `det(value)`, case-insensitively.
DistributionSpec parse_distribution(std::string_view text);

/// Inverse of parse_distribution; round-trips exactly.
std::string to_string(const DistributionSpec& dist);

}  // namespace agefresh
