#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "agefresh/distributions.hpp"
#include "agefresh/error.hpp"

using namespace agefresh;

namespace {

std::vector<DistributionSpec> families() {
  return {DistributionSpec::exponential(1.0), DistributionSpec::exponential(0.3),
          DistributionSpec::gamma(2.0, 1.0),   DistributionSpec::gamma(0.1, 100.0),
          DistributionSpec::gamma(3.5, 0.2),   DistributionSpec::deterministic(3.0),
          DistributionSpec::deterministic(0.25)};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

}  // namespace

TEST_CASE("lst closed forms") {
  CHECK(lst(DistributionSpec::exponential(1.0), {0.0, 0}) == 1.0);
  CHECK(lst(DistributionSpec::exponential(1.0), {1.0, 0}) == doctest::Approx(0.5));
  CHECK(lst(DistributionSpec::gamma(2.0, 1.0), {1.0, 0}) == doctest::Approx(0.25));
  CHECK(lst(DistributionSpec::exponential(4.0), {0.0, 1}) == doctest::Approx(-0.25));
  CHECK(lst(DistributionSpec::deterministic(2.0), {1.0, 1}) == doctest::Approx(-2.0 * std::exp(-2.0)));
  CHECK(lst(DistributionSpec::deterministic(2.0), {1.0, 2}) == doctest::Approx(4.0 * std::exp(-2.0)));
}

TEST_CASE("lst rejects bad queries") {
  const auto d = DistributionSpec::exponential(1.0);
  CHECK_THROWS_AS(lst(d, {-0.1, 0}), ValidationError);
  CHECK_THROWS_AS(lst(d, {1.0, 3}), ValidationError);
  CHECK_THROWS_AS(lst(d, {1.0, -1}), ValidationError);
}

TEST_CASE("constructors reject invalid parameters") {
  CHECK_THROWS_AS(DistributionSpec::exponential(0.0), ValidationError);
  CHECK_THROWS_AS(DistributionSpec::gamma(-1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(DistributionSpec::gamma(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(DistributionSpec::deterministic(-1.0), ValidationError);
  CHECK(DistributionSpec::deterministic(0.0).is_degenerate_zero());
}

TEST_CASE("moments") {
  CHECK(moment(DistributionSpec::gamma(2.0, 1.0), 1) == doctest::Approx(2.0));
  CHECK(moment(DistributionSpec::deterministic(3.0), 2) == doctest::Approx(9.0));
  CHECK(moment(DistributionSpec::exponential(0.5), 2) == doctest::Approx(8.0));
  CHECK_THROWS_AS(moment(DistributionSpec::exponential(1.0), 3), ValidationError);

  for (const auto& d : families()) {
    CAPTURE(to_string(d));
    CHECK(moment(d, 1) == doctest::Approx(-lst(d, {0.0, 1})).epsilon(1e-12));
    CHECK(moment(d, 2) == doctest::Approx(lst(d, {0.0, 2})).epsilon(1e-12));
  }
}

TEST_CASE("lst is a decreasing function into (0, 1]") {
  for (const auto& d : families()) {
    CAPTURE(to_string(d));
    CHECK(lst(d, {0.0, 0}) == 1.0);
    double prev = 1.0;
    for (double s : log_grid(1e-4, 1e2, 100)) {
      const double v = lst(d, {s, 0});
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("lst derivatives match central differences") {
  for (const auto& d : families()) {
    for (double s : {0.0, 0.01, 0.3, 1.0, 2.5, 7.0}) {
      CAPTURE(to_string(d));
      CAPTURE(s);
      const double h = 1e-5 * std::max(1.0, s);
      // At s = 0 the left point would be a negative argument, which lst()
      // rejects; shift the stencil to the right there.
      const double c = s < h ? h : s;
      const double fm = lst(d, {c - h, 0}), f0 = lst(d, {c, 0}), fp = lst(d, {c + h, 0});
      const double d1 = (fp - fm) / (2 * h);
      const double d2 = (fp - 2 * f0 + fm) / (h * h);
      CHECK(lst(d, {c, 1}) == doctest::Approx(d1).epsilon(1e-6));
      const double analytic2 = lst(d, {c, 2});
      // The second difference carries ~eps/h^2 absolute noise.
      CHECK(std::abs(analytic2 - d2) <= 1e-6 * std::abs(analytic2) + 1e-4 * f0);
    }
  }
}

TEST_CASE("lst complement and Taylor coefficients agree with the plain transform") {
  for (const auto& d : families()) {
    CAPTURE(to_string(d));
    for (double x : {1e-9, 1e-3, 0.5, 4.0}) {
      CHECK(lst_complement(d, x) == doctest::Approx(1.0 - lst(d, {x, 0})).epsilon(1e-6));
    }
    const double c = 0.7;
    const auto t = lst_taylor(d, c, 6);
    CHECK(t[0] == doctest::Approx(lst(d, {c, 0})));
    CHECK(t[1] == doctest::Approx(lst(d, {c, 1})));
    CHECK(t[2] == doctest::Approx(lst(d, {c, 2}) / 2.0));
    // Summed series reproduces the transform a short step away.
    const double step = 0.05;
    double sum = 0.0;
    for (auto it = t.rbegin(); it != t.rend(); ++it) sum = sum * step + *it;
    CHECK(sum == doctest::Approx(lst(d, {c + step, 0})).epsilon(1e-7));
  }
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(7);
  CHECK(sample(DistributionSpec::deterministic(2.0), rng) == 2.0);

  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample(DistributionSpec::exponential(1.0), rng);
  CHECK(sum / n >= 0.99);
  CHECK(sum / n <= 1.01);

  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample(DistributionSpec::gamma(0.1, 100.0), rng);
  const double tol = 3.0 * std::sqrt(1000.0) / 1000.0;
  CHECK(std::abs(sum / n - 10.0) <= tol);
}

TEST_CASE("Monte Carlo transform matches the closed form within 4 standard errors") {
  const int n = 1'000'000;
  std::mt19937_64 rng(11);
  for (const auto& d : {DistributionSpec::exponential(1.0), DistributionSpec::gamma(0.5, 2.0),
                        DistributionSpec::gamma(0.1, 100.0), DistributionSpec::deterministic(1.5)}) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample(d, rng);
    for (double s : {0.5, 1.0, 2.0}) {
      CAPTURE(to_string(d));
      CAPTURE(s);
      double m = 0.0, m2 = 0.0;
      for (double x : xs) {
        const double e = std::exp(-s * x);
        m += e;
        m2 += e * e;
      }
      m /= n;
      const double se = std::sqrt(std::max(m2 / n - m * m, 0.0) / n);
      // The deterministic case has zero variance; allow for summation rounding.
      CHECK(std::abs(m - lst(d, {s, 0})) <= 4.0 * se + 1e-9);
    }
  }
}

TEST_CASE("literal parsing") {
  CHECK(parse_distribution("exp(2)") == DistributionSpec::exponential(2.0));
  CHECK(parse_distribution(" Gamma( 0.1 , 100 ) ") == DistributionSpec::gamma(0.1, 100.0));
  CHECK(parse_distribution("DET(0.0125)") == DistributionSpec::deterministic(0.0125));
  CHECK_THROWS_AS(parse_distribution("exp(1,2)"), ValidationError);
  CHECK_THROWS_AS(parse_distribution("weibull(1)"), ValidationError);
  CHECK_THROWS_AS(parse_distribution("exp(x)"), ValidationError);
  CHECK_THROWS_AS(parse_distribution("exp(-1)"), ValidationError);
  CHECK_THROWS_AS(parse_distribution("exp1"), ValidationError);

  for (const auto& d : families()) CHECK(parse_distribution(to_string(d)) == d);
  const auto odd = DistributionSpec::deterministic(1.0 / 3.0);
  CHECK(parse_distribution(to_string(odd)) == odd);
}
