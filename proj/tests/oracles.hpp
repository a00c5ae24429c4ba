#pragma once

// Independent reference values for the tests: closed forms for exponential
// service and vacations, typed in separately from the library's general
// formulas, plus a random model generator.

#include <cmath>
#include <random>
#include <vector>

#include "agefresh/analytic_iid.hpp"
#include "agefresh/polling_exact.hpp"

namespace oracle {

struct Triple {
  double aoi, paoi, var;
};

// Exponential service (mu), exponential vacation (v), arrival rate l.
inline Triple cbs_exp(double l, double m, double v) {
  return {1 / l + 1 / v - (l + v + m) / (v * l + m * l + m * v) + 1 / (v + l) + 2 / m,
          1 / l + 1 / v + 1 / (v + l) + 2 / m,
          1 / ((l + v) * (l + v)) + 1 / (l * l) + 1 / (v * v) + 2 / (m * m)};
}

inline Triple brs_exp(double l, double m, double v) {
  const double num = 1 / (v * v) + 1 / (v * m) + 1 / (m * m) + m / (l * v * (l + m)) +
                     m / (l * l * (l + m)) + m / (l * (l + m) * (l + m));
  const double den = 1 / v + 1 / m + m / (l * (l + m));
  return {num / den + 1 / (l + v) + l * v / ((l + m) * (l + m) * (l + v)) + 1 / m,
          (m * m - m * v + l * m) / ((l + m) * (l + m) * (l + v)) + 1 / v + 2 / m + 1 / l,
          std::nan("")};
}

inline Triple cbsp_exp(double l, double m, double v) {
  return {1 / v + 1 / l + 1 / m - (m + v + l) / (l * m + v * m + l * v) +
              (v + m + l) / ((m + l) * (v + l)),
          1 / l + 1 / m + 1 / v + (l + m + v) / ((l + m) * (l + v)), std::nan("")};
}

// Systems without vacations, exponential service.
inline Triple mm11(double l, double m) {
  return {1 / l + 2 / m - 1 / (l + m), 1 / l + 2 / m, 1 / (l * l) + 2 / (m * m)};
}

inline Triple mm12star(double l, double m) {
  const double s = l + m;
  return {1 / l + 2 / m + l / (s * s) + 1 / s - 2 * s / (l * l + l * m + m * m),
          1 / m + 1 / l + l / (s * s) + l / (m * s),
          1 / (l * l) + 2 / (m * m) - (2 * l * l + 4 * l * m + 3 * m * m) / (s * s * s * s)};
}

inline Triple mm11_preemptive(double l, double m) {
  return {1 / m + 1 / l, 1 / (m + l) + 1 / m + 1 / l,
          1 / ((l + m) * (l + m)) + 1 / (l * l) + 1 / (m * m)};
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline agefresh::DistributionSpec random_distribution(std::mt19937_64& rng) {
  using agefresh::DistributionSpec;
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: return DistributionSpec::exponential(log_uniform(rng, 0.05, 20.0));
    case 1: return DistributionSpec::gamma(log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.05, 10.0));
    default: return DistributionSpec::deterministic(log_uniform(rng, 0.05, 20.0));
  }
}

inline agefresh::IidVacationModel random_model(std::mt19937_64& rng) {
  const double lambda = log_uniform(rng, 0.01, 50.0);
  auto service = random_distribution(rng);
  auto vacation = random_distribution(rng);
  return {lambda, service, vacation};
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

// Eight queues with exp(1) service and det(1/80) switchovers; queues 1 and 4
// carry 45% of the load each, the other six share the remaining 10%.
inline agefresh::PollingModel eight_queue_model(double load, agefresh::RoutingScheme scheme) {
  using agefresh::DistributionSpec;
  agefresh::PollingModel m;
  for (int i = 0; i < 8; ++i) m.lambdas.push_back(load * ((i == 0 || i == 3) ? 0.45 : 0.1 / 6));
  m.services.assign(8, DistributionSpec::exponential(1));
  m.switchovers.assign(8, std::vector<DistributionSpec>(8, DistributionSpec::deterministic(1.0 / 80)));
  m.routing = agefresh::build_routing(scheme, m.lambdas);
  return m;
}

// Three queues with a 10/20/70 load split, exp(1) service, det(0.2) switchovers.
inline agefresh::PollingModel three_queue_model(double load, agefresh::RoutingScheme scheme) {
  using agefresh::DistributionSpec;
  agefresh::PollingModel m;
  m.lambdas = {0.1 * load, 0.2 * load, 0.7 * load};
  m.services.assign(3, DistributionSpec::exponential(1));
  m.switchovers.assign(3, std::vector<DistributionSpec>(3, DistributionSpec::deterministic(0.2)));
  m.routing = agefresh::build_routing(scheme, m.lambdas);
  return m;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace oracle
