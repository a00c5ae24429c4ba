#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "agefresh/analytic_iid.hpp"
#include "agefresh/distributions.hpp"

namespace agefresh {

inline constexpr int kDefaultMaxQueues = 8;

struct PollingModel {
  std::vector<double> lambdas;
  std::vector<DistributionSpec> services;
  /// switchovers[from][to]: time to switch from queue `from` to queue `to`.
  std::vector<std::vector<DistributionSpec>> switchovers;
  Eigen::MatrixXd routing;

  int k() const { return static_cast<int>(lambdas.size()); }

  /// Shapes, positivity, row-stochastic routing and irreducibility. max_k <= 0 disables the cap.
  void validate(int max_k = kDefaultMaxQueues) const;
};

enum class RoutingScheme { Cyclic, Lop, Symmetric };

std::string_view to_string(RoutingScheme s);
RoutingScheme parse_routing_scheme(std::string_view text);

Eigen::MatrixXd build_routing(RoutingScheme scheme, const std::vector<double>& lambdas);

/// Stationary distribution of an irreducible row-stochastic matrix.
Eigen::VectorXd stationary(const Eigen::MatrixXd& routing);

struct SolverOptions {
  int max_k = kDefaultMaxQueues;
  double residual_tolerance = 1e-9;
};

/// A point z in {0,1}^k is a bitmask with bit l set when z_l = 1.
using Bitmask = std::uint32_t;

/// Coefficients of one term of the boundary equation at a binary point:
/// the switchover transform from queue j into queue i and the policy's
/// service-side transform for queue j, with their partials in each z_l.
struct TildeCoefficients {
  double u_coeff = 1.0;
  double h_coeff = 1.0;
  std::vector<double> du;
  std::vector<double> dh;
};

TildeCoefficients tilde_coefficients(const PollingModel& model, Policy policy, Bitmask b, int i,
                                     int j);

struct BoundaryTable {
  int k = 0;
  /// F_i(b) at index i * 2^k + b; the all-ones entries are pinned to 1.
  std::vector<double> values;
  std::vector<double> alphas;
  double max_residual = 0.0;
  double rcond = 0.0;

  double at(int i, Bitmask b) const { return values[(static_cast<std::size_t>(i) << k) + b]; }
};

BoundaryTable solve_boundary(const PollingModel& model, Policy policy,
                             const SolverOptions& options = {});

std::vector<double> gamma_rates(const PollingModel& model, Policy policy,
                                const BoundaryTable& table, const Eigen::VectorXd& pi);

std::vector<double> mean_waiting(const BoundaryTable& table, const std::vector<double>& gammas,
                                 const std::vector<double>& lambdas);

struct DerivativeTable {
  int k = 0;
  /// dF_i/dz_l at b, index ((i * k) + l) * 2^k + b.
  std::vector<double> values;

  double at(int i, int l, Bitmask b) const {
    return values[((static_cast<std::size_t>(i) * k + l) << k) + b];
  }
};

DerivativeTable solve_derivatives(const PollingModel& model, Policy policy,
                                  const BoundaryTable& table, const SolverOptions& options = {});

struct PollingPaoi {
  std::vector<double> per_queue;
  double average = 0.0;

  std::vector<double> alphas;
  std::vector<double> gammas;
  std::vector<double> mean_waiting;
  std::vector<double> w_at_lambda;
  double boundary_residual = 0.0;
  double boundary_rcond = 0.0;
  /// max_i |gamma_i - dF_i/dz_i(1,...,1)| / gamma_i; both are the same quantity.
  double gamma_dual_path_rel_diff = 0.0;
};

PollingPaoi paoi(const PollingModel& model, Policy policy, const SolverOptions& options = {});

}  // namespace agefresh
