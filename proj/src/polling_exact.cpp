#include "agefresh/polling_exact.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "agefresh/error.hpp"

namespace agefresh {

namespace {

constexpr Bitmask bit(int l) { return Bitmask{1} << l; }

// Everything the boundary and derivative systems need at the binary points,
// evaluated once. "dx" entries are derivatives with respect to the LST
// argument; the partial in z_l is -lambda_l times that when z_l enters the
// argument.
class Coefficients {
 public:
  Coefficients(const PollingModel& m, Policy policy)
      : k_(m.k()), n_(std::size_t{1} << k_), policy_(policy), lambdas_(m.lambdas) {
    const Eigen::VectorXd pi = stationary(m.routing);
    c_.resize(k_, k_);
    for (int i = 0; i < k_; ++i) {
      for (int j = 0; j < k_; ++j) c_(i, j) = pi(j) * m.routing(j, i) / pi(i);
    }
    const auto kk = static_cast<std::size_t>(k_);
    h_.resize(n_ * kk);
    dh_.resize(n_ * kk);
    u_.resize(n_ * kk * kk);
    du_.resize(n_ * kk * kk);
    for (Bitmask b = 0; b < n_; ++b) {
      double all = 0.0;
      for (int l = 0; l < k_; ++l) {
        if (!(b & bit(l))) all += lambdas_[static_cast<std::size_t>(l)];
      }
      for (int j = 0; j < k_; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const double lj = lambdas_[ju];
        const double own = (b & bit(j)) ? 0.0 : lj;
        Jet h;
        switch (policy) {
          case Policy::CBS: h = lst_jet(m.services[ju], Jet::variable(all - own)); break;
          case Policy::BRS: h = lst_jet(m.services[ju], Jet::variable(all)); break;
          case Policy::CBSP: {
            // L_j*(x): one completed packet of queue j when arrivals of its own
            // stream restart the service.
            const Jet x = Jet::variable(all - own);
            const Jet y = x + lj;
            const Jet hy = lst_jet(m.services[ju], y);
            h = hy * y / (x + lj * hy);
            break;
          }
        }
        h_[b * kk + ju] = h.value;
        dh_[b * kk + ju] = h.d1;
        for (int i = 0; i < k_; ++i) {
          const auto d = lst_derivatives(m.switchovers[ju][static_cast<std::size_t>(i)], all);
          u_[(b * kk + ju) * kk + static_cast<std::size_t>(i)] = d[0];
          du_[(b * kk + ju) * kk + static_cast<std::size_t>(i)] = d[1];
        }
      }
    }
  }

  int k() const { return k_; }
  Bitmask full() const { return static_cast<Bitmask>(n_ - 1); }
  double c(int i, int j) const { return c_(i, j); }
  double h(Bitmask b, int j) const { return h_[b * k_ + j]; }
  double u(Bitmask b, int j, int i) const { return u_[(b * k_ + j) * k_ + i]; }

  /// Partial of H~_j at b in z_l.
  double dh(Bitmask b, int j, int l) const {
    if (policy_ != Policy::BRS && l == j) return 0.0;
    return -lambdas_[static_cast<std::size_t>(l)] * dh_[b * k_ + j];
  }
  /// Partial of U~ (from j into i) at b in z_l.
  double du(Bitmask b, int j, int i, int l) const {
    return -lambdas_[static_cast<std::size_t>(l)] * du_[(b * k_ + j) * k_ + i];
  }

 private:
  int k_;
  std::size_t n_;
  Policy policy_;
  std::vector<double> lambdas_;
  Eigen::MatrixXd c_;
  std::vector<double> h_, dh_, u_, du_;
};

void check_cap(const PollingModel& model, const SolverOptions& options) {
  model.validate(options.max_k);
}

}  // namespace

void PollingModel::validate(int max_k) const {
  const int n = k();
  if (n < 1) throw ValidationError("polling model needs at least one queue");
  if (max_k > 0 && n > max_k) {
    throw ValidationError("k = " + std::to_string(n) + " exceeds the dense-solver cap of " +
                          std::to_string(max_k) + " queues");
  }
  if (n > 24) throw ValidationError("k = " + std::to_string(n) + " is too large for bitmask points");
  const auto kk = static_cast<std::size_t>(n);
  if (services.size() != kk) {
    throw ValidationError("services: expected " + std::to_string(n) + " entries, got " +
                          std::to_string(services.size()));
  }
  if (switchovers.size() != kk) {
    throw ValidationError("switchovers: expected " + std::to_string(n) + " rows");
  }
  for (std::size_t i = 0; i < kk; ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw ValidationError("lambdas[" + std::to_string(i) + "] must be positive");
    }
    if (services[i].is_degenerate_zero()) {
      throw ValidationError("services[" + std::to_string(i) + "] must not be det(0)");
    }
    if (switchovers[i].size() != kk) {
      throw ValidationError("switchovers row " + std::to_string(i) + ": expected " +
                            std::to_string(n) + " entries");
    }
  }
  if (routing.rows() != n || routing.cols() != n) {
    throw ValidationError("routing must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!(routing(i, j) >= 0.0)) {
        throw ValidationError("routing(" + std::to_string(i) + "," + std::to_string(j) +
                              ") must be nonnegative");
      }
      sum += routing(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ValidationError("routing row " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", not 1");
    }
  }
  // Irreducible iff every queue reaches every other; check reachability from 0
  // forwards and backwards.
  for (bool transpose : {false, true}) {
    std::vector<bool> seen(kk, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (int b = 0; b < n; ++b) {
        const double p = transpose ? routing(b, a) : routing(a, b);
        if (p > 0.0 && !seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = true;
          stack.push_back(b);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw ValidationError("routing matrix is not irreducible");
    }
  }
}

std::string_view to_string(RoutingScheme s) {
  switch (s) {
    case RoutingScheme::Cyclic: return "cyclic";
    case RoutingScheme::Lop: return "lop";
    case RoutingScheme::Symmetric: return "symmetric";
  }
  return "?";
}

RoutingScheme parse_routing_scheme(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "cyclic") return RoutingScheme::Cyclic;
  if (s == "lop") return RoutingScheme::Lop;
  if (s == "symmetric") return RoutingScheme::Symmetric;
  throw ValidationError("unknown routing scheme '" + std::string(text) +
                        "' (expected cyclic, lop or symmetric)");
}

Eigen::MatrixXd build_routing(RoutingScheme scheme, const std::vector<double>& lambdas) {
  const auto k = static_cast<Eigen::Index>(lambdas.size());
  if (k < 1) throw ValidationError("routing needs at least one queue");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k);
  switch (scheme) {
    case RoutingScheme::Cyclic:
      for (Eigen::Index i = 0; i < k; ++i) p(i, (i + 1) % k) = 1.0;
      break;
    case RoutingScheme::Lop: {
      double total = 0.0;
      for (double l : lambdas) total += l;
      if (!(total > 0.0)) throw ValidationError("LOP routing needs positive arrival rates");
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) p(i, j) = lambdas[static_cast<std::size_t>(j)] / total;
      }
      break;
    }
    case RoutingScheme::Symmetric:
      p.setConstant(1.0 / static_cast<double>(k));
      break;
  }
  return p;
}

Eigen::VectorXd stationary(const Eigen::MatrixXd& routing) {
  const Eigen::Index k = routing.rows();
  if (k < 1 || routing.cols() != k) throw ValidationError("routing must be a square matrix");
  // pi (P - I) = 0 with one balance equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a = routing.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw NumericError("stationary distribution is not unique (routing matrix is reducible)");
  }
  Eigen::VectorXd pi = lu.solve(rhs);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(pi(i) > 0.0)) {
      throw NumericError("stationary probability of queue " + std::to_string(i) +
                         " is not positive (routing matrix is reducible)");
    }
  }
  return pi;
}

TildeCoefficients tilde_coefficients(const PollingModel& model, Policy policy, Bitmask b, int i,
                                     int j) {
  model.validate(0);
  const int k = model.k();
  if (b >= (Bitmask{1} << k)) throw ValidationError("bitmask has bits beyond k");
  if (i < 0 || i >= k || j < 0 || j >= k) throw ValidationError("queue index out of range");
  const Coefficients c(model, policy);
  TildeCoefficients t;
  t.u_coeff = c.u(b, j, i);
  t.h_coeff = c.h(b, j);
  for (int l = 0; l < k; ++l) {
    t.du.push_back(c.du(b, j, i, l));
    t.dh.push_back(c.dh(b, j, l));
  }
  return t;
}

namespace {

// Unknowns are F_i(b) for b below the all-ones point: index i*(2^k - 1) + b.
BoundaryTable solve_boundary_with(const Coefficients& c, const SolverOptions& options) {
  const int k = c.k();
  const Bitmask full = c.full();
  const Eigen::Index per = full;
  const Eigen::Index n = k * per;

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < k; ++i) {
    for (Bitmask b = 0; b < full; ++b) {
      const Eigen::Index row = i * per + b;
      for (int j = 0; j < k; ++j) {
        const double cij = c.c(i, j);
        if (cij == 0.0) continue;
        const double w = cij * c.u(b, j, i);
        const double h = c.h(b, j);
        m(row, j * per + (b & ~bit(j))) -= w * (1.0 - h);
        const Bitmask b1 = b | bit(j);
        if (b1 == full) {
          r(row) += w * h;
        } else {
          m(row, j * per + b1) -= w * h;
        }
      }
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::VectorXd x = lu.solve(r);

  BoundaryTable t;
  t.k = k;
  t.rcond = lu.rcond();
  t.max_residual = (m * x - r).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(t.max_residual) || t.max_residual > options.residual_tolerance) {
    std::ostringstream msg;
    msg << "boundary system is singular or ill-conditioned (residual " << t.max_residual
        << ", reciprocal condition estimate " << t.rcond << ")";
    throw NumericError(msg.str());
  }

  t.values.assign(static_cast<std::size_t>(k) << k, 1.0);
  for (int i = 0; i < k; ++i) {
    for (Bitmask b = 0; b < full; ++b) {
      const double f = x(i * per + b);
      if (f < -1e-9 || f > 1.0 + 1e-9) {
        std::ostringstream msg;
        msg << "boundary value F_" << i << "(" << b << ") = " << f << " is outside [0, 1]";
        throw NumericError(msg.str());
      }
      t.values[(static_cast<std::size_t>(i) << k) + b] = f;
    }
  }
  for (int i = 0; i < k; ++i) {
    const double a = 1.0 - t.at(i, full & ~bit(i));
    if (!(a > 0.0)) {
      throw NumericError("alpha_" + std::to_string(i) + " is not positive");
    }
    t.alphas.push_back(a);
  }
  return t;
}

DerivativeTable solve_derivatives_with(const Coefficients& c, const BoundaryTable& table) {
  const int k = c.k();
  const Bitmask half = Bitmask{1} << (k - 1);
  const Eigen::Index n = static_cast<Eigen::Index>(k - 1) * half;

  DerivativeTable out;
  out.k = k;
  out.values.assign((static_cast<std::size_t>(k) * k) << k, 0.0);
  auto store = [&](int i, int l, Bitmask b) -> double& {
    return out.values[((static_cast<std::size_t>(i) * k + l) << k) + b];
  };

  // With l fixed, no term changes bit l unless j = l, and the j = l terms
  // contribute known values only, so each slice z_l = 0 / z_l = 1 is its own
  // system in the unknowns dF_j/dz_l (j != l).
  for (int l = 0; l < k; ++l) {
    const Bitmask low = bit(l) - 1;
    auto point = [&](Bitmask m, Bitmask side) {
      return ((m & ~low) << 1) | (side << l) | (m & low);
    };
    auto col = [&](int j, Bitmask b) {
      const Bitmask m = ((b >> (l + 1)) << l) | (b & low);
      return static_cast<Eigen::Index>(j < l ? j : j - 1) * half + m;
    };

    for (Bitmask side = 0; side <= 1; ++side) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      // Known part of row (i, b) plus its coefficients on the unknowns; the
      // i = l rows are not unknowns and are evaluated after the solve.
      auto row_terms = [&](int i, Bitmask b, auto&& on_unknown) {
        double known = 0.0;
        for (int j = 0; j < k; ++j) {
          const double cij = c.c(i, j);
          if (cij == 0.0) continue;
          const double u = c.u(b, j, i);
          const double h = c.h(b, j);
          const Bitmask b0 = b & ~bit(j);
          const Bitmask b1 = b | bit(j);
          const double f0 = table.at(j, b0);
          const double f1 = table.at(j, b1);
          known += cij * (c.du(b, j, i, l) * ((1.0 - h) * f0 + h * f1) +
                          u * c.dh(b, j, l) * (f1 - f0));
          if (j != l) {
            on_unknown(j, b0, cij * u * (1.0 - h));
            on_unknown(j, b1, cij * u * h);
          }
        }
        return known;
      };

      for (int i = 0; i < k; ++i) {
        if (i == l) continue;
        for (Bitmask m = 0; m < half; ++m) {
          const Bitmask b = point(m, side);
          const Eigen::Index row = col(i, b);
          rhs(row) = row_terms(i, b, [&](int j, Bitmask bj, double w) { a(row, col(j, bj)) -= w; });
        }
      }
      Eigen::VectorXd x(n);
      if (n > 0) {  // k = 1 leaves only the explicit row
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        x = lu.solve(rhs);
        const double residual = (a * x - rhs).lpNorm<Eigen::Infinity>();
        if (!std::isfinite(residual) ||
            residual > 1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
          std::ostringstream msg;
          msg << "derivative system for z_" << l << " is singular (residual " << residual
              << ", reciprocal condition estimate " << lu.rcond() << ")";
          throw NumericError(msg.str());
        }
      }

      for (Bitmask m = 0; m < half; ++m) {
        const Bitmask b = point(m, side);
        for (int j = 0; j < k; ++j) {
          if (j != l) store(j, l, b) = x(col(j, b));
        }
        double acc = 0.0;
        const double known =
            row_terms(l, b, [&](int j, Bitmask bj, double w) { acc += w * x(col(j, bj)); });
        store(l, l, b) = known + acc;
      }
    }
  }
  return out;
}

std::vector<double> effective_service_means(const PollingModel& model, Policy policy) {
  std::vector<double> h;
  for (int j = 0; j < model.k(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const DistributionSpec& s = model.services[ju];
    if (policy == Policy::CBSP) {
      // Mean time to complete one packet when own arrivals restart service.
      const double lj = model.lambdas[ju];
      h.push_back(lst_complement(s, lj) / (lj * lst_derivatives(s, lj)[0]));
    } else {
      h.push_back(moment(s, 1));
    }
  }
  return h;
}

}  // namespace

BoundaryTable solve_boundary(const PollingModel& model, Policy policy,
                             const SolverOptions& options) {
  check_cap(model, options);
  return solve_boundary_with(Coefficients(model, policy), options);
}

std::vector<double> gamma_rates(const PollingModel& model, Policy policy,
                                const BoundaryTable& table, const Eigen::VectorXd& pi) {
  const int k = model.k();
  const std::vector<double> h = effective_service_means(model, policy);
  double cycle = 0.0;
  for (int j = 0; j < k; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    double switching = 0.0;
    for (int l = 0; l < k; ++l) {
      switching += model.routing(j, l) * moment(model.switchovers[ju][static_cast<std::size_t>(l)], 1);
    }
    cycle += pi(j) * (table.alphas[ju] * h[ju] + switching);
  }
  std::vector<double> g;
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    double gi = model.lambdas[iu] / pi(i) * cycle;
    if (policy != Policy::BRS) gi -= model.lambdas[iu] * table.alphas[iu] * h[iu];
    g.push_back(gi);
  }
  return g;
}

std::vector<double> mean_waiting(const BoundaryTable& table, const std::vector<double>& gammas,
                                 const std::vector<double>& lambdas) {
  std::vector<double> w;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double a = table.alphas[i];
    if (!(a > 0.0)) throw NumericError("alpha_" + std::to_string(i) + " is not positive");
    const double ew = gammas[i] / (lambdas[i] * a) - 1.0 / lambdas[i];
    if (ew < -1e-9 / lambdas[i]) {
      throw NumericError("mean waiting time of queue " + std::to_string(i) + " is negative");
    }
    w.push_back(std::max(ew, 0.0));
  }
  return w;
}

DerivativeTable solve_derivatives(const PollingModel& model, Policy policy,
                                  const BoundaryTable& table, const SolverOptions& options) {
  check_cap(model, options);
  if (table.k != model.k()) throw ValidationError("boundary table does not match the model");
  return solve_derivatives_with(Coefficients(model, policy), table);
}

PollingPaoi paoi(const PollingModel& model, Policy policy, const SolverOptions& options) {
  check_cap(model, options);
  const Coefficients c(model, policy);
  const BoundaryTable table = solve_boundary_with(c, options);
  const DerivativeTable d = solve_derivatives_with(c, table);
  const Eigen::VectorXd pi = stationary(model.routing);

  PollingPaoi out;
  out.alphas = table.alphas;
  out.gammas = gamma_rates(model, policy, table, pi);
  out.mean_waiting = mean_waiting(table, out.gammas, model.lambdas);
  out.boundary_residual = table.max_residual;
  out.boundary_rcond = table.rcond;

  const int k = model.k();
  const Bitmask full = c.full();
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double g_dual = d.at(i, i, full);
    out.gamma_dual_path_rel_diff = std::max(
        out.gamma_dual_path_rel_diff, std::abs(g_dual - out.gammas[iu]) / std::abs(out.gammas[iu]));
    const double w = d.at(i, i, full & ~bit(i)) / table.alphas[iu];
    out.w_at_lambda.push_back(w);
    out.per_queue.push_back(paoi_from_waiting(model.lambdas[iu], model.services[iu], policy,
                                              out.mean_waiting[iu], w));
    out.average += out.per_queue.back() / k;
  }
  if (!(out.gamma_dual_path_rel_diff <= 1e-6)) {
    throw NumericError("gamma rates disagree with the derivative system (relative difference " +
                       std::to_string(out.gamma_dual_path_rel_diff) + ")");
  }
  return out;
}

}  // namespace agefresh
