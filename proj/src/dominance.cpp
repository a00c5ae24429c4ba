#include "agefresh/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "agefresh/error.hpp"

namespace agefresh {

double paoi_gap_cbs_minus_brs(const IidVacationModel& model) {
  return metrics(model, Policy::CBS).paoi - metrics(model, Policy::BRS).paoi;
}

DominanceGaps exp_service_dominance(const IidVacationModel& model) {
  if (!model.service.is_exponential()) {
    throw ValidationError("CBS versus CBS-P dominance is only established for exponential service");
  }
  const FreshnessMetrics cbs = metrics(model, Policy::CBS);
  const FreshnessMetrics cbsp = metrics(model, Policy::CBSP);
  return {cbs.aoi - cbsp.aoi, cbs.paoi - cbsp.paoi};
}

SufficientCondition preemption_sufficient_condition(const DistributionSpec& service,
                                                    const std::vector<double>& s_grid) {
  if (s_grid.empty()) throw ValidationError("s grid must not be empty");
  const double mean = moment(service, 1);
  SufficientCondition out;
  out.margin = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("s grid points must be positive");
    const double h = lst_derivatives(service, s)[0];
    out.margin = std::min(out.margin, mean - lst_complement(service, s) / (s * h));
  }
  if (const auto* g = std::get_if<Gamma>(&service.kind())) {
    out.exact = g->shape <= 1.0;
  } else if (service.is_exponential()) {
    // (1 - H*(s)) / (s H*(s)) equals E[H] identically.
    out.exact = true;
    out.margin = 0.0;
  }
  out.holds_on_grid = out.margin >= -1e-12 * mean;
  return out;
}

double lemma2_margin(const DistributionSpec& vacation, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
  if (vacation.is_degenerate_zero()) throw ValidationError("vacation det(0) is not allowed");
  return lst_derivatives(vacation, lambda)[1] / lst_complement(vacation, lambda) + 1.0 / lambda;
}

}  // namespace agefresh
