#pragma once

#include <optional>
#include <vector>

#include "agefresh/analytic_iid.hpp"

namespace agefresh {

/// PAoI(CBS) - PAoI(BRS); nonnegative for i.i.d. vacations.
double paoi_gap_cbs_minus_brs(const IidVacationModel& model);

struct DominanceGaps {
  double aoi_gap = 0.0;
  double paoi_gap = 0.0;
};

/// CBS minus CBS-P gaps. Only defined for exponential service.
DominanceGaps exp_service_dominance(const IidVacationModel& model);

struct SufficientCondition {
  /// Every grid point satisfies E[H] >= (1 - H*(s)) / (s H*(s)) up to rounding.
  bool holds_on_grid = false;
  /// Minimum of E[H] - (1 - H*(s)) / (s H*(s)) over the grid.
  double margin = 0.0;
  /// Whether the condition holds for all s > 0, where this is known in closed
  /// form (exponential: always, with equality; gamma: iff shape <= 1).
  std::optional<bool> exact;
};

/// Throws ValidationError on an empty grid or a nonpositive grid point.
SufficientCondition preemption_sufficient_condition(const DistributionSpec& service,
                                                    const std::vector<double>& s_grid);

/// V*'(lambda) / (1 - V*(lambda)) + 1/lambda; nonnegative for every LST.
double lemma2_margin(const DistributionSpec& vacation, double lambda);

}  // namespace agefresh
