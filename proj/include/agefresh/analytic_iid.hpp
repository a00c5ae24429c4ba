#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agefresh/distributions.hpp"
#include "agefresh/jet.hpp"

namespace agefresh {

enum class Policy { CBS, BRS, CBSP };

std::string_view to_string(Policy p);
/// Accepts cbs, brs, cbsp and cbs-p in any case.
Policy parse_policy(std::string_view text);

struct IidVacationModel {
  double lambda = 1.0;
  DistributionSpec service = DistributionSpec::exponential(1.0);
  DistributionSpec vacation = DistributionSpec::exponential(1.0);

  /// Throws ValidationError on a nonpositive rate or a det(0) service/vacation.
  void validate() const;
};

/// The LST of a nonnegative random variable, differentiable twice in s.
class LstEvaluator {
 public:
  using Fn = std::function<Jet(const Jet&)>;

  LstEvaluator() = default;
  explicit LstEvaluator(Fn fn) : fn_(std::move(fn)) {}

  Jet operator()(const Jet& s) const { return fn_(s); }
  /// Same contract as lst(): s >= 0, order in {0,1,2}.
  double operator()(LstQuery q) const;

  double mean() const;
  double second_moment() const;
  double variance() const;

 private:
  Fn fn_;
};

struct ComponentLsts {
  Policy policy = Policy::CBS;
  LstEvaluator W;  // occupied-buffer span
  LstEvaluator B;  // contiguous vacation span
  LstEvaluator G;  // for CBS-P this is the CBS G, used inside D
  std::optional<LstEvaluator> I;  // CBS, BRS
  std::optional<LstEvaluator> L;  // CBS-P
  std::optional<LstEvaluator> D;  // CBS-P
};

struct ComponentMoments {
  std::string name;
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
};

struct FreshnessMetrics {
  double aoi = 0.0;
  double paoi = 0.0;
  double var_peak = 0.0;
  /// Moments of the pieces the peak age decomposes into (G, I, H or L, B, D).
  std::vector<ComponentMoments> breakdown;
  /// Largest relative disagreement with the closed forms; 0 if not computed.
  double closed_form_rel_diff = 0.0;
};

/// Direct closed forms. The variance is only available in closed
/// form for CBS.
struct ClosedFormMetrics {
  double aoi = 0.0;
  double paoi = 0.0;
  std::optional<double> var_peak;
};

LstEvaluator vacation_block_lst(const IidVacationModel& model);

ComponentLsts components(const IidVacationModel& model, Policy policy);

/// Component-moment route, cross-checked against metrics_closed_form. Throws
/// NumericError if the two disagree by more than 1e-7 relative.
FreshnessMetrics metrics(const IidVacationModel& model, Policy policy);

/// Component-moment route only.
FreshnessMetrics component_metrics(const IidVacationModel& model, Policy policy);

ClosedFormMetrics metrics_closed_form(const IidVacationModel& model, Policy policy);

enum class NoVacationSystem { MG11, MG12Star, MG11Preemptive };

std::string_view to_string(NoVacationSystem s);
NoVacationSystem parse_no_vacation_system(std::string_view text);

/// Closed forms for the systems without vacations (cross-checked against
/// their own component decomposition, like metrics()).
FreshnessMetrics metrics_no_vacation(double lambda, const DistributionSpec& service,
                                     NoVacationSystem system);

/// PAoI from the mean waiting time and W*(lambda); shared with the polling solver.
double paoi_from_waiting(double lambda, const DistributionSpec& service, Policy policy,
                         double mean_waiting, double w_at_lambda);

}  // namespace agefresh
