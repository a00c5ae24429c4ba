#include "agefresh/analytic_iid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "agefresh/error.hpp"
#include "divided_difference.hpp"

namespace agefresh {

namespace {

std::string lowered(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

ComponentMoments moments_of(std::string name, const LstEvaluator& x) {
  return {std::move(name), x.mean(), x.second_moment(), x.variance()};
}

LstEvaluator distribution_lst(const DistributionSpec& d) {
  return LstEvaluator([d](const Jet& s) { return lst_jet(d, s); });
}

// Scalar values of H and V that the closed forms are written in.
struct Primitives {
  double lambda;
  double h1_0, h2_0;        // H*'(0), H*''(0)
  double h_l, h1_l, h2_l;   // H* and derivatives at lambda
  double v1_0, v2_0;        // V*'(0), V*''(0)
  double v_l, v1_l, v2_l;   // V* and derivatives at lambda
  double c_l;               // 1 - V*(lambda)
};

Primitives primitives(const IidVacationModel& m) {
  const auto h0 = lst_derivatives(m.service, 0.0);
  const auto hl = lst_derivatives(m.service, m.lambda);
  const auto v0 = lst_derivatives(m.vacation, 0.0);
  const auto vl = lst_derivatives(m.vacation, m.lambda);
  return {m.lambda, h0[1], h0[2], hl[0], hl[1], hl[2],
          v0[1],    v0[2], vl[0], vl[1], vl[2], lst_complement(m.vacation, m.lambda)};
}

detail::DividedDifference vacation_quotient(const DistributionSpec& v, double lambda) {
  return detail::DividedDifference([v](double x) { return lst_derivatives(v, x); }, lambda,
                                   lst_taylor(v, lambda, detail::DividedDifference::kTerms));
}

}  // namespace

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::CBS: return "cbs";
    case Policy::BRS: return "brs";
    case Policy::CBSP: return "cbsp";
  }
  return "?";
}

Policy parse_policy(std::string_view text) {
  const std::string s = lowered(text);
  if (s == "cbs") return Policy::CBS;
  if (s == "brs") return Policy::BRS;
  if (s == "cbsp" || s == "cbs-p") return Policy::CBSP;
  throw ValidationError("unknown policy '" + std::string(text) + "' (expected cbs, brs or cbsp)");
}

void IidVacationModel::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be a positive finite number");
  }
  if (service.is_degenerate_zero()) throw ValidationError("service time det(0) is not allowed");
  if (vacation.is_degenerate_zero()) throw ValidationError("vacation time det(0) is not allowed");
}

double LstEvaluator::operator()(LstQuery q) const {
  if (!(q.s >= 0.0) || !std::isfinite(q.s)) {
    throw ValidationError("LST argument must be a nonnegative finite number");
  }
  if (q.order < 0 || q.order > 2) throw ValidationError("LST derivative order must be 0, 1 or 2");
  const Jet j = fn_(Jet::variable(q.s));
  return q.order == 0 ? j.value : (q.order == 1 ? j.d1 : j.d2);
}

double LstEvaluator::mean() const { return -fn_(Jet::variable(0.0)).d1; }
double LstEvaluator::second_moment() const { return fn_(Jet::variable(0.0)).d2; }
double LstEvaluator::variance() const {
  const Jet j = fn_(Jet::variable(0.0));
  return j.d2 - j.d1 * j.d1;
}

LstEvaluator vacation_block_lst(const IidVacationModel& model) {
  model.validate();
  const double lambda = model.lambda;
  const DistributionSpec v = model.vacation;
  // (V(s) - V(s+l)) / (1 - V(s+l)) written with complements so that the
  // numerator does not cancel for small s.
  return LstEvaluator([v, lambda](const Jet& s) {
    const Jet c_shift = lst_complement_jet(v, s + lambda);
    return (c_shift - lst_complement_jet(v, s)) / c_shift;
  });
}

ComponentLsts components(const IidVacationModel& model, Policy policy) {
  model.validate();
  const double lambda = model.lambda;
  const DistributionSpec h = model.service;
  const DistributionSpec v = model.vacation;
  const double c_l = lst_complement(v, lambda);

  ComponentLsts out;
  out.policy = policy;
  out.B = vacation_block_lst(model);

  const auto qv = vacation_quotient(v, lambda);
  if (policy == Policy::BRS) {
    const double vh_l = lst_derivatives(v, lambda)[0] * lst_derivatives(h, lambda)[0];
    const detail::DividedDifference qvh(
        [v, h](double x) {
          const auto a = lst_derivatives(v, x);
          const auto b = lst_derivatives(h, x);
          return std::array<double, 3>{a[0] * b[0], a[1] * b[0] + a[0] * b[1],
                                       a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2]};
        },
        lambda,
        detail::cauchy_product(lst_taylor(v, lambda, detail::DividedDifference::kTerms),
                               lst_taylor(h, lambda, detail::DividedDifference::kTerms)));
    out.W = LstEvaluator([qv, qvh, lambda, vh_l, c_l](const Jet& s) {
      return -lambda * qvh(s) - (lambda * vh_l / c_l) * qv(s);
    });
    out.G = LstEvaluator([v, h, lambda, vh_l, c_l](const Jet& s) {
      const Jet x = s + lambda;
      return (lambda / x) *
             (1.0 + (vh_l / c_l) * lst_complement_jet(v, x) - lst_jet(v, x) * lst_jet(h, x));
    });
    out.I = LstEvaluator([v, h, lambda](const Jet& s) {
      const Jet x = s + lambda;
      return lst_jet(h, s) * lst_jet(v, s) -
             lst_jet(h, x) * lst_jet(v, x) * lst_complement_jet(v, s) / lst_complement_jet(v, x);
    });
    return out;
  }

  // CBS and CBS-P share the vacation-period structure.
  const LstEvaluator w([qv, lambda, c_l](const Jet& s) { return (-lambda / c_l) * qv(s); });
  out.W = w;
  out.G = LstEvaluator([w, lambda](const Jet& s) {
    const Jet x = s + lambda;
    return lambda / x + (s / x) * w(x);
  });

  if (policy == Policy::CBS) {
    const LstEvaluator b = out.B;
    out.I = LstEvaluator([h, b](const Jet& s) { return lst_jet(h, s) * b(s); });
    return out;
  }

  const double h_l = lst_derivatives(h, lambda)[0];
  out.L = LstEvaluator([h, lambda](const Jet& s) {
    const Jet x = s + lambda;
    const Jet hx = lst_jet(h, x);
    return hx * x / (s + lambda * hx);
  });
  const LstEvaluator g = out.G;
  out.D = LstEvaluator([h, g, lambda, h_l](const Jet& s) {
    return lst_jet(h, s + lambda) * (g(s) + (1.0 / h_l - 1.0));
  });
  return out;
}

FreshnessMetrics component_metrics(const IidVacationModel& model, Policy policy) {
  const ComponentLsts c = components(model, policy);
  FreshnessMetrics m;
  if (policy == Policy::CBSP) {
    const auto l = moments_of("L", *c.L);
    const auto b = moments_of("B", c.B);
    const auto d = moments_of("D", *c.D);
    m.paoi = l.mean + b.mean + d.mean;
    m.aoi = (l.second_moment + 2.0 * l.mean * b.mean + b.second_moment) /
                (2.0 * (l.mean + b.mean)) +
            d.mean;
    m.var_peak = l.variance + b.variance + d.variance;
    m.breakdown = {l, b, d};
    return m;
  }
  const auto g = moments_of("G", c.G);
  const auto i = moments_of("I", *c.I);
  const auto h = moments_of("H", distribution_lst(model.service));
  m.aoi = i.second_moment / (2.0 * i.mean) + g.mean + h.mean;
  m.paoi = g.mean + i.mean + h.mean;
  m.var_peak = g.variance + i.variance + h.variance;
  m.breakdown = {g, i, h};
  return m;
}

ClosedFormMetrics metrics_closed_form(const IidVacationModel& model, Policy policy) {
  model.validate();
  const Primitives p = primitives(model);
  const double l = p.lambda;
  ClosedFormMetrics t;
  switch (policy) {
    case Policy::CBS: {
      const double a = p.v1_0 / p.c_l;
      t.aoi = -1.0 / (2.0 * (p.h1_0 + a)) *
                  (p.h2_0 + 2.0 * p.h1_0 * a + 2.0 * a * p.v1_l / p.c_l + p.v2_0 / p.c_l) +
              1.0 / l + p.v1_l / p.c_l - p.h1_0;
      t.paoi = 1.0 / l + (p.v1_l - p.v1_0) / p.c_l - 2.0 * p.h1_0;
      const double r = (p.v1_l - p.v1_0) / p.c_l;
      t.var_peak = (p.v2_0 - p.v2_l) / p.c_l - r * r + 1.0 / (l * l) + 2.0 * p.h2_0 -
                   2.0 * p.h1_0 * p.h1_0;
      return t;
    }
    case Policy::BRS: {
      const DistributionSpec h = model.service;
      const DistributionSpec v = model.vacation;
      const Jet s = Jet::variable(0.0);
      const Jet x = s + l;
      const Jet i = lst_jet(h, s) * lst_jet(v, s) -
                    lst_jet(h, x) * lst_jet(v, x) * lst_complement_jet(v, s) /
                        lst_complement_jet(v, x);
      const double tail = p.v1_l * p.h_l + p.v_l * p.h1_l;
      t.aoi = -i.d2 / (2.0 * i.d1) + tail + p.v1_l / p.c_l * p.v_l * p.h_l + 1.0 / l - p.h1_0;
      t.paoi = -2.0 * p.h1_0 - p.v1_0 + 1.0 / l + tail +
               p.h_l * p.v_l / p.c_l * (p.v1_l - p.v1_0);
      return t;
    }
    case Policy::CBSP: {
      const double a = p.v1_0 / p.c_l;
      const double e = (1.0 - p.h_l) / (l * p.h_l);
      t.aoi = 1.0 / (2.0 * (-a + e)) *
                  (p.v2_0 / p.c_l + 2.0 * a * p.v1_l / p.c_l - 2.0 * a * e +
                   2.0 / (l * p.h_l * p.h_l) * (1.0 / l - p.h_l / l + p.h1_l)) -
              p.h1_l / p.h_l + p.h_l * (1.0 / l + p.v1_l / p.c_l);
      t.paoi = (1.0 - p.h_l - l * p.h1_l + p.h_l * p.h_l) / (l * p.h_l) +
               (p.h_l * p.v1_l - p.v1_0) / p.c_l;
      return t;
    }
  }
  return t;
}

FreshnessMetrics metrics(const IidVacationModel& model, Policy policy) {
  FreshnessMetrics m = component_metrics(model, policy);
  const ClosedFormMetrics t = metrics_closed_form(model, policy);
  double diff = std::max(rel_diff(m.aoi, t.aoi), rel_diff(m.paoi, t.paoi));
  if (t.var_peak) diff = std::max(diff, rel_diff(m.var_peak, *t.var_peak));
  m.closed_form_rel_diff = diff;
  if (!(diff <= 1e-7)) {
    throw NumericError("closed-form and component routes disagree for " +
                       std::string(to_string(policy)) + " (relative difference " +
                       std::to_string(diff) + ")");
  }
  return m;
}

std::string_view to_string(NoVacationSystem s) {
  switch (s) {
    case NoVacationSystem::MG11: return "M/G/1/1";
    case NoVacationSystem::MG12Star: return "M/G/1/2*";
    case NoVacationSystem::MG11Preemptive: return "M/G/1/1/preemptive";
  }
  return "?";
}

NoVacationSystem parse_no_vacation_system(std::string_view text) {
  std::string s;
  for (char ch : lowered(text)) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '*') s.push_back(ch);
  }
  if (s == "mg11") return NoVacationSystem::MG11;
  if (s == "mg12*" || s == "mg12star") return NoVacationSystem::MG12Star;
  if (s == "mg11preemptive" || s == "mg11p") return NoVacationSystem::MG11Preemptive;
  throw ValidationError("unknown system '" + std::string(text) +
                        "' (expected M/G/1/1, M/G/1/2* or M/G/1/1/preemptive)");
}

namespace {

// Closed forms for the systems without vacations, in H*'s values only.
FreshnessMetrics no_vacation_closed_form(double l, const DistributionSpec& service,
                                         NoVacationSystem system) {
  const auto h0 = lst_derivatives(service, 0.0);
  const auto hl = lst_derivatives(service, l);
  const double h1_0 = h0[1], h2_0 = h0[2];
  const double h_l = hl[0], h1_l = hl[1], h2_l = hl[2];
  FreshnessMetrics m;
  switch (system) {
    case NoVacationSystem::MG11:
      m.aoi = (2.0 / (l * l) - 2.0 * h1_0 / l + h2_0) / (2.0 * (1.0 / l - h1_0)) - h1_0;
      m.paoi = 1.0 / l - 2.0 * h1_0;
      m.var_peak = 1.0 / (l * l) + 2.0 * h2_0 - 2.0 * h1_0 * h1_0;
      break;
    case NoVacationSystem::MG12Star:
      m.aoi = (h2_0 / 2.0 + h_l / (l * l) - h1_l / l) / (-h1_0 + h_l / l) + 1.0 / l - h_l / l +
              h1_l - h1_0;
      m.paoi = -2.0 * h1_0 + 1.0 / l + h1_l;
      m.var_peak = 2.0 * h2_0 - 2.0 * h1_0 * h1_0 + 2.0 * h_l * (1.0 - h_l) / (l * l) +
                   2.0 * h_l / l * (h1_0 + h1_l) + 1.0 / (l * l) - h2_l - 2.0 / l * h1_l -
                   h1_l * h1_l;
      break;
    case NoVacationSystem::MG11Preemptive:
      m.aoi = 1.0 / (l * h_l);
      m.paoi = -h1_l / h_l + 1.0 / (l * h_l);
      m.var_peak = h2_l / h_l - h1_l * h1_l / (h_l * h_l) + 1.0 / (l * l * h_l * h_l) +
                   2.0 * h1_l / (l * h_l * h_l);
      break;
  }
  return m;
}

// The same quantities from the decomposition of each peak into independent pieces.
FreshnessMetrics no_vacation_components(double l, const DistributionSpec& h,
                                        NoVacationSystem system) {
  const LstEvaluator t([l](const Jet& s) { return l / (s + l); });
  const LstEvaluator hs = distribution_lst(h);
  const double h_l = lst_derivatives(h, l)[0];
  FreshnessMetrics m;
  switch (system) {
    case NoVacationSystem::MG11: {
      const LstEvaluator i([h, l](const Jet& s) { return l / (s + l) * lst_jet(h, s); });
      const LstEvaluator a([h, l](const Jet& s) {
        const Jet hs = lst_jet(h, s);
        return l / (s + l) * hs * hs;
      });
      const auto im = moments_of("I", i);
      const auto am = moments_of("A", a);
      m.aoi = im.second_moment / (2.0 * im.mean) + hs.mean();
      m.paoi = am.mean;
      m.var_peak = am.variance;
      m.breakdown = {moments_of("T", t), moments_of("H", hs), moments_of("H", hs)};
      break;
    }
    case NoVacationSystem::MG12Star: {
      const LstEvaluator i([h, l](const Jet& s) {
        return lst_jet(h, s) - s / (s + l) * lst_jet(h, s + l);
      });
      const LstEvaluator g([h, l, h_l](const Jet& s) {
        return l / (s + l) * (1.0 - lst_jet(h, s + l)) + h_l;
      });
      const auto gm = moments_of("G", g);
      const auto im = moments_of("I", i);
      const auto hm = moments_of("H", hs);
      m.aoi = im.second_moment / (2.0 * im.mean) + gm.mean + hm.mean;
      m.paoi = gm.mean + im.mean + hm.mean;
      m.var_peak = gm.variance + im.variance + hm.variance;
      m.breakdown = {gm, im, hm};
      break;
    }
    case NoVacationSystem::MG11Preemptive: {
      const LstEvaluator lp([h, l](const Jet& s) {
        const Jet x = s + l;
        const Jet hx = lst_jet(h, x);
        return hx * x / (s + l * hx);
      });
      const LstEvaluator d([h, l, h_l](const Jet& s) { return lst_jet(h, s + l) / h_l; });
      const auto lm = moments_of("L", lp);
      const auto tm = moments_of("T", t);
      const auto dm = moments_of("D", d);
      m.aoi = (lm.second_moment + 2.0 * lm.mean * tm.mean + tm.second_moment) /
                  (2.0 * (lm.mean + tm.mean)) +
              dm.mean;
      m.paoi = lm.mean + tm.mean + dm.mean;
      m.var_peak = lm.variance + tm.variance + dm.variance;
      m.breakdown = {lm, tm, dm};
      break;
    }
  }
  return m;
}

}  // namespace

FreshnessMetrics metrics_no_vacation(double lambda, const DistributionSpec& service,
                                     NoVacationSystem system) {
  IidVacationModel{lambda, service, DistributionSpec::exponential(1.0)}.validate();
  FreshnessMetrics m = no_vacation_closed_form(lambda, service, system);
  const FreshnessMetrics c = no_vacation_components(lambda, service, system);
  m.breakdown = c.breakdown;
  m.closed_form_rel_diff = std::max(
      {rel_diff(m.aoi, c.aoi), rel_diff(m.paoi, c.paoi), rel_diff(m.var_peak, c.var_peak)});
  if (!(m.closed_form_rel_diff <= 1e-7)) {
    throw NumericError("no-vacation closed form and component route disagree for " +
                       std::string(to_string(system)));
  }
  return m;
}

double paoi_from_waiting(double lambda, const DistributionSpec& service, Policy policy,
                         double mean_waiting, double w_at_lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!(mean_waiting >= 0.0)) throw ValidationError("mean waiting time must be nonnegative");
  // A hair of slack above 1 absorbs rounding in values computed as 1 - tiny.
  if (!(w_at_lambda > 0.0 && w_at_lambda <= 1.0 + 1e-12)) {
    throw ValidationError("W*(lambda) must lie in (0, 1]");
  }
  const double eh = moment(service, 1);
  const double base = -w_at_lambda / lambda + 2.0 / lambda + mean_waiting;
  switch (policy) {
    case Policy::CBS: return base + 2.0 * eh;
    case Policy::BRS: return base + eh;
    case Policy::CBSP: {
      const auto hl = lst_derivatives(service, lambda);
      return -hl[1] / hl[0] + hl[0] * (1.0 - w_at_lambda) / lambda + mean_waiting +
             1.0 / (lambda * hl[0]);
    }
  }
  return base;
}

}  // namespace agefresh
