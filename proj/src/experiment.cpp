#include "agefresh/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "agefresh/dominance.hpp"
#include "agefresh/error.hpp"
#include "parallel.hpp"

namespace agefresh {

using nlohmann::json;

namespace {

std::string lowered(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

// Re-raises a ValidationError from a nested parser with the field path prefixed.
template <class Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
}

void reject_unknown_keys(const json& j, const std::string& path, std::set<std::string> known) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  return j.get<double>();
}

std::uint64_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(path, "must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

DistributionSpec distribution(const json& j, const std::string& path) {
  return at_path(path, [&] { return parse_distribution(text(j, path)); });
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

DistributionSpec with_field(const DistributionSpec& d, std::string_view field, double v) {
  const std::string f(field);
  if (d.is_exponential() && f == "rate") return DistributionSpec::exponential(v);
  if (const auto* g = std::get_if<Gamma>(&d.kind())) {
    if (f == "shape") return DistributionSpec::gamma(v, g->scale);
    if (f == "scale") return DistributionSpec::gamma(g->shape, v);
  }
  if (d.is_deterministic() && f == "value") return DistributionSpec::deterministic(v);
  throw ValidationError(to_string(d) + " has no parameter '" + f + "'");
}

// The model after setting the sweep parameter to v.
IidVacationModel swept(IidVacationModel m, const std::string& param, double v) {
  if (param == "lambda") {
    m.lambda = v;
  } else if (param.rfind("service.", 0) == 0) {
    m.service = with_field(m.service, param.substr(8), v);
  } else if (param.rfind("vacation.", 0) == 0) {
    m.vacation = with_field(m.vacation, param.substr(9), v);
  } else {
    throw ValidationError("unknown parameter '" + param +
                          "' (expected lambda, service.<field> or vacation.<field>)");
  }
  m.validate();
  return m;
}

PollingSpec swept(PollingSpec p, const std::string& param, double v) {
  if (param == "load") {
    if (!(v > 0.0)) throw ValidationError("load must be positive");
    double total = 0.0;
    for (double l : p.lambdas) total += l;
    for (double& l : p.lambdas) l *= v / total;
  } else if (param.rfind("switchover.", 0) == 0) {
    for (auto& row : p.switchovers) {
      for (auto& u : row) u = with_field(u, param.substr(11), v);
    }
  } else {
    throw ValidationError("unknown parameter '" + param +
                          "' (expected load or switchover.<field>)");
  }
  return p;
}

ResultRow metrics_row(Policy p, std::string mode, const FreshnessMetrics& m) {
  ResultRow r;
  r.policy = p;
  r.label = std::string(to_string(p));
  r.mode = std::move(mode);
  r.aoi = m.aoi;
  r.paoi = m.paoi;
  r.var_peak = m.var_peak;
  return r;
}

ResultRow sim_row(Policy p, const SimEstimates& e) {
  ResultRow r;
  r.policy = p;
  r.label = std::string(to_string(p));
  r.mode = "simulate";
  r.aoi = e.aoi.mean;
  r.paoi = e.paoi.mean;
  r.var_peak = e.var_peak.mean;
  r.ci_aoi = e.aoi.half_width_95;
  r.ci_paoi = e.paoi.half_width_95;
  r.ci_var = e.var_peak.half_width_95;
  return r;
}

std::vector<ResultRow> polling_rows(Policy p, const PollingPaoi& res) {
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < res.per_queue.size(); ++i) {
    ResultRow r;
    r.policy = p;
    r.label = std::string(to_string(p));
    r.mode = "polling";
    r.queue = std::to_string(i + 1);
    r.paoi = res.per_queue[i];
    rows.push_back(r);
  }
  ResultRow avg;
  avg.policy = p;
  avg.label = std::string(to_string(p));
  avg.mode = "polling";
  avg.queue = "avg";
  avg.paoi = res.average;
  rows.push_back(avg);
  return rows;
}

NoVacationSystem system_for(Policy p) {
  switch (p) {
    case Policy::CBS: return NoVacationSystem::MG11;
    case Policy::BRS: return NoVacationSystem::MG12Star;
    case Policy::CBSP: return NoVacationSystem::MG11Preemptive;
  }
  return NoVacationSystem::MG11;
}

double rel_err(double estimate, double exact) { return std::abs(estimate - exact) / std::abs(exact); }

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Analytic: return "analytic";
    case Mode::NoVacation: return "no_vacation";
    case Mode::Polling: return "polling";
    case Mode::Simulate: return "simulate";
    case Mode::Sweep: return "sweep";
    case Mode::Verify: return "verify";
    case Mode::Dominance: return "dominance";
  }
  return "?";
}

Mode parse_mode(std::string_view t) {
  std::string s = lowered(t);
  std::replace(s.begin(), s.end(), '-', '_');
  for (Mode m : {Mode::Analytic, Mode::NoVacation, Mode::Polling, Mode::Simulate, Mode::Sweep,
                 Mode::Verify, Mode::Dominance}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown mode '" + std::string(t) + "'");
}

PollingModel PollingSpec::build() const {
  PollingModel m;
  m.lambdas = lambdas;
  m.services = services;
  m.switchovers = switchovers;
  if (scheme) {
    m.routing = build_routing(*scheme, lambdas);
  } else {
    const auto k = static_cast<Eigen::Index>(routing.size());
    m.routing = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (routing[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(k)) {
        throw ValidationError("model.routing[" + std::to_string(i) + "]: expected " +
                              std::to_string(k) + " entries");
      }
      for (Eigen::Index j = 0; j < k; ++j) m.routing(i, j) = routing[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

SimConfig SimSettings::to_config() const {
  SimConfig c;
  c.peaks_target = peaks;
  c.replications = replications;
  c.seed = seed;
  c.batch_count = batch_count;
  c.warmup_peaks = warmup;
  return c;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  auto same_iid = [](const std::optional<IidVacationModel>& a,
                     const std::optional<IidVacationModel>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || (a->lambda == b->lambda && a->service == b->service && a->vacation == b->vacation);
  };
  return schema_version == o.schema_version && mode == o.mode && same_iid(iid, o.iid) &&
         polling == o.polling && policies == o.policies && sweep == o.sweep &&
         output == o.output && sim == o.sim;
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(schema_version));
  }
  if (iid.has_value() == polling.has_value()) fail("model", "exactly one model is required");
  if (policies.empty()) fail("policies", "at least one policy is required");
  // Point at the offending field where one exists; whole-model checks such as
  // irreducibility are reported against "model".
  if (iid) {
    if (!(std::isfinite(iid->lambda) && iid->lambda > 0.0)) fail("model.lambda", "must be a positive finite number");
    at_path("model", [&] { iid->validate(); return 0; });
  }
  if (polling) {
    for (std::size_t i = 0; i < polling->lambdas.size(); ++i) {
      const double l = polling->lambdas[i];
      if (!(std::isfinite(l) && l > 0.0)) fail("model.lambdas[" + std::to_string(i) + "]", "must be a positive finite number");
    }
    for (std::size_t i = 0; i < polling->routing.size(); ++i) {
      const std::string row = "model.routing[" + std::to_string(i) + "]";
      double sum = 0.0;
      for (double p : polling->routing[i]) {
        if (!(p >= 0.0 && p <= 1.0)) fail(row, "entries must lie in [0, 1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) fail(row, "must sum to 1");
    }
    at_path("model", [&] { polling->build().validate(0); return 0; });
  }
  at_path("simulation", [&] { sim.to_config().validate(); return 0; });

  const bool polling_only = mode == Mode::Polling;
  const bool iid_only = mode == Mode::Analytic || mode == Mode::NoVacation || mode == Mode::Dominance;
  if (polling_only && !polling) fail("model", "mode 'polling' needs a polling model");
  if (iid_only && !iid) {
    fail("model", "mode '" + std::string(to_string(mode)) + "' needs a single-queue model");
  }

  // The exact solver is capped; simulation alone is not.
  if (polling && mode != Mode::Simulate && polling->lambdas.size() > static_cast<std::size_t>(kDefaultMaxQueues)) {
    fail("model.lambdas", "k = " + std::to_string(polling->lambdas.size()) +
                              " exceeds the exact solver's cap of " + std::to_string(kDefaultMaxQueues) +
                              " queues");
  }

  if ((mode == Mode::Sweep) != sweep.has_value()) {
    fail("sweep", mode == Mode::Sweep ? "required in sweep mode" : "only allowed in sweep mode");
  }
  if (sweep) {
    if (sweep->values.empty()) fail("sweep.values", "must not be empty");
    for (double v : sweep->values) {
      at_path("sweep.parameter", [&] {
        if (iid) swept(*iid, sweep->parameter, v);
        else swept(*polling, sweep->parameter, v).build().validate(0);
        return 0;
      });
    }
  }
  if (mode == Mode::Simulate || mode == Mode::Verify) {
    at_path("simulation", [&] { sim.to_config().validate(); return 0; });
  }
}

std::vector<double> parse_values(std::string_view t) {
  const std::string s = lowered(t);
  auto num = [&](std::string_view tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw ValidationError("bad number '" + std::string(tok) + "' in '" + std::string(t) + "'");
    }
    return v;
  };
  auto split = [](std::string_view str, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto pos = str.find(sep, start);
      parts.push_back(str.substr(start, pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return parts;
  };

  std::vector<double> out;
  if (s.find(':') == std::string::npos) {
    for (auto tok : split(s, ',')) out.push_back(num(tok));
    return out;
  }
  const auto parts = split(s, ':');
  if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "log")) {
    throw ValidationError("range '" + std::string(t) + "' must be start:stop:count or start:stop:count:log");
  }
  const double a = num(parts[0]), b = num(parts[1]), n = num(parts[2]);
  if (n < 1 || n != std::floor(n)) throw ValidationError("range count must be a positive integer");
  const bool log = parts.size() == 4;
  if (log && !(a > 0.0 && b > 0.0)) throw ValidationError("log ranges need positive endpoints");
  const int count = static_cast<int>(n);
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(log ? std::exp(std::log(a) + f * (std::log(b) - std::log(a))) : a + f * (b - a));
  }
  return out;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail("config", "must be a JSON object");
  reject_unknown_keys(j, "", {"schema_version", "mode", "policies", "model", "sweep", "output", "simulation"});
  ExperimentConfig c;
  if (!j.contains("schema_version")) fail("schema_version", "missing");
  c.schema_version = static_cast<int>(count(j["schema_version"], "schema_version"));
  if (j.contains("mode")) c.mode = at_path("mode", [&] { return parse_mode(text(j["mode"], "mode")); });

  if (j.contains("policies")) {
    const json& p = j["policies"];
    if (!p.is_array()) fail("policies", "must be an array of policy names");
    c.policies.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string path = "policies[" + std::to_string(i) + "]";
      c.policies.push_back(at_path(path, [&] { return parse_policy(text(p[i], path)); }));
    }
  }

  if (!j.contains("model")) fail("model", "missing");
  const json& m = j["model"];
  if (!m.is_object()) fail("model", "must be an object");
  const std::string kind = m.contains("kind") ? text(m["kind"], "model.kind") : "single_queue";
  if (kind == "single_queue") {
    reject_unknown_keys(m, "model", {"kind", "lambda", "service", "vacation"});
    for (const char* key : {"lambda", "service", "vacation"}) {
      if (!m.contains(key)) fail(std::string("model.") + key, "missing");
    }
    c.iid = IidVacationModel{number(m["lambda"], "model.lambda"),
                             distribution(m["service"], "model.service"),
                             distribution(m["vacation"], "model.vacation")};
  } else if (kind == "polling") {
    reject_unknown_keys(m, "model", {"kind", "lambdas", "services", "switchovers", "routing"});
    for (const char* key : {"lambdas", "services", "switchovers", "routing"}) {
      if (!m.contains(key)) fail(std::string("model.") + key, "missing");
    }
    PollingSpec p;
    p.lambdas = numbers(m["lambdas"], "model.lambdas");
    const std::size_t k = p.lambdas.size();
    if (k == 0) fail("model.lambdas", "must not be empty");
    // A single literal stands for "the same for every queue / every pair".
    const json& s = m["services"];
    if (s.is_string()) {
      p.services.assign(k, distribution(s, "model.services"));
    } else {
      if (!s.is_array() || s.size() != k) fail("model.services", "must be a literal or an array of " + std::to_string(k));
      for (std::size_t i = 0; i < k; ++i) p.services.push_back(distribution(s[i], "model.services[" + std::to_string(i) + "]"));
    }
    const json& u = m["switchovers"];
    if (u.is_string()) {
      p.switchovers.assign(k, std::vector<DistributionSpec>(k, distribution(u, "model.switchovers")));
    } else {
      if (!u.is_array() || u.size() != k) fail("model.switchovers", "must be a literal or a " + std::to_string(k) + "x" + std::to_string(k) + " matrix");
      for (std::size_t i = 0; i < k; ++i) {
        const std::string row = "model.switchovers[" + std::to_string(i) + "]";
        if (!u[i].is_array() || u[i].size() != k) fail(row, "must have " + std::to_string(k) + " entries");
        p.switchovers.emplace_back();
        for (std::size_t jx = 0; jx < k; ++jx) p.switchovers.back().push_back(distribution(u[i][jx], row + "[" + std::to_string(jx) + "]"));
      }
    }
    const json& r = m["routing"];
    if (r.is_string()) {
      p.scheme = at_path("model.routing", [&] { return parse_routing_scheme(text(r, "model.routing")); });
    } else {
      if (!r.is_array() || r.size() != k) fail("model.routing", "must be a scheme name or a " + std::to_string(k) + "x" + std::to_string(k) + " matrix");
      for (std::size_t i = 0; i < k; ++i) {
        const std::string row = "model.routing[" + std::to_string(i) + "]";
        p.routing.push_back(numbers(r[i], row));
        if (p.routing.back().size() != k) fail(row, "must have " + std::to_string(k) + " entries");
      }
    }
    c.polling = std::move(p);
  } else {
    fail("model.kind", "must be single_queue or polling");
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (!s.is_object()) fail("sweep", "must be an object");
    reject_unknown_keys(s, "sweep", {"parameter", "values"});
    if (!s.contains("parameter")) fail("sweep.parameter", "missing");
    if (!s.contains("values")) fail("sweep.values", "missing");
    SweepSpec sw;
    sw.parameter = text(s["parameter"], "sweep.parameter");
    sw.values = s["values"].is_string()
                    ? at_path("sweep.values", [&] { return parse_values(s["values"].get<std::string>()); })
                    : numbers(s["values"], "sweep.values");
    c.sweep = std::move(sw);
  }
  if (j.contains("output")) c.output = text(j["output"], "output");
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    if (!s.is_object()) fail("simulation", "must be an object");
    reject_unknown_keys(s, "simulation", {"peaks", "replications", "seed", "batch_count", "warmup"});
    if (s.contains("peaks")) c.sim.peaks = count(s["peaks"], "simulation.peaks");
    if (s.contains("replications")) c.sim.replications = static_cast<int>(count(s["replications"], "simulation.replications"));
    if (s.contains("seed")) c.sim.seed = count(s["seed"], "simulation.seed");
    if (s.contains("batch_count")) c.sim.batch_count = static_cast<int>(count(s["batch_count"], "simulation.batch_count"));
    if (s.contains("warmup") && !s["warmup"].is_null()) c.sim.warmup = count(s["warmup"], "simulation.warmup");
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["mode"] = std::string(to_string(c.mode));
  j["policies"] = json::array();
  for (Policy p : c.policies) j["policies"].push_back(std::string(to_string(p)));
  if (c.iid) {
    j["model"] = {{"kind", "single_queue"},
                  {"lambda", c.iid->lambda},
                  {"service", to_string(c.iid->service)},
                  {"vacation", to_string(c.iid->vacation)}};
  } else if (c.polling) {
    const PollingSpec& p = *c.polling;
    json m = {{"kind", "polling"}, {"lambdas", p.lambdas}};
    m["services"] = json::array();
    for (const auto& s : p.services) m["services"].push_back(to_string(s));
    m["switchovers"] = json::array();
    for (const auto& row : p.switchovers) {
      json r = json::array();
      for (const auto& u : row) r.push_back(to_string(u));
      m["switchovers"].push_back(r);
    }
    if (p.scheme) m["routing"] = std::string(to_string(*p.scheme));
    else m["routing"] = p.routing;
    j["model"] = m;
  }
  if (c.sweep) j["sweep"] = {{"parameter", c.sweep->parameter}, {"values", c.sweep->values}};
  if (!c.output.empty()) j["output"] = c.output;
  j["simulation"] = {{"peaks", c.sim.peaks},
                     {"replications", c.sim.replications},
                     {"seed", c.sim.seed},
                     {"batch_count", c.sim.batch_count}};
  if (c.sim.warmup) j["simulation"]["warmup"] = *c.sim.warmup;
  return j;
}

RunResult run(const ExperimentConfig& config, int threads) {
  config.validate();
  if (threads <= 0) threads = default_thread_count();
  SimConfig sim = config.sim.to_config();
  sim.threads = threads;

  RunResult out;
  json& summary = out.summary;
  summary["mode"] = std::string(to_string(config.mode));

  switch (config.mode) {
    case Mode::Analytic: {
      for (Policy p : config.policies) {
        const FreshnessMetrics m = metrics(*config.iid, p);
        out.rows.push_back(metrics_row(p, "analytic", m));
        json comp = json::array();
        for (const auto& c : m.breakdown) {
          comp.push_back({{"name", c.name}, {"mean", c.mean}, {"second_moment", c.second_moment}, {"variance", c.variance}});
        }
        summary["policies"][std::string(to_string(p))] = {
            {"components", comp}, {"closed_form_rel_diff", m.closed_form_rel_diff}};
      }
      break;
    }
    case Mode::NoVacation: {
      for (Policy p : config.policies) {
        const FreshnessMetrics m =
            metrics_no_vacation(config.iid->lambda, config.iid->service, system_for(p));
        out.rows.push_back(metrics_row(p, "no_vacation", m));
        summary["systems"][std::string(to_string(p))] = std::string(to_string(system_for(p)));
      }
      break;
    }
    case Mode::Polling: {
      const PollingModel model = config.polling->build();
      std::vector<PollingPaoi> res(config.policies.size());
      detail::parallel_for(static_cast<int>(res.size()), threads, [&](int i) {
        res[static_cast<std::size_t>(i)] = paoi(model, config.policies[static_cast<std::size_t>(i)]);
      });
      for (std::size_t i = 0; i < res.size(); ++i) {
        const Policy p = config.policies[i];
        for (auto& r : polling_rows(p, res[i])) out.rows.push_back(r);
        summary["policies"][std::string(to_string(p))] = {
            {"alphas", res[i].alphas},
            {"mean_waiting", res[i].mean_waiting},
            {"w_at_lambda", res[i].w_at_lambda},
            {"boundary_residual", res[i].boundary_residual},
            {"boundary_rcond", res[i].boundary_rcond},
            {"gamma_dual_path_rel_diff", res[i].gamma_dual_path_rel_diff}};
      }
      break;
    }
    case Mode::Simulate: {
      for (Policy p : config.policies) {
        if (config.iid) {
          out.rows.push_back(sim_row(p, simulate_iid(*config.iid, p, sim)));
        } else {
          const auto est = simulate_polling(config.polling->build(), p, sim);
          for (std::size_t q = 0; q < est.size(); ++q) {
            ResultRow r = sim_row(p, est[q]);
            r.queue = std::to_string(q + 1);
            out.rows.push_back(r);
          }
        }
      }
      break;
    }
    case Mode::Sweep: {
      const SweepSpec& sw = *config.sweep;
      const std::size_t nv = sw.values.size();
      for (Policy p : config.policies) {
        std::vector<std::vector<ResultRow>> per_value(nv);
        detail::parallel_for(static_cast<int>(nv), threads, [&](int i) {
          const double v = sw.values[static_cast<std::size_t>(i)];
          auto& rows = per_value[static_cast<std::size_t>(i)];
          if (config.iid) {
            rows.push_back(metrics_row(p, "analytic", metrics(swept(*config.iid, sw.parameter, v), p)));
          } else {
            rows = polling_rows(p, paoi(swept(*config.polling, sw.parameter, v).build(), p));
          }
          for (auto& r : rows) {
            r.mode = "sweep";
            r.param_name = sw.parameter;
            r.param_value = v;
          }
        });
        for (auto& rows : per_value) out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      }
      break;
    }
    case Mode::Verify: {
      bool all_inside = true;
      for (Policy p : config.policies) {
        const std::string name(to_string(p));
        if (config.iid) {
          const FreshnessMetrics exact = metrics(*config.iid, p);
          const SimEstimates est = simulate_iid(*config.iid, p, sim);
          out.rows.push_back(metrics_row(p, "analytic", exact));
          out.rows.push_back(sim_row(p, est));
          const bool in_aoi = est.aoi.contains(exact.aoi);
          const bool in_paoi = est.paoi.contains(exact.paoi);
          const bool in_var = est.var_peak.contains(exact.var_peak);
          all_inside = all_inside && in_aoi && in_paoi && in_var;
          summary["policies"][name] = {
              {"rel_err", {{"aoi", rel_err(est.aoi.mean, exact.aoi)},
                           {"paoi", rel_err(est.paoi.mean, exact.paoi)},
                           {"var_peak", rel_err(est.var_peak.mean, exact.var_peak)}}},
              {"inside_ci", {{"aoi", in_aoi}, {"paoi", in_paoi}, {"var_peak", in_var}}}};
        } else {
          const PollingModel model = config.polling->build();
          const PollingPaoi exact = paoi(model, p);
          const auto est = simulate_polling(model, p, sim);
          for (auto& r : polling_rows(p, exact)) out.rows.push_back(r);
          json errs = json::array(), inside = json::array();
          for (std::size_t q = 0; q < est.size(); ++q) {
            ResultRow r = sim_row(p, est[q]);
            r.queue = std::to_string(q + 1);
            out.rows.push_back(r);
            const bool in = est[q].paoi.contains(exact.per_queue[q]);
            all_inside = all_inside && in;
            errs.push_back(rel_err(est[q].paoi.mean, exact.per_queue[q]));
            inside.push_back(in);
          }
          summary["policies"][name] = {{"paoi_rel_err", errs}, {"paoi_inside_ci", inside}};
        }
      }
      summary["all_inside_ci"] = all_inside;
      if (!all_inside) out.exit_code = kExitVerifyFailed;
      break;
    }
    case Mode::Dominance: {
      const IidVacationModel& m = *config.iid;
      ResultRow brs;
      brs.label = "cbs-brs";
      brs.mode = "dominance";
      brs.paoi = paoi_gap_cbs_minus_brs(m);
      out.rows.push_back(brs);
      summary["paoi_gap_cbs_minus_brs"] = *brs.paoi;
      if (m.service.is_exponential()) {
        const DominanceGaps g = exp_service_dominance(m);
        ResultRow pre;
        pre.label = "cbs-cbsp";
        pre.mode = "dominance";
        pre.aoi = g.aoi_gap;
        pre.paoi = g.paoi_gap;
        out.rows.push_back(pre);
        summary["exp_service_gaps"] = {{"aoi", g.aoi_gap}, {"paoi", g.paoi_gap}};
      } else {
        const FreshnessMetrics cbs = metrics(m, Policy::CBS);
        const FreshnessMetrics cbsp = metrics(m, Policy::CBSP);
        ResultRow pre;
        pre.label = "cbs-cbsp";
        pre.mode = "dominance";
        pre.aoi = cbs.aoi - cbsp.aoi;
        pre.paoi = cbs.paoi - cbsp.paoi;
        out.rows.push_back(pre);
      }
      std::vector<double> grid;
      for (int i = 0; i < 200; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 199.0));
      const SufficientCondition sc = preemption_sufficient_condition(m.service, grid);
      summary["preemption_condition"] = {{"holds_on_grid", sc.holds_on_grid},
                                         {"margin", sc.margin},
                                         {"grid", "200 log-spaced points in [1e-3, 1e3]"}};
      if (sc.exact) summary["preemption_condition"]["exact"] = *sc.exact;
      summary["lemma2_margin"] = lemma2_margin(m.vacation, m.lambda);
      break;
    }
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "policy,mode,param_name,param_value,queue,aoi,paoi,var_peak,ci_aoi,ci_paoi,ci_var\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.label << ',' << r.mode << ',' << r.param_name << ',' << opt(r.param_value) << ','
        << r.queue << ',' << opt(r.aoi) << ',' << opt(r.paoi) << ',' << opt(r.var_peak) << ','
        << opt(r.ci_aoi) << ',' << opt(r.ci_paoi) << ',' << opt(r.ci_var) << '\n';
  }
}

json rows_to_json(const std::vector<ResultRow>& rows) {
  json arr = json::array();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& r : rows) {
    arr.push_back({{"policy", r.label},
                   {"mode", r.mode},
                   {"param_name", r.param_name.empty() ? json(nullptr) : json(r.param_name)},
                   {"param_value", opt(r.param_value)},
                   {"queue", r.queue.empty() ? json(nullptr) : json(r.queue)},
                   {"aoi", opt(r.aoi)},
                   {"paoi", opt(r.paoi)},
                   {"var_peak", opt(r.var_peak)},
                   {"ci_aoi", opt(r.ci_aoi)},
                   {"ci_paoi", opt(r.ci_paoi)},
                   {"ci_var", opt(r.ci_var)}});
  }
  return arr;
}

}  // namespace agefresh
