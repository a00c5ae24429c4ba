// Command-line front end. Every command reads an optional JSON config and
// lets flags override individual fields before validation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agefresh/error.hpp"
#include "agefresh/experiment.hpp"

using agefresh::ExperimentConfig;
using nlohmann::json;

namespace {

struct Flags {
  std::string command;
  std::string config_path;
  std::optional<std::string> policy, lambda, service, vacation, switchover, out, scheme;
  std::optional<std::string> param, values, system;
  std::optional<std::uint64_t> seed, peaks;
  std::optional<int> replications, k;
  bool json_output = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// The distribution literals contain commas (gamma(a,b)), so lists of them are
// separated with ';'.
std::vector<std::string> split_literals(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(item);
  return out;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw agefresh::ValidationError("--config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw agefresh::ValidationError("--config: " + std::string(e.what()));
  }
}

bool wants_polling(const Flags& f, const json& j) {
  if (j.contains("model") && j["model"].is_object() && j["model"].value("kind", "") == "polling") {
    return true;
  }
  if (j.contains("model")) return false;
  return f.command == "polling" || f.k || f.scheme || f.switchover;
}

json apply_flags(const Flags& f, json j) {
  if (!j.is_object()) j = json::object();
  if (!j.contains("schema_version")) j["schema_version"] = agefresh::kSchemaVersion;
  const bool polling = wants_polling(f, j);
  if (f.command != "dump-config") j["mode"] = f.command;
  else if (!j.contains("mode")) j["mode"] = (f.param || f.values) ? "sweep" : polling ? "polling" : "analytic";
  json& m = j["model"];
  if (!m.is_object()) m = json::object();
  if (polling) {
    m["kind"] = "polling";
    std::vector<double> lambdas;
    if (f.lambda) {
      for (const auto& s : split_list(*f.lambda)) lambdas.push_back(agefresh::parse_values(s).at(0));
    } else if (m.contains("lambdas")) {
      lambdas = m["lambdas"].get<std::vector<double>>();
    }
    const int k = f.k ? *f.k : static_cast<int>(std::max<std::size_t>(lambdas.size(), 1));
    if (k < 1) throw agefresh::ValidationError("--k: must be at least 1");
    if (lambdas.empty()) lambdas.assign(static_cast<std::size_t>(k), 1.0 / k);
    if (lambdas.size() == 1 && k > 1) lambdas.assign(static_cast<std::size_t>(k), lambdas[0]);
    if (static_cast<int>(lambdas.size()) != k) {
      throw agefresh::ValidationError("--lambda: expected 1 or " + std::to_string(k) + " values");
    }
    m["lambdas"] = lambdas;
    if (f.service) {
      const auto lits = split_literals(*f.service);
      m["services"] = lits.size() == 1 ? json(lits[0]) : json(lits);
    } else if (!m.contains("services")) {
      m["services"] = "exp(1)";
    }
    if (f.switchover) m["switchovers"] = *f.switchover;
    else if (!m.contains("switchovers")) m["switchovers"] = "det(0.0125)";
    if (f.scheme) m["routing"] = *f.scheme;
    else if (!m.contains("routing")) m["routing"] = "cyclic";
    if (f.k && m["services"].is_array() && static_cast<int>(m["services"].size()) != k) {
      throw agefresh::ValidationError("--service: expected 1 or " + std::to_string(k) + " literals");
    }
  } else {
    m["kind"] = "single_queue";
    if (f.lambda) m["lambda"] = agefresh::parse_values(*f.lambda).at(0);
    else if (!m.contains("lambda")) m["lambda"] = 1.0;
    if (f.service) m["service"] = *f.service;
    else if (!m.contains("service")) m["service"] = "exp(1)";
    if (f.vacation) m["vacation"] = *f.vacation;
    else if (!m.contains("vacation")) m["vacation"] = "exp(1)";
  }

  if (f.policy) j["policies"] = split_list(*f.policy);
  if (f.out) j["output"] = *f.out;
  if (f.param || f.values) {
    json& s = j["sweep"];
    if (!s.is_object()) s = json::object();
    if (f.param) s["parameter"] = *f.param;
    if (f.values) s["values"] = *f.values;
  }
  if (f.seed || f.peaks || f.replications) {
    json& s = j["simulation"];
    if (!s.is_object()) s = json::object();
    if (f.seed) s["seed"] = *f.seed;
    if (f.peaks) s["peaks"] = *f.peaks;
    if (f.replications) s["replications"] = *f.replications;
  }
  return j;
}

int emit_error(const Flags& f, int code, const std::string& message) {
  if (f.json_output) {
    std::cout << json{{"schema_version", agefresh::kSchemaVersion},
                      {"status", "error"},
                      {"exit_code", code},
                      {"error", message}}
                     .dump(2)
              << '\n';
  }
  std::cerr << "agefresh: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-freshness metrics for single-buffer vacation and polling systems"};
  Flags f;
  app.add_option("command", f.command, "analytic | no-vacation | polling | simulate | sweep | verify | dominance | dump-config")
      ->required()
      ->check(CLI::IsMember({"analytic", "no-vacation", "polling", "simulate", "sweep", "verify",
                             "dominance", "dump-config"}));
  app.add_option("--config", f.config_path, "JSON experiment config");
  app.add_option("--policy", f.policy, "Comma list of cbs, brs, cbsp");
  app.add_option("--lambda", f.lambda, "Arrival rate; comma list per queue for polling models");
  app.add_option("--service", f.service, "Service time literal, e.g. exp(1); ';'-separated per queue for polling");
  app.add_option("--vacation", f.vacation, "Vacation time literal");
  app.add_option("--switchover", f.switchover, "Switchover time literal used for every pair");
  app.add_option("--scheme", f.scheme, "Polling routing: cyclic, lop or symmetric");
  app.add_option("--k", f.k, "Number of polling queues");
  app.add_option("--param", f.param, "Sweep parameter, e.g. lambda, vacation.rate, load");
  app.add_option("--values", f.values, "Sweep values: a,b,c or start:stop:count[:log]");
  app.add_option("--out", f.out, "CSV output path (default: standard output)");
  app.add_option("--seed", f.seed, "Simulation seed");
  app.add_option("--peaks", f.peaks, "Simulated peaks (total over replications, per queue)");
  app.add_option("--replications", f.replications, "Independent simulation replications");
  app.add_flag("--json", f.json_output, "Print a machine-readable result envelope");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : agefresh::kExitValidation;
  }

  ExperimentConfig config;
  try {
    const json base = f.config_path.empty() ? json::object() : load_config(f.config_path);
    config = agefresh::config_from_json(apply_flags(f, base));
  } catch (const agefresh::ValidationError& e) {
    return emit_error(f, agefresh::kExitValidation, e.what());
  } catch (const json::exception& e) {
    return emit_error(f, agefresh::kExitValidation, e.what());
  }

  if (f.command == "dump-config") {
    std::cout << agefresh::config_to_json(config).dump(2) << '\n';
    return agefresh::kExitOk;
  }

  agefresh::RunResult result;
  try {
    result = agefresh::run(config);
  } catch (const agefresh::ValidationError& e) {
    return emit_error(f, agefresh::kExitValidation, e.what());
  } catch (const agefresh::NumericError& e) {
    return emit_error(f, agefresh::kExitNumeric, e.what());
  }

  if (!config.output.empty()) {
    std::ofstream csv(config.output);
    if (!csv) return emit_error(f, agefresh::kExitValidation, "--out: cannot write '" + config.output + "'");
    agefresh::write_csv(csv, result.rows);
  } else if (!f.json_output) {
    agefresh::write_csv(std::cout, result.rows);
  }
  if (f.json_output) {
    std::cout << json{{"schema_version", agefresh::kSchemaVersion},
                      {"status", result.exit_code == 0 ? "ok" : "verify_failed"},
                      {"exit_code", result.exit_code},
                      {"rows", agefresh::rows_to_json(result.rows)},
                      {"summary", result.summary}}
                     .dump(2)
              << '\n';
  } else if (config.mode == agefresh::Mode::Verify || config.mode == agefresh::Mode::Dominance) {
    std::cerr << result.summary.dump(2) << '\n';
  }
  return result.exit_code;
}
