#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agefresh/analytic_iid.hpp"
#include "agefresh/polling_exact.hpp"
#include "agefresh/simulator.hpp"

namespace agefresh {

inline constexpr int kSchemaVersion = 1;

enum class Mode { Analytic, NoVacation, Polling, Simulate, Sweep, Verify, Dominance };

std::string_view to_string(Mode m);
/// Accepts the config spelling (no_vacation) and the command spelling (no-vacation).
Mode parse_mode(std::string_view text);

struct PollingSpec {
  std::vector<double> lambdas;
  std::vector<DistributionSpec> services;
  std::vector<std::vector<DistributionSpec>> switchovers;  // [from][to]
  /// Either a named scheme or an explicit matrix.
  std::optional<RoutingScheme> scheme;
  std::vector<std::vector<double>> routing;

  PollingModel build() const;
  bool operator==(const PollingSpec&) const = default;
};

struct SweepSpec {
  /// lambda, service.<field>, vacation.<field> for single-queue models;
  /// load or switchover.<field> for polling models. <field> is rate, shape,
  /// scale or value, matching the distribution family.
  std::string parameter;
  std::vector<double> values;

  bool operator==(const SweepSpec&) const = default;
};

struct SimSettings {
  std::uint64_t peaks = 1'000'000;
  int replications = 1;
  std::uint64_t seed = 1;
  int batch_count = 32;
  std::optional<std::uint64_t> warmup;

  SimConfig to_config() const;
  bool operator==(const SimSettings&) const = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Mode mode = Mode::Analytic;
  std::optional<IidVacationModel> iid;
  std::optional<PollingSpec> polling;
  std::vector<Policy> policies{Policy::CBS, Policy::BRS, Policy::CBSP};
  std::optional<SweepSpec> sweep;
  /// CSV destination; empty means standard output.
  std::string output;
  SimSettings sim;

  /// Cross-field checks (model kind vs mode, sweep iff mode = sweep, ...).
  void validate() const;
  bool operator==(const ExperimentConfig& o) const;
};

/// Field-level ValidationError messages, e.g. "model.lambdas[2]: must be positive".
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

/// `start:stop:count` (linear) or `start:stop:count:log`, or a comma list.
std::vector<double> parse_values(std::string_view text);

struct ResultRow {
  Policy policy = Policy::CBS;
  /// Usually the policy name; dominance rows name the comparison (cbs-brs).
  std::string label;
  std::string mode;
  std::string param_name;
  std::optional<double> param_value;
  std::string queue;
  std::optional<double> aoi, paoi, var_peak;
  std::optional<double> ci_aoi, ci_paoi, ci_var;
};

struct RunResult {
  int exit_code = 0;
  std::vector<ResultRow> rows;
  nlohmann::json summary = nlohmann::json::object();
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerifyFailed = 4;

/// Executes the configured experiment. Validation and numeric failures
/// propagate as exceptions; a verify-mode CI miss is reported via exit_code.
RunResult run(const ExperimentConfig& config, int threads = 0);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
nlohmann::json rows_to_json(const std::vector<ResultRow>& rows);

}  // namespace agefresh
