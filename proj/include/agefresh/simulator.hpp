#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "agefresh/analytic_iid.hpp"
#include "agefresh/polling_exact.hpp"

namespace agefresh {

struct SimConfig {
  /// Informative completions to collect, summed over replications (per queue
  /// for polling models).
  std::uint64_t peaks_target = 1'000'000;
  /// Peaks discarded at the start of each replication; defaults to 1% of that
  /// replication's share of peaks_target.
  std::optional<std::uint64_t> warmup_peaks;
  std::uint64_t seed = 1;
  int replications = 1;
  int batch_count = 32;
  /// Worker threads; 0 means AGEFRESH_THREADS or the hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct Estimate {
  double mean = 0.0;
  double half_width_95 = 0.0;

  bool contains(double x) const { return x >= mean - half_width_95 && x <= mean + half_width_95; }
};

struct SimEstimates {
  Estimate aoi;
  Estimate paoi;
  Estimate var_peak;
  std::uint64_t peaks = 0;
};

/// One informative packet: completion time, generation time, service start.
struct TraceEntry {
  double completion;
  double generation;
  double service_start;
};

struct AgeTrace {
  std::vector<TraceEntry> entries;
  /// End of the observation window; at least the last completion time.
  double end_time = 0.0;
};

struct TraceMetrics {
  double aoi = 0.0;
  /// A_l = C_l - r_{l-1} for every l after the warmup.
  std::vector<double> peaks;
  /// Area under the age curve between consecutive drops, and that span's
  /// length, aligned with `peaks`.
  std::vector<double> areas;
  std::vector<double> durations;
};

/// Throws ValidationError if the trace is not increasing or r_l > C_l.
TraceMetrics trace_metrics(const AgeTrace& trace, std::uint64_t warmup_peaks);

/// One line per packet: `C<TAB>r`.
void write_trace(std::ostream& out, const AgeTrace& trace);

enum class SimEventKind {
  Arrival,
  Reject,        // arrival dropped because the buffer is unavailable
  Replace,       // arrival overwrote a waiting packet
  ServiceStart,
  Preempt,       // in-service packet discarded by a newer arrival
  Completion,
  SwitchStart,   // vacation / switchover begins
  SwitchEnd,     // polling instant
};

struct SimEvent {
  double time;
  SimEventKind kind;
  int queue;
  double generation;   // packet concerned, if any
  bool buffer_empty;   // state of `queue`'s buffer after the event
};

/// Runs one replication of the polling system (a single queue with vacations
/// is the k = 1 case with the vacation as its switchover) until every queue
/// has `peaks` informative completions. Returns one trace per queue.
std::vector<AgeTrace> run_replication(const PollingModel& model, Policy policy,
                                      std::uint64_t seed, std::uint64_t peaks,
                                      std::vector<SimEvent>* log = nullptr);

PollingModel single_queue_model(const IidVacationModel& model);

SimEstimates simulate_iid(const IidVacationModel& model, Policy policy, const SimConfig& config);

std::vector<SimEstimates> simulate_polling(const PollingModel& model, Policy policy,
                                           const SimConfig& config);

/// Worker count from AGEFRESH_THREADS, else the hardware concurrency.
int default_thread_count();

}  // namespace agefresh
