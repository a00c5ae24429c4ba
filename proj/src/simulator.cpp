#include "agefresh/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "agefresh/error.hpp"
#include "parallel.hpp"

namespace agefresh {

void SimConfig::validate() const {
  if (peaks_target < 1000) throw ValidationError("peaks_target must be at least 1000");
  if (replications < 1) throw ValidationError("replications must be at least 1");
  if (batch_count < 10) throw ValidationError("batch_count must be at least 10");
  if (threads < 0) throw ValidationError("threads must be nonnegative");
  if (peaks_target / static_cast<std::uint64_t>(replications) <
      static_cast<std::uint64_t>(batch_count)) {
    throw ValidationError("too few peaks per replication for the requested batch count");
  }
  if (warmup_peaks && peaks_target / static_cast<std::uint64_t>(replications) <
                          *warmup_peaks + static_cast<std::uint64_t>(batch_count)) {
    throw ValidationError("warmup leaves too few peaks per replication for the requested batch count");
  }
}

TraceMetrics trace_metrics(const AgeTrace& trace, std::uint64_t warmup_peaks) {
  const auto& e = trace.entries;
  for (std::size_t l = 0; l < e.size(); ++l) {
    if (!(e[l].generation <= e[l].completion)) {
      throw ValidationError("trace entry " + std::to_string(l) + " completes before it is generated");
    }
    if (l > 0 && !(e[l].completion > e[l - 1].completion)) {
      throw ValidationError("trace completion times are not strictly increasing at entry " +
                            std::to_string(l));
    }
    if (l > 0 && !(e[l].generation > e[l - 1].generation)) {
      throw ValidationError("trace generation times are not strictly increasing at entry " +
                            std::to_string(l));
    }
  }
  if (!e.empty() && trace.end_time < e.back().completion) {
    throw ValidationError("trace end time precedes its last completion");
  }

  TraceMetrics m;
  if (warmup_peaks >= e.size()) {
    m.aoi = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  const std::size_t first = static_cast<std::size_t>(warmup_peaks);
  double area = 0.0, span = 0.0;
  for (std::size_t l = first + 1; l < e.size(); ++l) {
    const double r = e[l - 1].generation;
    const double c0 = e[l - 1].completion;
    const double c1 = e[l].completion;
    const double a = (c1 - c0) * ((c0 - r) + (c1 - r)) / 2.0;
    m.peaks.push_back(c1 - r);
    m.areas.push_back(a);
    m.durations.push_back(c1 - c0);
    area += a;
    span += c1 - c0;
  }
  // Whatever remains of the window after the last drop.
  const double r = e.back().generation;
  const double c = e.back().completion;
  const double tail = trace.end_time - c;
  area += tail * ((c - r) + (trace.end_time - r)) / 2.0;
  span += tail;
  m.aoi = span > 0.0 ? area / span : std::numeric_limits<double>::quiet_NaN();
  return m;
}

void write_trace(std::ostream& out, const AgeTrace& trace) {
  const auto old = out.precision(17);
  for (const auto& e : trace.entries) out << e.completion << '\t' << e.generation << '\n';
  out.precision(old);
}

namespace {

// Lower value wins a tie at equal times.
enum Priority : int { kCompletion = 0, kSwitchEnd = 1, kArrival = 2 };

struct CalendarEvent {
  double time;
  int priority;
  std::uint64_t seq;
  int queue;
  std::uint64_t epoch;  // server events only; stale epochs are skipped

  bool operator>(const CalendarEvent& o) const {
    if (time != o.time) return time > o.time;
    if (priority != o.priority) return priority > o.priority;
    return seq > o.seq;
  }
};

class Calendar {
 public:
  void push(double time, int priority, int queue, std::uint64_t epoch = 0) {
    heap_.push({time, priority, seq_++, queue, epoch});
  }
  CalendarEvent pop() {
    CalendarEvent e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  std::priority_queue<CalendarEvent, std::vector<CalendarEvent>, std::greater<>> heap_;
  std::uint64_t seq_ = 0;
};

struct BatchStats {
  double paoi, aoi, var;
};

}  // namespace

PollingModel single_queue_model(const IidVacationModel& model) {
  model.validate();
  PollingModel p;
  p.lambdas = {model.lambda};
  p.services = {model.service};
  p.switchovers = {{model.vacation}};
  p.routing = Eigen::MatrixXd::Ones(1, 1);
  return p;
}

std::vector<AgeTrace> run_replication(const PollingModel& model, Policy policy,
                                      std::uint64_t seed, std::uint64_t peaks,
                                      std::vector<SimEvent>* log) {
  model.validate(0);
  const int k = model.k();
  for (const auto& row : model.switchovers) {
    for (const auto& u : row) {
      if (u.is_degenerate_zero()) {
        throw ValidationError("zero switchover times would let the simulated server spin forever");
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<int>> route;
  for (int i = 0; i < k; ++i) {
    std::vector<double> row(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = model.routing(i, j);
    route.emplace_back(row.begin(), row.end());
  }
  std::vector<std::exponential_distribution<double>> interarrival;
  for (double l : model.lambdas) interarrival.emplace_back(l);

  struct Buffer {
    bool full = false;
    double generation = 0.0;
  };
  std::vector<Buffer> buffer(static_cast<std::size_t>(k));
  std::vector<AgeTrace> traces(static_cast<std::size_t>(k));
  const std::uint64_t needed = peaks + 1;  // the first completion has no peak
  int queues_short = k;

  Calendar cal;
  double now = 0.0;
  bool serving = false;
  int at = 0;
  double in_service = 0.0, service_start = 0.0;
  std::uint64_t epoch = 0;

  auto note = [&](SimEventKind kind, int q, double r) {
    if (log) log->push_back({now, kind, q, r, !buffer[static_cast<std::size_t>(q)].full});
  };
  auto start_switch = [&](int from) {
    const int to = route[static_cast<std::size_t>(from)](rng);
    const double d = sample(model.switchovers[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)], rng);
    note(SimEventKind::SwitchStart, from, 0.0);
    cal.push(now + d, kSwitchEnd, to, ++epoch);
  };
  auto start_service = [&](int q, double r) {
    serving = true;
    at = q;
    in_service = r;
    service_start = now;
    note(SimEventKind::ServiceStart, q, r);
    cal.push(now + sample(model.services[static_cast<std::size_t>(q)], rng), kCompletion, q, ++epoch);
  };

  for (int q = 0; q < k; ++q) cal.push(interarrival[static_cast<std::size_t>(q)](rng), kArrival, q);
  start_switch(0);

  while (queues_short > 0) {
    const CalendarEvent ev = cal.pop();
    if (ev.priority != kArrival && ev.epoch != epoch) continue;  // cancelled by a preemption
    now = ev.time;
    const int q = ev.queue;
    Buffer& buf = buffer[static_cast<std::size_t>(q)];
    switch (ev.priority) {
      case kArrival: {
        cal.push(now + interarrival[static_cast<std::size_t>(q)](rng), kArrival, q);
        note(SimEventKind::Arrival, q, now);
        if (serving && at == q && policy == Policy::CBS) {
          note(SimEventKind::Reject, q, now);
        } else if (serving && at == q && policy == Policy::CBSP) {
          note(SimEventKind::Preempt, q, in_service);
          start_service(q, now);
        } else {
          if (buf.full) note(SimEventKind::Replace, q, buf.generation);
          buf.full = true;
          buf.generation = now;
        }
        break;
      }
      case kCompletion: {
        serving = false;
        auto& t = traces[static_cast<std::size_t>(q)];
        t.entries.push_back({now, in_service, service_start});
        t.end_time = now;
        if (t.entries.size() == needed) --queues_short;
        note(SimEventKind::Completion, q, in_service);
        start_switch(q);
        break;
      }
      default: {  // polling instant
        at = q;
        note(SimEventKind::SwitchEnd, q, 0.0);
        if (buf.full) {
          buf.full = false;
          start_service(q, buf.generation);
        } else {
          start_switch(q);
        }
        break;
      }
    }
  }
  return traces;
}

int default_thread_count() {
  if (const char* env = std::getenv("AGEFRESH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

double t_quantile_975(std::size_t dof) {
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

// Splits one replication's post-warmup peaks into `batches` contiguous groups.
void append_batches(const TraceMetrics& m, int batches, std::vector<BatchStats>& out) {
  const std::size_t n = m.peaks.size();
  for (int b = 0; b < batches; ++b) {
    const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(batches);
    const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(batches);
    double sum = 0.0, area = 0.0, span = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sum += m.peaks[i];
      area += m.areas[i];
      span += m.durations[i];
    }
    const double mean = sum / static_cast<double>(hi - lo);
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) ss += (m.peaks[i] - mean) * (m.peaks[i] - mean);
    out.push_back({mean, area / span, ss / static_cast<double>(hi - lo - 1)});
  }
}

struct QueueSummary {
  std::vector<BatchStats> batches;
  // Peak count, mean and sum of squared deviations, merged pairwise so the
  // variance does not suffer from cancellation.
  std::uint64_t n = 0;
  double mean = 0.0, m2 = 0.0;
  double area = 0.0, span = 0.0;

  void merge(std::uint64_t n2, double mean2, double m2_2) {
    if (n2 == 0) return;
    const double total = static_cast<double>(n + n2);
    const double delta = mean2 - mean;
    m2 += m2_2 + delta * delta * static_cast<double>(n) * static_cast<double>(n2) / total;
    mean += delta * static_cast<double>(n2) / total;
    n += n2;
  }
};

SimEstimates summarize(const QueueSummary& q) {
  SimEstimates s;
  s.peaks = q.n;
  const double n = static_cast<double>(q.n);
  s.paoi.mean = q.mean;
  s.aoi.mean = q.area / q.span;
  s.var_peak.mean = q.m2 / (n - 1.0);

  const std::size_t nb = q.batches.size();
  const double scale = t_quantile_975(nb - 1) / std::sqrt(static_cast<double>(nb));
  auto half_width = [&](auto field) {
    double mean = 0.0;
    for (const auto& b : q.batches) mean += field(b);
    mean /= static_cast<double>(nb);
    double ss = 0.0;
    for (const auto& b : q.batches) ss += (field(b) - mean) * (field(b) - mean);
    return scale * std::sqrt(ss / static_cast<double>(nb - 1));
  };
  s.paoi.half_width_95 = half_width([](const BatchStats& b) { return b.paoi; });
  s.aoi.half_width_95 = half_width([](const BatchStats& b) { return b.aoi; });
  s.var_peak.half_width_95 = half_width([](const BatchStats& b) { return b.var; });
  return s;
}

}  // namespace

std::vector<SimEstimates> simulate_polling(const PollingModel& model, Policy policy,
                                           const SimConfig& config) {
  config.validate();
  model.validate(0);
  const auto reps = static_cast<std::uint64_t>(config.replications);
  const std::uint64_t share = (config.peaks_target + reps - 1) / reps;
  const std::uint64_t warmup = config.warmup_peaks.value_or(share / 100);
  const int k = model.k();
  const int threads = config.threads > 0 ? config.threads : default_thread_count();

  // Per replication, per queue: batches plus raw sums; merged in index order.
  std::vector<std::vector<QueueSummary>> parts(static_cast<std::size_t>(config.replications));
  detail::parallel_for(config.replications, threads, [&](int r) {
    const auto traces =
        run_replication(model, policy, config.seed + static_cast<std::uint64_t>(r), share + warmup);
    auto& out = parts[static_cast<std::size_t>(r)];
    out.resize(static_cast<std::size_t>(k));
    for (int q = 0; q < k; ++q) {
      const TraceMetrics m = trace_metrics(traces[static_cast<std::size_t>(q)], warmup);
      auto& s = out[static_cast<std::size_t>(q)];
      append_batches(m, config.batch_count, s.batches);
      double sum = 0.0;
      for (std::size_t i = 0; i < m.peaks.size(); ++i) {
        sum += m.peaks[i];
        s.area += m.areas[i];
        s.span += m.durations[i];
      }
      const double mean = sum / static_cast<double>(m.peaks.size());
      double m2 = 0.0;
      for (double x : m.peaks) m2 += (x - mean) * (x - mean);
      s.merge(m.peaks.size(), mean, m2);
    }
  });

  std::vector<SimEstimates> result;
  for (int q = 0; q < k; ++q) {
    QueueSummary merged;
    for (const auto& p : parts) {
      const auto& s = p[static_cast<std::size_t>(q)];
      merged.batches.insert(merged.batches.end(), s.batches.begin(), s.batches.end());
      merged.merge(s.n, s.mean, s.m2);
      merged.area += s.area;
      merged.span += s.span;
    }
    result.push_back(summarize(merged));
  }
  return result;
}

SimEstimates simulate_iid(const IidVacationModel& model, Policy policy, const SimConfig& config) {
  return simulate_polling(single_queue_model(model), policy, config).front();
}

}  // namespace agefresh
