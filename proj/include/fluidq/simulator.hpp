#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "fluidq/distributions.hpp"
#include "fluidq/measures.hpp"

namespace fluidq::sim {

enum class EventKind { arrival, start_service, departure };

const char* to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::arrival;
  std::int64_t customer = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct PendingArrival {
  double time = std::numeric_limits<double>::infinity();
  double requirement = 0.0;
};

/// Produces arrivals in time order; an infinite time means no more arrivals.
using ArrivalFeed = std::function<PendingArrival()>;

ArrivalFeed scheduled_arrivals(std::vector<PendingArrival> arrivals);
/// Renewal arrivals with i.i.d. requirements. `rng` must outlive the feed.
ArrivalFeed renewal_arrivals(ArrivalLaw inter_arrival, ServiceLaw service, Rng& rng);

struct InitialState {
  std::vector<double> residuals;            // customers in service at time 0
  std::vector<double> queued_requirements;  // waiting customers, head first
};

/// Build the n-th system's initial state: round(n F(0)) residuals drawn from
/// F / F(0) and round(n Q0) queued requirements drawn from the service law.
InitialState sample_initial_state(int servers, const InitialTail& tail, double q0, const ServiceLaw& service,
                                  Rng& rng);

struct CustomerRecord {
  std::int64_t index = 0;
  double requirement = 0.0;
  double start = std::numeric_limits<double>::quiet_NaN();
  double departure = std::numeric_limits<double>::quiet_NaN();
};

struct PathSample {
  double time = 0.0;
  std::int64_t X = 0;
  std::int64_t Q = 0;
  std::int64_t Z = 0;
  std::int64_t B = 0;
  std::int64_t E = 0;
  std::int64_t D = 0;
  double S = 0.0;

  friend bool operator==(const PathSample&, const PathSample&) = default;
};

enum class StepOutcome { departure, arrival, idle };

/// State of the n-server FCFS queue where every busy server drains work at
/// rate k(X / n).
///
/// In-service customers are stored by completion level: the value the
/// cumulative service S(0, t) must reach for the customer to finish. The
/// residual requirement at time t is then level - S(0, t), so draining all
/// servers is a single scalar update.
class SimState {
 public:
  static SimState init(int servers, const InitialState& initial);

  int servers() const { return servers_; }
  double clock() const { return clock_; }
  double cumulative_service() const { return service_; }
  std::int64_t in_service() const { return static_cast<std::int64_t>(busy_.size()); }
  std::int64_t queue_length() const { return static_cast<std::int64_t>(queue_.size()); }
  std::int64_t customers() const { return in_service() + queue_length(); }
  std::int64_t arrivals() const { return arrivals_; }
  std::int64_t departures() const { return departures_; }
  std::int64_t last_started() const { return last_started_; }
  std::int64_t initial_customers() const { return initial_customers_; }

  double rate(const RateFunction& k) const;
  /// Time of the next service completion, +inf when nobody is in service or the rate is 0.
  double next_departure(const RateFunction& k) const;

  /// Process the earlier of the next departure and `arrival`. Departures win
  /// ties; simultaneous completions leave together in customer-index order.
  StepOutcome next_event(const PendingArrival& arrival, const RateFunction& k, std::vector<Event>& log,
                         std::vector<CustomerRecord>* customers = nullptr);

  /// Values at time t, which must not pass the next event.
  PathSample observe(double t, const RateFunction& k) const;
  /// (customer index, residual requirement) at time t, sorted by index.
  std::vector<std::pair<std::int64_t, double>> residuals(double t, const RateFunction& k) const;
  /// The measure Z_t of residual requirements of customers in service.
  AtomicMeasure residual_measure(double t, const RateFunction& k) const;

 private:
  void start_service(std::int64_t customer, double requirement, std::vector<Event>& log,
                     std::vector<CustomerRecord>* customers);
  void check_invariants() const;

  int servers_ = 1;
  double clock_ = 0.0;
  double service_ = 0.0;
  std::set<std::pair<double, std::int64_t>> busy_;
  std::deque<std::pair<std::int64_t, double>> queue_;
  std::int64_t initial_customers_ = 0;
  std::int64_t arrivals_ = 0;
  std::int64_t departures_ = 0;
  std::int64_t last_started_ = 0;
};

struct Snapshot {
  double time = 0.0;
  AtomicMeasure measure;
};

struct Trajectory {
  int servers = 1;
  std::vector<Event> events;
  std::vector<PathSample> samples;
  std::vector<Snapshot> snapshots;
  std::vector<CustomerRecord> customers;
};

struct RunOptions {
  double horizon = 0.0;
  std::vector<double> report_times;
  std::vector<double> snapshot_times;
  bool record_customers = false;
};

/// Replay events until the clock passes the horizon, sampling the paths at
/// every report time (values are right-continuous: events at a report time
/// are included).
Trajectory run(int servers, const InitialState& initial, const ArrivalFeed& feed, const RateFunction& k,
               const RunOptions& options);

struct ScaledSample {
  double time = 0.0;
  double X = 0.0;
  double Q = 0.0;
  double Z = 0.0;
  double B = 0.0;
  double S = 0.0;
};

struct ScaledTrajectory {
  int servers = 1;
  std::vector<ScaledSample> samples;
  std::vector<Snapshot> snapshots;
};

/// Fluid scaling: counts and measures divided by n.
ScaledTrajectory scale(const Trajectory& trajectory);

}  // namespace fluidq::sim
