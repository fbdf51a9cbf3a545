#include "fluidq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "fluidq/error.hpp"

namespace fluidq::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A residual within this distance of zero counts as completed.
constexpr double kResidualTolerance = 1e-12;

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::arrival:
      return "arrival";
    case EventKind::start_service:
      return "start_service";
    case EventKind::departure:
      return "departure";
  }
  return "?";
}

ArrivalFeed scheduled_arrivals(std::vector<PendingArrival> arrivals) {
  if (!std::is_sorted(arrivals.begin(), arrivals.end(),
                      [](const PendingArrival& a, const PendingArrival& b) { return a.time < b.time; })) {
    throw ConfigError("scheduled arrivals must be in time order");
  }
  return [arrivals = std::move(arrivals), next = std::size_t{0}]() mutable {
    if (next == arrivals.size()) return PendingArrival{};
    return arrivals[next++];
  };
}

ArrivalFeed renewal_arrivals(ArrivalLaw inter_arrival, ServiceLaw service, Rng& rng) {
  return [inter_arrival = std::move(inter_arrival), service = std::move(service), &rng, clock = 0.0]() mutable {
    clock += inter_arrival.sample(rng);
    return PendingArrival{clock, service.sample(rng)};
  };
}

InitialState sample_initial_state(int servers, const InitialTail& tail, double q0, const ServiceLaw& service,
                                  Rng& rng) {
  InitialState state;
  const auto in_service = static_cast<std::size_t>(std::llround(servers * tail.mass()));
  const auto queued = static_cast<std::size_t>(std::llround(servers * q0));
  if (in_service > static_cast<std::size_t>(servers)) {
    throw ConfigError("initial tail mass exceeds the number of servers");
  }
  state.residuals.reserve(in_service);
  for (std::size_t i = 0; i < in_service; ++i) state.residuals.push_back(tail.sample(rng));
  state.queued_requirements.reserve(queued);
  for (std::size_t i = 0; i < queued; ++i) state.queued_requirements.push_back(service.sample(rng));
  return state;
}

SimState SimState::init(int servers, const InitialState& initial) {
  if (servers < 1) throw ConfigError("number of servers must be positive");
  if (initial.residuals.size() > static_cast<std::size_t>(servers)) {
    throw ConfigError(fmt::format("{} initial residuals for {} servers", initial.residuals.size(), servers));
  }
  if (!initial.queued_requirements.empty() && initial.residuals.size() != static_cast<std::size_t>(servers)) {
    throw ConfigError("initial queue with idle servers violates work conservation");
  }
  SimState s;
  s.servers_ = servers;
  const auto x0 = static_cast<std::int64_t>(initial.residuals.size() + initial.queued_requirements.size());
  const auto q0 = static_cast<std::int64_t>(initial.queued_requirements.size());
  s.initial_customers_ = x0;
  // Customers present at time 0 carry indices -X0+1, ..., 0; those in
  // service come first.
  std::int64_t index = -x0 + 1;
  for (double v : initial.residuals) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("initial residuals must be positive");
    s.busy_.emplace(v, index++);
  }
  for (double v : initial.queued_requirements) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("service requirements must be positive");
    s.queue_.emplace_back(index++, v);
  }
  s.last_started_ = -q0;
  s.check_invariants();
  return s;
}

double SimState::rate(const RateFunction& k) const {
  return k(static_cast<double>(customers()) / servers_);
}

double SimState::next_departure(const RateFunction& k) const {
  if (busy_.empty()) return kInf;
  const double r = rate(k);
  if (r <= 0.0) return kInf;
  const double residual = std::max(busy_.begin()->first - service_, 0.0);
  return clock_ + residual / r;
}

void SimState::start_service(std::int64_t customer, double requirement, std::vector<Event>& log,
                             std::vector<CustomerRecord>* customers) {
  if (customer != last_started_ + 1) throw std::logic_error("service start out of FCFS order");
  busy_.emplace(service_ + requirement, customer);
  last_started_ = customer;
  log.push_back({clock_, EventKind::start_service, customer});
  if (customers) (*customers)[static_cast<std::size_t>(customer + initial_customers_ - 1)].start = clock_;
}

StepOutcome SimState::next_event(const PendingArrival& arrival, const RateFunction& k, std::vector<Event>& log,
                                 std::vector<CustomerRecord>* customers) {
  const double departure = next_departure(k);
  if (departure <= arrival.time && departure < kInf) {
    const double level = busy_.begin()->first;
    if (level < service_ - kResidualTolerance) {
      throw std::logic_error(fmt::format("negative residual {} at t={}", level - service_, clock_));
    }
    clock_ = departure;
    service_ = std::max(service_, level);

    std::vector<std::int64_t> leaving;
    while (!busy_.empty() && busy_.begin()->first <= service_ + kResidualTolerance) {
      leaving.push_back(busy_.begin()->second);
      busy_.erase(busy_.begin());
    }
    std::sort(leaving.begin(), leaving.end());
    for (std::int64_t c : leaving) {
      log.push_back({clock_, EventKind::departure, c});
      if (customers) (*customers)[static_cast<std::size_t>(c + initial_customers_ - 1)].departure = clock_;
    }
    departures_ += static_cast<std::int64_t>(leaving.size());

    while (busy_.size() < static_cast<std::size_t>(servers_) && !queue_.empty()) {
      auto [c, v] = queue_.front();
      queue_.pop_front();
      start_service(c, v, log, customers);
    }
    check_invariants();
    return StepOutcome::departure;
  }

  if (arrival.time < kInf) {
    if (arrival.time < clock_) throw std::logic_error("arrival scheduled in the past");
    if (!(arrival.requirement > 0.0)) throw ConfigError("service requirements must be positive");
    service_ += rate(k) * (arrival.time - clock_);
    clock_ = arrival.time;
    const std::int64_t c = ++arrivals_;
    log.push_back({clock_, EventKind::arrival, c});
    if (customers) customers->push_back({c, arrival.requirement});
    if (busy_.size() < static_cast<std::size_t>(servers_)) {
      start_service(c, arrival.requirement, log, customers);
    } else {
      queue_.emplace_back(c, arrival.requirement);
    }
    check_invariants();
    return StepOutcome::arrival;
  }
  return StepOutcome::idle;
}

PathSample SimState::observe(double t, const RateFunction& k) const {
  PathSample p;
  p.time = t;
  p.X = customers();
  p.Q = queue_length();
  p.Z = in_service();
  p.B = last_started_;
  p.E = arrivals_;
  p.D = departures_;
  p.S = service_ + rate(k) * (t - clock_);
  return p;
}

std::vector<std::pair<std::int64_t, double>> SimState::residuals(double t, const RateFunction& k) const {
  const double level = service_ + rate(k) * (t - clock_);
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(busy_.size());
  for (const auto& [l, c] : busy_) out.emplace_back(c, std::max(l - level, 0.0));
  std::sort(out.begin(), out.end());
  return out;
}

AtomicMeasure SimState::residual_measure(double t, const RateFunction& k) const {
  const double level = service_ + rate(k) * (t - clock_);
  std::vector<Atom> atoms;
  atoms.reserve(busy_.size());
  // A residual that has reached 0 belongs to a customer already gone.
  for (const auto& entry : busy_) {
    if (entry.first - level > 0.0) atoms.push_back({entry.first - level, 1.0});
  }
  return AtomicMeasure(std::move(atoms));
}

void SimState::check_invariants() const {
  const auto busy = static_cast<std::int64_t>(busy_.size());
  const auto queued = static_cast<std::int64_t>(queue_.size());
  const std::int64_t x = busy + queued;
  if (busy > servers_) throw std::logic_error("more customers in service than servers");
  if (queued > 0 && busy != servers_) throw std::logic_error("work conservation violated");
  if (queued != std::max<std::int64_t>(x - servers_, 0)) throw std::logic_error("queue length != (X - n)^+");
  if (x != initial_customers_ + arrivals_ - departures_) throw std::logic_error("X != X0 + E - D");
  if (last_started_ != arrivals_ - queued) throw std::logic_error("B != E - Q");
}

Trajectory run(int servers, const InitialState& initial, const ArrivalFeed& feed, const RateFunction& k,
               const RunOptions& options) {
  SimState state = SimState::init(servers, initial);
  Trajectory traj;
  traj.servers = servers;

  std::vector<CustomerRecord>* records = nullptr;
  if (options.record_customers) {
    records = &traj.customers;
    std::int64_t index = -state.initial_customers() + 1;
    for (double v : initial.residuals) traj.customers.push_back({index++, v, 0.0});
    for (double v : initial.queued_requirements) traj.customers.push_back({index++, v});
  }

  struct Observation {
    double time;
    bool report;
    bool snapshot;
  };
  std::vector<Observation> obs;
  for (double t : options.report_times) {
    if (t <= options.horizon) obs.push_back({t, true, false});
  }
  for (double t : options.snapshot_times) {
    if (t <= options.horizon) obs.push_back({t, false, true});
  }
  std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) { return a.time < b.time; });

  auto record = [&](const Observation& o) {
    if (o.report) traj.samples.push_back(state.observe(o.time, k));
    if (o.snapshot) traj.snapshots.push_back({o.time, state.residual_measure(o.time, k)});
  };

  std::size_t p = 0;
  PendingArrival next = feed();
  while (true) {
    const double event_time = std::min(state.next_departure(k), next.time);
    while (p < obs.size() && obs[p].time < event_time) record(obs[p++]);
    if (!(event_time <= options.horizon)) break;
    if (state.next_event(next, k, traj.events, records) == StepOutcome::arrival) next = feed();
  }
  while (p < obs.size()) record(obs[p++]);
  return traj;
}

ScaledTrajectory scale(const Trajectory& trajectory) {
  const double n = trajectory.servers;
  ScaledTrajectory out;
  out.servers = trajectory.servers;
  out.samples.reserve(trajectory.samples.size());
  for (const PathSample& p : trajectory.samples) {
    out.samples.push_back({p.time, p.X / n, p.Q / n, p.Z / n, p.B / n, p.S});
  }
  for (const Snapshot& s : trajectory.snapshots) {
    out.snapshots.push_back({s.time, s.measure.empty() ? AtomicMeasure{} : s.measure.scaled(1.0 / n)});
  }
  return out;
}

}  // namespace fluidq::sim
