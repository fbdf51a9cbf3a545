#include "fluidq/measures.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "fluidq/error.hpp"

namespace fluidq {

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.location) || a.location < 0.0) {
      throw ConfigError(fmt::format("atom location {} outside [0, inf)", a.location));
    }
    if (!std::isfinite(a.weight) || a.weight <= 0.0) {
      throw ConfigError(fmt::format("atom weight {} must be positive", a.weight));
    }
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  atoms_.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().location == a.location) {
      atoms_.back().weight += a.weight;
    } else {
      atoms_.push_back(a);
    }
  }
}

AtomicMeasure AtomicMeasure::counting(std::span<const double> locations, double weight) {
  std::vector<Atom> atoms;
  atoms.reserve(locations.size());
  for (double x : locations) atoms.push_back({x, weight});
  return AtomicMeasure(std::move(atoms));
}

double AtomicMeasure::total_mass() const {
  double sum = 0.0;
  for (const Atom& a : atoms_) sum += a.weight;
  return sum;
}

AtomicMeasure AtomicMeasure::scaled(double factor) const {
  if (!(factor > 0.0)) throw ConfigError("measure scale factor must be positive");
  AtomicMeasure out;
  out.atoms_ = atoms_;
  for (Atom& a : out.atoms_) a.weight *= factor;
  return out;
}

double tail(const AtomicMeasure& m, double x) {
  auto atoms = m.atoms();
  auto it = std::lower_bound(atoms.begin(), atoms.end(), x,
                             [](const Atom& a, double v) { return a.location < v; });
  double sum = 0.0;
  for (; it != atoms.end(); ++it) sum += it->weight;
  return sum;
}

AtomicMeasure shift_tail(const AtomicMeasure& m, double s) {
  if (s < 0.0) throw ConfigError("shift must be nonnegative");
  std::vector<Atom> out;
  out.reserve(m.size());
  for (const Atom& a : m.atoms()) {
    const double loc = a.location - s;
    if (loc > 0.0) out.push_back({loc, a.weight});
  }
  return AtomicMeasure(std::move(out));
}

namespace {

// Cumulative weights of a measure, for O(log n) interval masses.
class MassIndex {
 public:
  explicit MassIndex(const AtomicMeasure& m) {
    locations_.reserve(m.size());
    prefix_.assign(1, 0.0);
    for (const Atom& a : m.atoms()) {
      locations_.push_back(a.location);
      prefix_.push_back(prefix_.back() + a.weight);
    }
  }

  // mass of atoms with location < v
  double below(double v) const {
    auto k = std::lower_bound(locations_.begin(), locations_.end(), v) - locations_.begin();
    return prefix_[static_cast<std::size_t>(k)];
  }
  // mass of atoms with location <= v
  double at_or_below(double v) const {
    auto k = std::upper_bound(locations_.begin(), locations_.end(), v) - locations_.begin();
    return prefix_[static_cast<std::size_t>(k)];
  }
  double open(double a, double b) const { return b > a ? below(b) - at_or_below(a) : 0.0; }
  double closed_open(double a, double b) const { return b > a ? below(b) - below(a) : 0.0; }

 private:
  std::vector<double> locations_;
  std::vector<double> prefix_;
};

// sup over closed A of m1(A) - m2(A^eps). Only A made of atoms of m1 matter,
// and the eps-enlargements of sorted points overlap only with their
// neighbours, so a DP over the last chosen atom is exact. The overlapping
// predecessors form a sliding window handled with a monotone deque.
double excess(const AtomicMeasure& m1, const MassIndex& m2, double eps) {
  auto atoms = m1.atoms();
  const std::size_t k = atoms.size();
  std::vector<double> best(k);
  std::vector<double> carry(k);  // best[i] + m2(< s_i + eps)
  std::deque<std::size_t> window;
  std::size_t disjoint_end = 0;
  double disjoint_max = 0.0;  // empty predecessor set contributes 0
  double result = 0.0;

  for (std::size_t j = 0; j < k; ++j) {
    const double s = atoms[j].location;
    while (disjoint_end < j && atoms[disjoint_end].location + eps <= s - eps) {
      disjoint_max = std::max(disjoint_max, best[disjoint_end]);
      if (!window.empty() && window.front() == disjoint_end) window.pop_front();
      ++disjoint_end;
    }
    double value = atoms[j].weight - m2.open(s - eps, s + eps) + disjoint_max;
    if (!window.empty()) {
      value = std::max(value, atoms[j].weight - m2.below(s + eps) + carry[window.front()]);
    }
    best[j] = value;
    carry[j] = value + m2.below(s + eps);
    while (!window.empty() && carry[window.back()] <= carry[j]) window.pop_back();
    window.push_back(j);
    result = std::max(result, value);
  }
  return result;
}

}  // namespace

bool prohorov_condition(const AtomicMeasure& m1, const AtomicMeasure& m2, double eps) {
  const MassIndex i1(m1);
  const MassIndex i2(m2);
  return excess(m1, i2, eps) <= eps && excess(m2, i1, eps) <= eps;
}

double prohorov(const AtomicMeasure& m1, const AtomicMeasure& m2, double tolerance) {
  if (m1 == m2) return 0.0;
  const MassIndex i1(m1);
  const MassIndex i2(m2);
  auto holds = [&](double eps) { return excess(m1, i2, eps) <= eps && excess(m2, i1, eps) <= eps; };

  double lo = 0.0;
  double hi = std::max(m1.total_mass(), m2.total_mass());
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

TailFunction::TailFunction(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty() || grid_.size() != values_.size()) {
    throw ConfigError("tail function needs matching, nonempty grid and values");
  }
  if (grid_.front() != 0.0) throw ConfigError("tail function grid must start at 0");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!std::isfinite(grid_[i]) || !std::isfinite(values_[i])) {
      throw ConfigError("tail function entries must be finite");
    }
    if (values_[i] < 0.0) throw ConfigError("tail function values must be nonnegative");
    if (i > 0 && !(grid_[i] > grid_[i - 1])) {
      throw ConfigError("tail function grid must be strictly increasing");
    }
    if (i > 0 && values_[i] > values_[i - 1]) {
      throw ConfigError("tail function values must be nonincreasing");
    }
  }
}

TailFunction TailFunction::sample(const AtomicMeasure& m, std::vector<double> grid) {
  std::vector<double> values;
  values.reserve(grid.size());
  for (double x : grid) values.push_back(tail(m, x));
  return TailFunction(std::move(grid), std::move(values));
}

double TailFunction::operator()(double x) const {
  if (grid_.empty()) return 0.0;
  if (x <= grid_.front()) return values_.front();
  if (x >= grid_.back()) return values_.back();
  auto hi = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), x) - grid_.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - grid_[lo]) / (grid_[hi] - grid_[lo]);
  const double v = values_[lo] + w * (values_[hi] - values_[lo]);
  return std::clamp(v, values_[hi], values_[lo]);
}

double TailFunction::lipschitz() const {
  double l = 0.0;
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    l = std::max(l, (values_[i - 1] - values_[i]) / (grid_[i] - grid_[i - 1]));
  }
  return l;
}

void write_csv(std::ostream& out, const AtomicMeasure& m) {
  out << "location,weight\n";
  for (const Atom& a : m.atoms()) out << fmt::format("{:.17g},{:.17g}\n", a.location, a.weight);
}

void write_csv(std::ostream& out, const TailFunction& f) {
  out << "x,value\n";
  for (std::size_t i = 0; i < f.grid().size(); ++i) {
    out << fmt::format("{:.17g},{:.17g}\n", f.grid()[i], f.values()[i]);
  }
}

}  // namespace fluidq
