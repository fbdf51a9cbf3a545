#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace fluidq {

struct Atom {
  double location = 0.0;
  double weight = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite nonnegative measure on [0, inf) made of weighted point masses.
///
/// Atoms are kept sorted by location with coincident locations merged, so two
/// measures are equal exactly when their atom lists compare equal.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;

  /// Throws ConfigError on negative/non-finite locations or nonpositive weights.
  explicit AtomicMeasure(std::vector<Atom> atoms);

  /// Unit (or `weight`) mass at every location, e.g. a counting measure.
  static AtomicMeasure counting(std::span<const double> locations, double weight = 1.0);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double total_mass() const;

  AtomicMeasure scaled(double factor) const;

  friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

/// m([x, inf)); atoms sitting exactly at x are included.
double tail(const AtomicMeasure& m, double x);

/// The measure C -> m(C + s). Atoms that land at or below zero are dropped.
AtomicMeasure shift_tail(const AtomicMeasure& m, double s);

/// True when m1(A) <= m2(A^eps) + eps and m2(A) <= m1(A^eps) + eps for every
/// closed A, with A^eps the open eps-enlargement.
bool prohorov_condition(const AtomicMeasure& m1, const AtomicMeasure& m2, double eps);

/// Prohorov distance by bisection on eps. The value returned is an upper bound
/// within `tolerance` of the infimum; equal measures give exactly 0.
double prohorov(const AtomicMeasure& m1, const AtomicMeasure& m2, double tolerance = 1e-9);

/// x -> mu([x, inf)) sampled on a grid starting at 0, linear in between and
/// constant past the last grid point.
class TailFunction {
 public:
  TailFunction() = default;
  TailFunction(std::vector<double> grid, std::vector<double> values);

  static TailFunction sample(const AtomicMeasure& m, std::vector<double> grid);

  double operator()(double x) const;

  std::span<const double> grid() const { return grid_; }
  std::span<const double> values() const { return values_; }

  /// Largest slope magnitude between neighbouring grid points.
  double lipschitz() const;

  friend bool operator==(const TailFunction&, const TailFunction&) = default;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

// Delimited text rows, one atom / grid point per line.
void write_csv(std::ostream& out, const AtomicMeasure& m);
void write_csv(std::ostream& out, const TailFunction& f);

}  // namespace fluidq
