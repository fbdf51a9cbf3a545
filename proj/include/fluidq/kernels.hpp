#pragma once

#include <cstddef>
#include <span>

#include "fluidq/fluid.hpp"

// Hot loops of the fluid solver. Every kernel has a serial reference and an
// OpenMP version; both sum in the same fixed block order, so their outputs are
// bit-identical for any thread count.
namespace fluidq::kernels {

// Summation block length along the integration variable.
inline constexpr std::size_t kBlock = 256;

/// out[i - first] = H1(S_i) + sum_j w_ij (lambda G^c(S_i - S_j) + drain_j g(S_i - S_j))
/// for i in [first, last], trapezoid weights w_ij over j = 0..i.
/// drain_j = (X_j - 1)^+ k(X_j).
void fixed_point_rhs_serial(const fluid::FluidParams& params, std::span<const double> S,
                            std::span<const double> drain, std::size_t first, std::size_t last,
                            std::span<double> out);
void fixed_point_rhs_parallel(const fluid::FluidParams& params, std::span<const double> S,
                              std::span<const double> drain, std::size_t first, std::size_t last,
                              std::span<double> out);

/// out[r * xs.size() + c] = fluid tail at grid index rows[r], level xs[c].
void tail_surface_serial(const fluid::FluidParams& params, std::span<const double> S, std::span<const double> B,
                         std::span<const std::size_t> rows, std::span<const double> xs, std::span<double> out);
void tail_surface_parallel(const fluid::FluidParams& params, std::span<const double> S,
                           std::span<const double> B, std::span<const std::size_t> rows,
                           std::span<const double> xs, std::span<double> out);

inline void fixed_point_rhs(Execution e, const fluid::FluidParams& params, std::span<const double> S,
                            std::span<const double> drain, std::size_t first, std::size_t last,
                            std::span<double> out) {
  if (e == Execution::serial) {
    fixed_point_rhs_serial(params, S, drain, first, last, out);
  } else {
    fixed_point_rhs_parallel(params, S, drain, first, last, out);
  }
}

inline void tail_surface(Execution e, const fluid::FluidParams& params, std::span<const double> S,
                         std::span<const double> B, std::span<const std::size_t> rows, std::span<const double> xs,
                         std::span<double> out) {
  if (e == Execution::serial) {
    tail_surface_serial(params, S, B, rows, xs, out);
  } else {
    tail_surface_parallel(params, S, B, rows, xs, out);
  }
}

/// Worker count the parallel kernels will use.
int max_threads();

}  // namespace fluidq::kernels
