#include "fluidq/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fluidq::kernels {

namespace {

// Trapezoid-weighted integrand summed over j in [begin, end) for the point i.
double rhs_block(const fluid::FluidParams& p, std::span<const double> S, std::span<const double> drain,
                 std::size_t i, std::size_t begin, std::size_t end) {
  const double si = S[i];
  double sum = 0.0;
  for (std::size_t j = begin; j < end; ++j) {
    const auto [survival, density] = p.service.tail_and_density(si - S[j]);
    const double w = (j == 0 || j == i) ? 0.5 * p.dt : p.dt;
    sum += w * (p.lambda * survival + drain[j] * density);
  }
  return sum;
}

std::size_t block_count(std::size_t i) { return (i + 1 + kBlock - 1) / kBlock; }

double rhs_point_serial(const fluid::FluidParams& p, std::span<const double> S, std::span<const double> drain,
                        std::size_t i) {
  double total = 0.0;
  if (i > 0) {
    for (std::size_t b = 0; b < block_count(i); ++b) {
      total += rhs_block(p, S, drain, i, b * kBlock, std::min((b + 1) * kBlock, i + 1));
    }
  }
  return p.h1(S[i]) + total;
}

// Stieltjes sum for one (i, x) pair, in the same block order as the RHS.
double tail_point(const fluid::FluidParams& p, std::span<const double> S, std::span<const double> B,
                  std::size_t i, double x) {
  const double si = S[i];
  double total = 0.0;
  for (std::size_t begin = 0; begin < i; begin += kBlock) {
    const std::size_t end = std::min(begin + kBlock, i);
    double sum = 0.0;
    for (std::size_t j = begin; j < end; ++j) {
      const double mid = 0.5 * (S[j] + S[j + 1]);
      sum += p.service.tail(x + (si - mid)) * (B[j + 1] - B[j]);
    }
    total += sum;
  }
  return p.initial(x + si) + total;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void fixed_point_rhs_serial(const fluid::FluidParams& params, std::span<const double> S,
                            std::span<const double> drain, std::size_t first, std::size_t last,
                            std::span<double> out) {
  for (std::size_t i = first; i <= last; ++i) out[i - first] = rhs_point_serial(params, S, drain, i);
}

void fixed_point_rhs_parallel(const fluid::FluidParams& params, std::span<const double> S,
                              std::span<const double> drain, std::size_t first, std::size_t last,
                              std::span<double> out) {
  const auto points = static_cast<std::ptrdiff_t>(last - first + 1);
  if (points >= 2 * max_threads()) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t k = 0; k < points; ++k) {
      const std::size_t i = first + static_cast<std::size_t>(k);
      out[static_cast<std::size_t>(k)] = rhs_point_serial(params, S, drain, i);
    }
    return;
  }
  // Few points: split each sum into blocks and add the partials in order.
  std::vector<double> partial;
  for (std::size_t i = first; i <= last; ++i) {
    if (i == 0) {
      out[0] = params.h1(S[0]);
      continue;
    }
    const auto blocks = static_cast<std::ptrdiff_t>(block_count(i));
    partial.assign(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < blocks; ++b) {
      const auto begin = static_cast<std::size_t>(b) * kBlock;
      partial[static_cast<std::size_t>(b)] = rhs_block(params, S, drain, i, begin, std::min(begin + kBlock, i + 1));
    }
    double total = 0.0;
    for (double v : partial) total += v;
    out[i - first] = params.h1(S[i]) + total;
  }
}

void tail_surface_serial(const fluid::FluidParams& params, std::span<const double> S, std::span<const double> B,
                         std::span<const std::size_t> rows, std::span<const double> xs, std::span<double> out) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < xs.size(); ++c) out[r * xs.size() + c] = tail_point(params, S, B, rows[r], xs[c]);
  }
}

void tail_surface_parallel(const fluid::FluidParams& params, std::span<const double> S,
                           std::span<const double> B, std::span<const std::size_t> rows,
                           std::span<const double> xs, std::span<double> out) {
  const std::size_t cols = xs.size();
  const auto cells = static_cast<std::ptrdiff_t>(rows.size() * cols);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < cells; ++k) {
    const auto r = static_cast<std::size_t>(k) / cols;
    const auto c = static_cast<std::size_t>(k) % cols;
    out[static_cast<std::size_t>(k)] = tail_point(params, S, B, rows[r], xs[c]);
  }
}

}  // namespace fluidq::kernels
