#include "saca/reachability_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saca::reach::kernels {

namespace {

inline double backup_cell(const BackupProblem& p, std::span<const double> in, std::size_t c) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t base = c * p.actions * p.corners;
  for (std::size_t a = 0; a < p.actions; ++a) {
    const std::size_t off = base + a * p.corners;
    double v = 0.0;
    for (std::size_t k = 0; k < p.corners; ++k) v += p.weight[off + k] * in[p.index[off + k]];
    best = std::min(best, v);
  }
  const double h = p.h[c];
  return (1.0 - p.gamma) * h + p.gamma * std::max(h, best);
}

}  // namespace

double backup_sweep_serial(const BackupProblem& p, std::span<const double> in, std::span<double> out) {
  double residual = 0.0;
  const std::size_t n = p.h.size();
  for (std::size_t c = 0; c < n; ++c) {
    out[c] = backup_cell(p, in, c);
    residual = std::max(residual, std::abs(out[c] - in[c]));
  }
  return residual;
}

double backup_sweep_omp(const BackupProblem& p, std::span<const double> in, std::span<double> out) {
  double residual = 0.0;
  const long n = static_cast<long>(p.h.size());
#pragma omp parallel for schedule(static) reduction(max : residual)
  for (long c = 0; c < n; ++c) {
    const auto cell = static_cast<std::size_t>(c);
    out[cell] = backup_cell(p, in, cell);
    residual = std::max(residual, std::abs(out[cell] - in[cell]));
  }
  return residual;
}

}  // namespace saca::reach::kernels
