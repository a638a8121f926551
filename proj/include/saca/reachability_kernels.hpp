#ifndef SACA_REACHABILITY_KERNELS_HPP
#define SACA_REACHABILITY_KERNELS_HPP

#include <cstdint>
#include <span>

namespace saca::reach::kernels {

/// Flattened backup problem. For cell c and action a the successor stencil is
/// stored at [(c * actions + a) * corners, ... + corners).
struct BackupProblem {
  std::span<const double> h;
  std::span<const std::uint32_t> index;
  std::span<const double> weight;
  std::size_t corners{0};
  std::size_t actions{0};
  double gamma{0.99};
};

/// Reference sweep; returns max |out - in|.
double backup_sweep_serial(const BackupProblem& p, std::span<const double> in, std::span<double> out);
/// OpenMP sweep over cells. Each cell is computed exactly as in the serial
/// sweep, so results are bitwise identical.
double backup_sweep_omp(const BackupProblem& p, std::span<const double> in, std::span<double> out);

}  // namespace saca::reach::kernels

#endif
