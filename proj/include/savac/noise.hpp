#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "savac/fem.hpp"
#include "savac/potential.hpp"

namespace savac {

/// One retained mode of the Q-Wiener process: g_k(x) in 1-D, g_k(x) g_l(y) in
/// 2-D, with amplitude lambda (lambda_k lambda_l for tensor modes).
struct ModeSpec {
  std::array<int, 2> index{0, 0};
  double amplitude = 1.0;

  friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

struct NoiseModel {
  int dim = 1;
  std::vector<ModeSpec> modes;
  std::uint64_t master_seed = 0;

  /// Modes |k|, |l| <= 3 with lambda_0 = lambda_{+-1} = 1, lambda_{+-2} = 1/4,
  /// lambda_{+-3} = 1/9; 7 modes in 1-D, the 49 tensor modes in 2-D.
  static std::vector<ModeSpec> default_modes(int dim);
  static double default_lambda(int k);

  void validate() const;
};

/// Periodic Laplacian eigenfunctions: sqrt2 cos(2 pi k x) for k >= 1, 1 for
/// k = 0, sqrt2 sin(2 pi k x) for k <= -1.
double eigenfunction(int k, double x);
double eigenfunction(const std::array<int, 2>& index, const Point& p, int dim);

/// Brownian increments for every mode of one sample, stored step-major.
struct NoisePath {
  std::uint64_t sample_id = 0;
  double tau = 0.0;
  std::size_t steps = 0;
  std::size_t modes = 0;
  std::vector<double> increments;

  double increment(std::size_t step, std::size_t mode) const { return increments[step * modes + mode]; }
  std::span<const double> step_increments(std::size_t step) const {
    return {increments.data() + step * modes, modes};
  }
};

/// Seed of the (master, sample, mode) stream:
///   splitmix64(master ^ splitmix64(sample ^ splitmix64(mode + 0x9E3779B97F4A7C15)))
/// where splitmix64 is the SplitMix64 output finalizer.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t sample_id, std::uint64_t mode_rank);

/// Each mode draws from its own std::mt19937_64 seeded with stream_seed();
/// standard normals come from the Box-Muller transform applied to consecutive
/// pairs of 53-bit uniforms in (0, 1), and are scaled by sqrt(tau_fine).
NoisePath generate_increments(const NoiseModel& model, std::uint64_t sample_id, std::size_t n_fine_steps,
                              double tau_fine);

/// Sums consecutive blocks of `factor` increments. Throws std::invalid_argument
/// unless factor >= 1 divides path.steps.
NoisePath coarsen(const NoisePath& path, std::size_t factor);

/// Eigenfunction values of a NoiseModel at the nodes of one mesh.
class ModeBasis {
 public:
  ModeBasis(const NoiseModel& model, const TorusMesh& mesh);

  std::size_t mode_count() const { return modes_.size(); }
  std::span<const ModeSpec> modes() const { return modes_; }
  std::size_t node_count() const { return node_count_; }

  /// Nodal values of sum_m weights[m] * g_m.
  FieldVector combine(std::span<const double> weights) const;

 private:
  std::span<const double> axis_values(int k) const;

  int dim_;
  int level_;
  std::size_t per_axis_;
  std::size_t node_count_;
  std::vector<ModeSpec> modes_;
  int max_index_ = 0;
  // axis_[k + max_index_] holds g_k at the grid coordinates of one axis.
  std::vector<std::vector<double>> axis_;
  // 2-D: modes grouped by their y index.
  std::vector<std::pair<int, std::vector<std::size_t>>> y_groups_;
};

/// w_i = sum_modes lambda * (sum of increments in [first_step, last_step)) * g(x_i).
FieldVector noise_field(const ModeBasis& basis, const NoisePath& path, std::size_t first_step,
                        std::size_t last_step);
FieldVector noise_field(const NoiseModel& model, const NoisePath& path, std::size_t first_step,
                        std::size_t last_step, const TorusMesh& mesh);

/// Nodal product rho(phi_i) w_i, i.e. Phi_h(phi) applied to the increment.
FieldVector apply_phi_h(const FieldVector& phi_prev, const FieldVector& w, const PotentialParams& params);

/// CSV rows: sample,mode_rank,step,increment.
void write_path_csv(std::ostream& os, const NoisePath& path, bool header = true);

}  // namespace savac
