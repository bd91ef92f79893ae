#include "savac/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace savac {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double NoiseModel::default_lambda(int k) {
  switch (std::abs(k)) {
    case 0:
    case 1:
      return 1.0;
    case 2:
      return 1.0 / 4.0;
    case 3:
      return 1.0 / 9.0;
    default:
      return 0.0;
  }
}

std::vector<ModeSpec> NoiseModel::default_modes(int dim) {
  std::vector<ModeSpec> modes;
  if (dim == 1) {
    for (int k = -3; k <= 3; ++k) modes.push_back({{k, 0}, default_lambda(k)});
  } else {
    for (int k = -3; k <= 3; ++k) {
      for (int l = -3; l <= 3; ++l) modes.push_back({{k, l}, default_lambda(k) * default_lambda(l)});
    }
  }
  return modes;
}

void NoiseModel::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("noise: dim must be 1 or 2");
  for (const auto& m : modes) {
    if (!(m.amplitude > 0.0)) throw std::invalid_argument("noise: mode amplitudes must be positive");
    if (dim == 1 && m.index[1] != 0) throw std::invalid_argument("noise: 1-D modes carry a single index");
  }
  for (std::size_t a = 0; a < modes.size(); ++a) {
    for (std::size_t b = a + 1; b < modes.size(); ++b) {
      if (modes[a].index == modes[b].index) throw std::invalid_argument("noise: duplicate mode index");
    }
  }
}

double eigenfunction(int k, double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (k == 0) return 1.0;
  if (k > 0) return std::numbers::sqrt2 * std::cos(two_pi * k * x);
  return std::numbers::sqrt2 * std::sin(two_pi * k * x);
}

double eigenfunction(const std::array<int, 2>& index, const Point& p, int dim) {
  const double gx = eigenfunction(index[0], p[0]);
  return dim == 1 ? gx : gx * eigenfunction(index[1], p[1]);
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t sample_id, std::uint64_t mode_rank) {
  return splitmix64(master_seed ^ splitmix64(sample_id ^ splitmix64(mode_rank + 0x9E3779B97F4A7C15ULL)));
}

NoisePath generate_increments(const NoiseModel& model, std::uint64_t sample_id, std::size_t n_fine_steps,
                              double tau_fine) {
  if (n_fine_steps < 1) throw std::invalid_argument("noise: need at least one fine step");
  if (!(tau_fine > 0.0)) throw std::invalid_argument("noise: fine time step must be positive");

  NoisePath path;
  path.sample_id = sample_id;
  path.tau = tau_fine;
  path.steps = n_fine_steps;
  path.modes = model.modes.size();
  path.increments.assign(path.steps * path.modes, 0.0);

  const double scale = std::sqrt(tau_fine);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t m = 0; m < path.modes; ++m) {
    std::mt19937_64 rng(stream_seed(model.master_seed, sample_id, m));
    for (std::size_t s = 0; s < path.steps; s += 2) {
      const double radius = std::sqrt(-2.0 * std::log(open_uniform(rng)));
      const double angle = two_pi * open_uniform(rng);
      path.increments[s * path.modes + m] = scale * radius * std::cos(angle);
      if (s + 1 < path.steps) path.increments[(s + 1) * path.modes + m] = scale * radius * std::sin(angle);
    }
  }
  return path;
}

NoisePath coarsen(const NoisePath& path, std::size_t factor) {
  if (factor < 1 || path.steps % factor != 0) {
    throw std::invalid_argument("noise: coarsening factor " + std::to_string(factor) + " does not divide " +
                                std::to_string(path.steps) + " fine steps");
  }
  if (factor == 1) return path;
  NoisePath out;
  out.sample_id = path.sample_id;
  out.tau = path.tau * static_cast<double>(factor);
  out.steps = path.steps / factor;
  out.modes = path.modes;
  out.increments.assign(out.steps * out.modes, 0.0);
  for (std::size_t s = 0; s < out.steps; ++s) {
    for (std::size_t m = 0; m < out.modes; ++m) {
      double sum = 0.0;
      for (std::size_t f = s * factor; f < (s + 1) * factor; ++f) sum += path.increment(f, m);
      out.increments[s * out.modes + m] = sum;
    }
  }
  return out;
}

ModeBasis::ModeBasis(const NoiseModel& model, const TorusMesh& mesh)
    : dim_(mesh.dim()),
      level_(mesh.level()),
      per_axis_(mesh.nodes_per_axis()),
      node_count_(mesh.node_count()),
      modes_(model.modes) {
  if (model.dim != mesh.dim()) throw std::invalid_argument("noise: model and mesh dimensions differ");
  for (const auto& m : modes_) max_index_ = std::max({max_index_, std::abs(m.index[0]), std::abs(m.index[1])});
  axis_.resize(static_cast<std::size_t>(2 * max_index_ + 1));
  for (int k = -max_index_; k <= max_index_; ++k) {
    auto& values = axis_[static_cast<std::size_t>(k + max_index_)];
    values.resize(per_axis_);
    for (std::size_t i = 0; i < per_axis_; ++i) values[i] = eigenfunction(k, static_cast<double>(i) * mesh.spacing());
  }
  if (dim_ == 2) {
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const int l = modes_[m].index[1];
      auto it = std::find_if(y_groups_.begin(), y_groups_.end(), [l](const auto& g) { return g.first == l; });
      if (it == y_groups_.end()) {
        y_groups_.push_back({l, {}});
        it = std::prev(y_groups_.end());
      }
      it->second.push_back(m);
    }
  }
}

std::span<const double> ModeBasis::axis_values(int k) const {
  return axis_[static_cast<std::size_t>(k + max_index_)];
}

FieldVector ModeBasis::combine(std::span<const double> weights) const {
  if (weights.size() != modes_.size()) throw std::invalid_argument("noise: weight count differs from mode count");
  FieldVector out(dim_, level_, node_count_, 0.0);
  if (dim_ == 1) {
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const double w = weights[m];
      if (w == 0.0) continue;
      const auto g = axis_values(modes_[m].index[0]);
      for (std::size_t i = 0; i < node_count_; ++i) out[i] += w * g[i];
    }
    return out;
  }
  // Separable evaluation: w(x, y) = sum_l g_l(y) * (sum_k c_kl g_k(x)).
  std::vector<double> row(per_axis_);
  for (const auto& [l, members] : y_groups_) {
    std::fill(row.begin(), row.end(), 0.0);
    bool active = false;
    for (const auto m : members) {
      const double w = weights[m];
      if (w == 0.0) continue;
      active = true;
      const auto g = axis_values(modes_[m].index[0]);
      for (std::size_t i = 0; i < per_axis_; ++i) row[i] += w * g[i];
    }
    if (!active) continue;
    const auto gy = axis_values(l);
    for (std::size_t j = 0; j < per_axis_; ++j) {
      double* dst = out.values.data() + j * per_axis_;
      for (std::size_t i = 0; i < per_axis_; ++i) dst[i] += gy[j] * row[i];
    }
  }
  return out;
}

FieldVector noise_field(const ModeBasis& basis, const NoisePath& path, std::size_t first_step,
                        std::size_t last_step) {
  if (first_step > last_step || last_step > path.steps) {
    throw std::invalid_argument("noise: step range outside the path");
  }
  if (path.modes != basis.mode_count()) throw std::invalid_argument("noise: path and basis mode counts differ");
  std::vector<double> weights(path.modes, 0.0);
  for (std::size_t s = first_step; s < last_step; ++s) {
    for (std::size_t m = 0; m < path.modes; ++m) weights[m] += path.increment(s, m);
  }
  const auto modes = basis.modes();
  for (std::size_t m = 0; m < path.modes; ++m) weights[m] *= modes[m].amplitude;
  return basis.combine(weights);
}

FieldVector noise_field(const NoiseModel& model, const NoisePath& path, std::size_t first_step,
                        std::size_t last_step, const TorusMesh& mesh) {
  return noise_field(ModeBasis(model, mesh), path, first_step, last_step);
}

FieldVector apply_phi_h(const FieldVector& phi_prev, const FieldVector& w, const PotentialParams& params) {
  if (!phi_prev.same_shape(w)) throw std::invalid_argument("apply_phi_h: shape mismatch");
  FieldVector out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rho(phi_prev[i], params) * w[i];
  return out;
}

void write_path_csv(std::ostream& os, const NoisePath& path, bool header) {
  if (header) os << "sample,mode_rank,step,increment\n";
  char buf[64];
  for (std::size_t m = 0; m < path.modes; ++m) {
    for (std::size_t s = 0; s < path.steps; ++s) {
      std::snprintf(buf, sizeof buf, "%.17g", path.increment(s, m));
      os << path.sample_id << ',' << m << ',' << s << ',' << buf << '\n';
    }
  }
}

}  // namespace savac
