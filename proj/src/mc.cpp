#include "savac/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

namespace savac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(sample) for every sample on `workers` threads. Failures are
// rethrown after all workers stop, lowest sample first.
template <class Fn>
void for_each_sample(std::size_t samples, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(samples);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t s = next++; s < samples && !failed; s = next++) {
      try {
        fn(s);
      } catch (...) {
        errors[s] = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(samples, 1));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string sample_context(std::size_t sample, const std::exception& e) {
  std::ostringstream msg;
  msg << "sample " << sample;
  if (const auto* pe = dynamic_cast<const PathError*>(&e)) msg << " step " << pe->step();
  msg << ": " << e.what();
  return msg.str();
}

bool same_total(double a, double b, double scale) { return std::abs(a - b) <= 1e-10 * std::max(scale, 1.0); }

double abs_sum(const NoisePath& path) {
  double s = 0.0;
  for (const double v : path.increments) s += std::abs(v);
  return s;
}

double plain_sum(const NoisePath& path) {
  double s = 0.0;
  for (const double v : path.increments) s += v;
  return s;
}

void put(std::ostream& os, const char* fmt, double v) {
  if (std::isnan(v)) return;
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  os << buf;
}

}  // namespace

std::size_t step_count(double final_time, double tau) { return integer_ratio(final_time, tau); }

std::size_t integer_ratio(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) throw std::invalid_argument("ratio of non-positive times");
  const double q = coarse / fine;
  const double rounded = std::round(q);
  if (rounded < 1.0 || std::abs(q - rounded) > 1e-9 * rounded) {
    std::ostringstream msg;
    msg << coarse << " is not an integer multiple of " << fine;
    throw std::invalid_argument(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

double ExperimentPlan::comparison_tau() const {
  if (compare_tau > 0.0) return compare_tau;
  double coarsest = 0.0;
  for (const auto& e : ladder) coarsest = std::max(coarsest, e.tau);
  return coarsest;
}

void ExperimentPlan::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  auto check_ratio = [&](double coarse, double fine, const std::string& what) {
    try {
      integer_ratio(coarse, fine);
    } catch (const std::invalid_argument&) {
      problems.push_back(what);
    }
  };

  check(dim == 1 || dim == 2, "dim must be 1 or 2");
  check(samples >= 1, "samples must be >= 1");
  check(final_time > 0.0, "final time must be positive");
  check(reference.tau > 0.0, "reference tau must be positive");
  check(reference.level >= 1, "reference level must be >= 1");
  try {
    potential.validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  try {
    noise_model().validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  if (final_time > 0.0 && reference.tau > 0.0) {
    check_ratio(final_time, reference.tau, "T / reference tau must be an integer");
  }
  for (const auto& e : ladder) {
    const std::string tag = "ladder entry (" + std::to_string(e.level) + ", " + std::to_string(e.tau) + "): ";
    check(e.level >= 1 && e.level <= reference.level, tag + "level must lie in [1, reference level]");
    check(e.tau > 0.0, tag + "tau must be positive");
    if (e.tau > 0.0 && reference.tau > 0.0) check_ratio(e.tau, reference.tau, tag + "tau must be a multiple of the reference tau");
    if (e.tau > 0.0 && final_time > 0.0) check_ratio(final_time, e.tau, tag + "T / tau must be an integer");
  }
  const double ct = comparison_tau();
  if (ct > 0.0 && final_time > 0.0) {
    check_ratio(final_time, ct, "T must be a multiple of the comparison tau");
    for (const auto& e : ladder) {
      if (e.tau > 0.0) check_ratio(ct, e.tau, "comparison tau must be a multiple of every ladder tau");
    }
  }
  if (!problems.empty()) {
    std::string all = "invalid experiment plan:";
    for (const auto& p : problems) all += "\n  " + p;
    throw std::invalid_argument(all);
  }
}

ErrorReport run_ensemble(const ExperimentPlan& plan) {
  plan.validate();
  if (plan.ladder.empty()) throw std::invalid_argument("run_ensemble: empty ladder");

  std::vector<LadderEntry> ladder = plan.ladder;
  std::stable_sort(ladder.begin(), ladder.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });

  const NoiseModel model = plan.noise_model();
  const double tau_cmp = plan.comparison_tau();
  const std::size_t n_cmp = step_count(plan.final_time, tau_cmp);
  const std::size_t n_fine = step_count(plan.final_time, plan.reference.tau);
  const std::size_t ref_stride = integer_ratio(tau_cmp, plan.reference.tau);

  const Discretization ref_disc = discretize(plan.dim, plan.reference.level);
  const ModeBasis ref_basis(model, ref_disc.mesh);
  const FieldVector ref_phi0 = initial_field(plan.initial, ref_disc.mesh, plan.potential.epsilon);

  struct Level {
    std::unique_ptr<Discretization> disc;
    std::unique_ptr<ModeBasis> basis;
    FieldVector phi0;
  };
  std::vector<Level> levels(ladder.size());
  for (std::size_t e = 0; e < ladder.size(); ++e) {
    levels[e].disc = std::make_unique<Discretization>(discretize(plan.dim, ladder[e].level));
    levels[e].basis = std::make_unique<ModeBasis>(model, levels[e].disc->mesh);
    levels[e].phi0 = initial_field(plan.initial, levels[e].disc->mesh, plan.potential.epsilon);
  }

  // per_sample[s][e] = (l2 squared, semi squared) at each comparison time.
  struct SampleErrors {
    std::vector<std::vector<double>> l2_sq;
    std::vector<std::vector<double>> semi_sq;
    bool common_path = true;
  };
  std::vector<SampleErrors> per_sample(plan.samples);

  for_each_sample(plan.samples, plan.workers, [&](std::size_t s) {
    try {
      const NoisePath fine = generate_increments(model, s, n_fine, plan.reference.tau);
      SavScheme ref_scheme(ref_disc, plan.reference.tau, plan.potential, plan.solver);
      PathRunner ref_run(ref_scheme, ref_basis, fine, ref_phi0);

      std::vector<NoisePath> paths;
      std::vector<std::unique_ptr<SavScheme>> schemes;
      std::vector<std::unique_ptr<PathRunner>> runs;
      std::vector<std::size_t> strides;
      paths.reserve(ladder.size());
      for (std::size_t e = 0; e < ladder.size(); ++e) {
        paths.push_back(coarsen(fine, integer_ratio(ladder[e].tau, plan.reference.tau)));
        strides.push_back(integer_ratio(tau_cmp, ladder[e].tau));
      }
      for (std::size_t e = 0; e < ladder.size(); ++e) {
        schemes.push_back(std::make_unique<SavScheme>(*levels[e].disc, ladder[e].tau, plan.potential, plan.solver));
        runs.push_back(std::make_unique<PathRunner>(*schemes[e], *levels[e].basis, paths[e], levels[e].phi0));
      }

      auto& out = per_sample[s];
      out.l2_sq.assign(ladder.size(), std::vector<double>(n_cmp, 0.0));
      out.semi_sq.assign(ladder.size(), std::vector<double>(n_cmp, 0.0));

      for (std::size_t j = 0; j < n_cmp; ++j) {
        for (std::size_t k = 0; k < ref_stride; ++k) ref_run.advance();
        const FieldVector& ref_phi = ref_run.state().phi;
        for (std::size_t e = 0; e < ladder.size(); ++e) {
          for (std::size_t k = 0; k < strides[e]; ++k) runs[e]->advance();
          FieldVector err = prolong(runs[e]->state().phi, levels[e].disc->mesh, ref_disc.mesh);
          for (std::size_t i = 0; i < err.size(); ++i) err[i] = ref_phi[i] - err[i];
          out.l2_sq[e][j] = lumped_inner(err, err, ref_disc.mass);
          out.semi_sq[e][j] = h1_seminorm_sq(err, ref_disc.stiffness);
        }
      }

      const double total = ref_run.consumed_increment_sum();
      const double scale = abs_sum(fine);
      out.common_path = same_total(total, plain_sum(fine), scale);
      for (const auto& run : runs) out.common_path = out.common_path && same_total(run->consumed_increment_sum(), total, scale);
      if (!out.common_path) throw std::logic_error("runs consumed different noise increments");
    } catch (const std::exception& e) {
      throw std::runtime_error(sample_context(s, e));
    }
  });

  ErrorReport report;
  report.samples = plan.samples;
  report.compare_level = plan.reference.level;
  report.compare_tau = tau_cmp;
  for (std::size_t j = 1; j <= n_cmp; ++j) report.compare_times.push_back(static_cast<double>(j) * tau_cmp);
  report.common_path_verified = true;

  const double inv_s = 1.0 / static_cast<double>(plan.samples);
  for (std::size_t e = 0; e < ladder.size(); ++e) {
    ErrorRow row;
    row.entry = ladder[e];
    row.h = std::ldexp(1.0, -ladder[e].level);
    row.mean_l2_sq.assign(n_cmp, 0.0);
    row.mean_semi_sq.assign(n_cmp, 0.0);
    for (std::size_t s = 0; s < plan.samples; ++s) {
      report.common_path_verified = report.common_path_verified && per_sample[s].common_path;
      for (std::size_t j = 0; j < n_cmp; ++j) {
        row.mean_l2_sq[j] += per_sample[s].l2_sq[e][j];
        row.mean_semi_sq[j] += per_sample[s].semi_sq[e][j];
      }
    }
    double max_l2 = 0.0;
    double h1_sum = 0.0;
    for (std::size_t j = 0; j < n_cmp; ++j) {
      row.mean_l2_sq[j] *= inv_s;
      row.mean_semi_sq[j] *= inv_s;
      max_l2 = std::max(max_l2, row.mean_l2_sq[j]);
      h1_sum += row.mean_l2_sq[j] + row.mean_semi_sq[j];
    }
    row.e_l2 = std::sqrt(max_l2);
    row.e_h1 = std::sqrt(tau_cmp * h1_sum);
    row.e_tot = std::sqrt(row.e_l2 * row.e_l2 + row.e_h1 * row.e_h1);
    report.rows.push_back(std::move(row));
  }

  std::vector<double> taus, l2, h1, tot;
  for (const auto& r : report.rows) {
    taus.push_back(r.entry.tau);
    l2.push_back(r.e_l2);
    h1.push_back(r.e_h1);
    tot.push_back(r.e_tot);
  }
  const auto eoc_l2 = compute_eoc(l2, taus);
  const auto eoc_h1 = compute_eoc(h1, taus);
  const auto eoc_tot = compute_eoc(tot, taus);
  for (std::size_t e = 0; e < report.rows.size(); ++e) {
    report.rows[e].eoc_l2 = e == 0 ? kNaN : eoc_l2[e - 1];
    report.rows[e].eoc_h1 = e == 0 ? kNaN : eoc_h1[e - 1];
    report.rows[e].eoc_tot = e == 0 ? kNaN : eoc_tot[e - 1];
  }
  return report;
}

std::vector<double> compute_eoc(std::span<const double> errors) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) out.push_back(std::log2(errors[i + 1] / errors[i]));
  return out;
}

std::vector<double> compute_eoc(std::span<const double> errors, std::span<const double> taus) {
  if (errors.size() != taus.size()) throw std::invalid_argument("compute_eoc: errors and taus differ in length");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    out.push_back(std::log(errors[i + 1] / errors[i]) / std::log(taus[i + 1] / taus[i]));
  }
  return out;
}

std::vector<TrackingRow> r_tracking_study(const ExperimentPlan& plan, int level, std::vector<double> taus) {
  if (taus.empty()) throw std::invalid_argument("r_tracking_study: no time steps given");
  std::sort(taus.begin(), taus.end(), std::greater<>());
  const double tau_fine = taus.back();
  const std::size_t n_fine = step_count(plan.final_time, tau_fine);
  std::vector<std::size_t> factors;
  for (const double t : taus) {
    factors.push_back(integer_ratio(t, tau_fine));
    step_count(plan.final_time, t);
  }

  const NoiseModel model = plan.noise_model();
  model.validate();
  plan.potential.validate();
  const Discretization disc = discretize(plan.dim, level);
  const ModeBasis basis(model, disc.mesh);
  const FieldVector phi0 = initial_field(plan.initial, disc.mesh, plan.potential.epsilon);

  std::vector<std::vector<double>> per_sample(plan.samples, std::vector<double>(taus.size(), 0.0));
  for_each_sample(plan.samples, plan.workers, [&](std::size_t s) {
    try {
      const NoisePath fine = generate_increments(model, s, n_fine, tau_fine);
      for (std::size_t k = 0; k < taus.size(); ++k) {
        const NoisePath path = coarsen(fine, factors[k]);
        SavScheme scheme(disc, taus[k], plan.potential, plan.solver);
        PathRunner run(scheme, basis, path, phi0);
        while (!run.done()) run.advance();
        per_sample[s][k] = run.max_tracking_error();
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(sample_context(s, e));
    }
  });

  std::vector<TrackingRow> rows(taus.size());
  for (std::size_t k = 0; k < taus.size(); ++k) {
    rows[k].tau = taus[k];
    double sum = 0.0;
    for (std::size_t s = 0; s < plan.samples; ++s) sum += per_sample[s][k];
    rows[k].mean_max_tracking_error = sum / static_cast<double>(plan.samples);
    rows[k].observed_order =
        k == 0 ? kNaN
               : std::log(rows[k - 1].mean_max_tracking_error / rows[k].mean_max_tracking_error) /
                     std::log(rows[k - 1].tau / rows[k].tau);
  }
  return rows;
}

void write_eoc_csv(std::ostream& os, const ErrorReport& report) {
  os << "level,h,tau,E_L2,EOC_L2,E_H1,EOC_H1,E_tot,EOC_tot,samples\n";
  for (const auto& r : report.rows) {
    os << r.entry.level << ',';
    put(os, "%.17g", r.h);
    os << ',';
    put(os, "%.17g", r.entry.tau);
    os << ',';
    put(os, "%.10e", r.e_l2);
    os << ',';
    put(os, "%.6f", r.eoc_l2);
    os << ',';
    put(os, "%.10e", r.e_h1);
    os << ',';
    put(os, "%.6f", r.eoc_h1);
    os << ',';
    put(os, "%.10e", r.e_tot);
    os << ',';
    put(os, "%.6f", r.eoc_tot);
    os << ',' << report.samples << '\n';
  }
}

void write_mc_csv(std::ostream& os, const ErrorReport& report) {
  os << "level,tau,time,mean_L2_sq,mean_H1_sq\n";
  for (const auto& r : report.rows) {
    for (std::size_t j = 0; j < report.compare_times.size(); ++j) {
      os << r.entry.level << ',';
      put(os, "%.17g", r.entry.tau);
      os << ',';
      put(os, "%.17g", report.compare_times[j]);
      os << ',';
      put(os, "%.10e", r.mean_l2_sq[j]);
      os << ',';
      put(os, "%.10e", r.mean_l2_sq[j] + r.mean_semi_sq[j]);
      os << '\n';
    }
  }
}

void write_rtrack_csv(std::ostream& os, std::span<const TrackingRow> rows) {
  os << "tau,mean_max_tracking_error,observed_order\n";
  for (const auto& r : rows) {
    put(os, "%.17g", r.tau);
    os << ',';
    put(os, "%.10e", r.mean_max_tracking_error);
    os << ',';
    put(os, "%.6f", r.observed_order);
    os << '\n';
  }
}

}  // namespace savac
