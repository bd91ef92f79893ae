// savac: stochastic Allen-Cahn simulator with the augmented SAV scheme.
//
//   savac run    --config FILE   single path: run.log and field snapshots
//   savac mc     --config FILE   ensemble strong errors per comparison time: mc.csv
//   savac eoc    --config FILE   ensemble errors and convergence orders: eoc.csv
//   savac rtrack --config FILE   r - sqrt(E_h) tracking study: rtrack.csv
//   savac check  --config FILE   small-instance oracle and invariant suite
//
// On failure a single line "error: <kind>: <message>" goes to stderr and the
// exit code is nonzero.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "savac/checks.hpp"
#include "savac/config.hpp"
#include "savac/fem.hpp"
#include "savac/mc.hpp"
#include "savac/noise.hpp"
#include "savac/sav.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "configuration file")->required();
  cmd->add_option("--seed", f.seed, "override noise.seed");
  cmd->add_option("--samples", f.samples, "override experiment.samples");
  cmd->add_option("--workers", f.workers, "override experiment.workers");
  cmd->add_option("--out", f.out, "output directory (default: output.dir, then $SAV_SPDE_OUT, then ./out)");
}

savac::RunConfig load(const CommonFlags& f, bool experiment = false) {
  auto cfg = savac::parse_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.samples) cfg.samples = *f.samples;
  if (f.workers) cfg.workers = *f.workers;
  if (f.out) cfg.output_dir = *f.out;
  savac::validate_config(cfg);
  if (experiment) savac::validate_experiment(cfg);
  fs::create_directories(cfg.output_dir);
  std::ofstream eff(fs::path(cfg.output_dir) / "effective.cfg");
  savac::emit_config(eff, cfg);
  return cfg;
}

std::ofstream open_out(const savac::RunConfig& cfg, const std::string& name) {
  std::ofstream os(fs::path(cfg.output_dir) / name);
  if (!os) throw std::runtime_error("cannot write " + (fs::path(cfg.output_dir) / name).string());
  return os;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

void write_snapshot(const savac::RunConfig& cfg, const savac::TorusMesh& mesh, const savac::SavState& s) {
  char name[64];
  std::snprintf(name, sizeof name, "field_%08zu.csv", s.step);
  auto os = open_out(cfg, name);
  os << (mesh.dim() == 1 ? "node_index,x,phi_value\n" : "node_index,x,y,phi_value\n");
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto p = mesh.coordinates(i);
    os << i << ',' << p[0] << ',';
    if (mesh.dim() == 2) os << p[1] << ',';
    os << num(s.phi[i]) << '\n';
  }
}

int cmd_run(const CommonFlags& f, std::uint64_t sample, bool dump_noise) {
  const auto cfg = load(f);
  const auto disc = savac::discretize(cfg.dim, cfg.level);
  const auto model = cfg.noise_model();
  const savac::ModeBasis basis(model, disc.mesh);
  const auto path = savac::generate_increments(model, sample, savac::step_count(cfg.final_time, cfg.tau), cfg.tau);
  if (dump_noise) {
    auto os = open_out(cfg, "noise_path.csv");
    savac::write_path_csv(os, path);
  }
  savac::SavScheme scheme(disc, cfg.tau, cfg.potential, cfg.solver);

  auto log = open_out(cfg, "run.log");
  log << "step,time,r,sqrt_Eh,E_sav,cg_iters\n";
  savac::PathOptions opts;
  opts.keep_stride = 0;
  const auto result = savac::run_path(
      scheme, basis, path, savac::initial_field(cfg.initial, disc.mesh, cfg.potential.epsilon), opts,
      [&](const savac::SavState& s, const savac::StepDiagnostics& d) {
        if (s.step % cfg.log_stride == 0 || s.step == path.steps) {
          log << d.step << ',' << num(d.time) << ',' << num(d.r) << ',' << num(d.sqrt_eh) << ',' << num(d.e_sav)
              << ',' << d.cg_iterations << '\n';
        }
        if (cfg.dump_stride > 0 && (s.step % cfg.dump_stride == 0 || s.step == path.steps)) {
          write_snapshot(cfg, disc.mesh, s);
        }
      });
  std::cout << "steps " << path.steps << ", max |r - sqrt(E_h)| = " << num(result.max_tracking_error)
            << ", final E_sav = " << num(result.diagnostics.back().e_sav) << "\n";
  return 0;
}

void print_report(const savac::ErrorReport& report) {
  std::cout << "level        tau         E_L2      EOC       E_H1      EOC      E_tot      EOC\n";
  for (const auto& r : report.rows) {
    std::printf("%5d  %10.4e  %9.4e  %5.2f  %9.4e  %5.2f  %9.4e  %5.2f\n", r.entry.level, r.entry.tau, r.e_l2,
                r.eoc_l2, r.e_h1, r.eoc_h1, r.e_tot, r.eoc_tot);
  }
}

int cmd_ensemble(const CommonFlags& f, bool eoc) {
  const auto cfg = load(f, true);
  const auto report = savac::run_ensemble(cfg.plan());
  auto os = open_out(cfg, eoc ? "eoc.csv" : "mc.csv");
  if (eoc) {
    savac::write_eoc_csv(os, report);
  } else {
    savac::write_mc_csv(os, report);
  }
  print_report(report);
  return 0;
}

int cmd_rtrack(const CommonFlags& f) {
  const auto cfg = load(f, true);
  const auto rows = savac::r_tracking_study(cfg.plan(), cfg.rtrack_level, cfg.rtrack_taus);
  auto os = open_out(cfg, "rtrack.csv");
  savac::write_rtrack_csv(os, rows);
  savac::write_rtrack_csv(std::cout, rows);
  return 0;
}

int cmd_check(const CommonFlags& f) {
  const auto cfg = load(f);
  const auto results = savac::run_self_checks(cfg.seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%-4s  %-66s  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
  }
  return all ? 0 : 3;
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n') c = ';';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Allen-Cahn solver (augmented SAV, P1 finite elements on the torus)"};
  app.require_subcommand(1);

  CommonFlags run_f, mc_f, eoc_f, rt_f, check_f;
  std::uint64_t sample = 0;
  bool dump_noise = false;
  auto* run = app.add_subcommand("run", "simulate one sample path");
  add_common(run, run_f);
  run->add_option("--sample", sample, "sample id of the noise path");
  run->add_flag("--dump-noise", dump_noise, "write the Brownian increments to noise_path.csv");
  auto* mc = app.add_subcommand("mc", "ensemble strong errors per comparison time");
  add_common(mc, mc_f);
  auto* eoc = app.add_subcommand("eoc", "ensemble errors and experimental orders of convergence");
  add_common(eoc, eoc_f);
  auto* rtrack = app.add_subcommand("rtrack", "auxiliary-variable tracking study");
  add_common(rtrack, rt_f);
  auto* check = app.add_subcommand("check", "oracle and invariant checks on small instances");
  add_common(check, check_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*run) return cmd_run(run_f, sample, dump_noise);
    if (*mc) return cmd_ensemble(mc_f, false);
    if (*eoc) return cmd_ensemble(eoc_f, true);
    if (*rtrack) return cmd_rtrack(rt_f);
    if (*check) return cmd_check(check_f);
  } catch (const savac::ConfigError& e) {
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const savac::SolverError& e) {
    std::cerr << "error: solver: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
