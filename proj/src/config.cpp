#include "savac/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace savac {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

template <class Int>
bool parse_int(const std::string& s, Int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* rho_name(RhoKind k) { return k == RhoKind::indicator ? "indicator" : "smooth"; }

const char* initial_name(InitialKind k) {
  switch (k) {
    case InitialKind::constant:
      return "constant";
    case InitialKind::cosine:
      return "cosine";
    case InitialKind::tanh_ellipse:
      return "tanh-ellipse";
  }
  return "?";
}

std::vector<LadderEntry> default_ladder() {
  std::vector<LadderEntry> out;
  for (int m = 5; m <= 7; ++m) out.push_back({m, std::ldexp(1.0, -2 * m)});
  return out;
}

std::vector<double> default_rtrack_taus() {
  return {0x1.0p-9, 0x1.0p-10, 0x1.0p-11, 0x1.0p-12};
}

struct Parser {
  RunConfig cfg;
  std::vector<std::string> problems;
  std::vector<std::pair<std::string, std::string>> mode_rows;  // (where, value)
  bool ladder_given = false;
  bool rtrack_given = false;
  bool output_dir_given = false;

  using Handler = std::function<void(const std::string& where, const std::string& value)>;
  std::map<std::string, Handler> handlers;

  void bad(const std::string& where, const std::string& what) { problems.push_back(where + ": " + what); }

  Handler real(double& target) {
    return [this, &target](const std::string& where, const std::string& v) {
      if (!parse_double(v, target)) bad(where, "expected a real number, got '" + v + "'");
    };
  }
  template <class Int>
  Handler integer(Int& target) {
    return [this, &target](const std::string& where, const std::string& v) {
      if (!parse_int(v, target)) bad(where, "expected an integer, got '" + v + "'");
    };
  }
  Handler boolean(bool& target) {
    return [this, &target](const std::string& where, const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") {
        target = true;
      } else if (v == "false" || v == "0" || v == "no") {
        target = false;
      } else {
        bad(where, "expected true or false, got '" + v + "'");
      }
    };
  }
  Handler pair(Point& target) {
    return [this, &target](const std::string& where, const std::string& v) {
      const auto t = tokens(v);
      if (t.size() != 2 || !parse_double(t[0], target[0]) || !parse_double(t[1], target[1])) {
        bad(where, "expected two real numbers, got '" + v + "'");
      }
    };
  }

  Parser() {
    cfg.output_dir = default_output_dir();
    handlers["model.dim"] = integer(cfg.dim);
    handlers["model.epsilon"] = real(cfg.potential.epsilon);
    handlers["model.gamma"] = real(cfg.potential.gamma);
    handlers["model.rho"] = [this](const std::string& where, const std::string& v) {
      if (v == "indicator") {
        cfg.potential.rho = RhoKind::indicator;
      } else if (v == "smooth") {
        cfg.potential.rho = RhoKind::smooth;
      } else {
        bad(where, "expected indicator or smooth, got '" + v + "'");
      }
    };
    handlers["noise.enabled"] = boolean(cfg.noise_enabled);
    handlers["noise.seed"] = integer(cfg.seed);
    handlers["noise.mode"] = [this](const std::string& where, const std::string& v) { mode_rows.emplace_back(where, v); };
    handlers["mesh.level"] = integer(cfg.level);
    handlers["time.final_time"] = real(cfg.final_time);
    handlers["time.tau"] = real(cfg.tau);
    handlers["initial.kind"] = [this](const std::string& where, const std::string& v) {
      if (v == "constant") {
        cfg.initial.kind = InitialKind::constant;
      } else if (v == "cosine") {
        cfg.initial.kind = InitialKind::cosine;
      } else if (v == "tanh-ellipse") {
        cfg.initial.kind = InitialKind::tanh_ellipse;
      } else {
        bad(where, "expected constant, cosine or tanh-ellipse, got '" + v + "'");
      }
    };
    handlers["initial.value"] = real(cfg.initial.value);
    handlers["initial.wavenumber"] = integer(cfg.initial.wavenumber);
    handlers["initial.center"] = pair(cfg.initial.center);
    handlers["initial.semi_axes"] = pair(cfg.initial.semi_axes);
    handlers["solver.rel_tolerance"] = real(cfg.solver.rel_tolerance);
    handlers["solver.max_iterations"] = integer(cfg.solver.max_iterations);
    handlers["solver.preconditioner"] = [this](const std::string& where, const std::string& v) {
      if (v == "none") {
        cfg.solver.preconditioner = Preconditioner::none;
      } else if (v == "diagonal") {
        cfg.solver.preconditioner = Preconditioner::diagonal;
      } else {
        bad(where, "expected none or diagonal, got '" + v + "'");
      }
    };
    handlers["experiment.reference_level"] = integer(cfg.reference_level);
    handlers["experiment.reference_tau"] = real(cfg.reference_tau);
    handlers["experiment.entry"] = [this](const std::string& where, const std::string& v) {
      if (!ladder_given) cfg.ladder.clear();
      ladder_given = true;
      const auto t = tokens(v);
      LadderEntry e;
      if (t.size() != 2 || !parse_int(t[0], e.level) || !parse_double(t[1], e.tau)) {
        bad(where, "expected 'level tau', got '" + v + "'");
        return;
      }
      cfg.ladder.push_back(e);
    };
    handlers["experiment.compare_tau"] = real(cfg.compare_tau);
    handlers["experiment.samples"] = integer(cfg.samples);
    handlers["experiment.workers"] = integer(cfg.workers);
    handlers["rtrack.level"] = integer(cfg.rtrack_level);
    handlers["rtrack.tau"] = [this](const std::string& where, const std::string& v) {
      if (!rtrack_given) cfg.rtrack_taus.clear();
      rtrack_given = true;
      double t = 0.0;
      if (!parse_double(v, t)) {
        bad(where, "expected a real number, got '" + v + "'");
        return;
      }
      cfg.rtrack_taus.push_back(t);
    };
    handlers["output.dir"] = [this](const std::string&, const std::string& v) {
      cfg.output_dir = v;
      output_dir_given = true;
    };
    handlers["output.dump_stride"] = integer(cfg.dump_stride);
    handlers["output.log_stride"] = integer(cfg.log_stride);
  }

  // Resolves a key given outside any section when its name is unique.
  std::string resolve_bare(const std::string& key, const std::string& where) {
    std::string found;
    int matches = 0;
    for (const auto& [full, _] : handlers) {
      if (full.substr(full.find('.') + 1) == key) {
        found = full;
        ++matches;
      }
    }
    if (matches == 0) bad(where, "unknown key '" + key + "'");
    if (matches > 1) bad(where, "key '" + key + "' is ambiguous outside a section");
    return matches == 1 ? found : std::string{};
  }

  void feed(const std::string& text) {
    std::istringstream in(text);
    std::string section;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string content = trim(line);
      if (content.empty()) continue;
      const std::string where = "line " + std::to_string(lineno);
      if (content.front() == '[') {
        if (content.back() != ']') {
          bad(where, "malformed section header");
          continue;
        }
        section = trim(std::string_view(content).substr(1, content.size() - 2));
        const bool known = std::any_of(handlers.begin(), handlers.end(),
                                       [&](const auto& h) { return h.first.rfind(section + ".", 0) == 0; });
        if (!known) bad(where, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = content.find('=');
      if (eq == std::string::npos) {
        bad(where, "expected key = value");
        continue;
      }
      const std::string key = trim(std::string_view(content).substr(0, eq));
      const std::string value = trim(std::string_view(content).substr(eq + 1));
      const std::string full = section.empty() ? resolve_bare(key, where) : section + "." + key;
      if (full.empty()) continue;
      const auto it = handlers.find(full);
      if (it == handlers.end()) {
        bad(where, "unknown key '" + full + "'");
        continue;
      }
      it->second(where + " (" + full + ")", value);
    }
  }

  void finish() {
    for (const auto& [where, v] : mode_rows) {
      const auto t = tokens(v);
      ModeSpec m;
      bool ok = false;
      if (cfg.dim == 2) {
        ok = t.size() == 3 && parse_int(t[0], m.index[0]) && parse_int(t[1], m.index[1]) && parse_double(t[2], m.amplitude);
      } else {
        ok = t.size() == 2 && parse_int(t[0], m.index[0]) && parse_double(t[1], m.amplitude);
      }
      if (!ok) {
        bad(where + " (noise.mode)", cfg.dim == 2 ? "expected 'k l lambda'" : "expected 'k lambda'");
        continue;
      }
      cfg.modes.push_back(m);
    }
    if (mode_rows.empty() && (cfg.dim == 1 || cfg.dim == 2)) cfg.modes = NoiseModel::default_modes(cfg.dim);
    if (!ladder_given) cfg.ladder = default_ladder();
    if (!rtrack_given) cfg.rtrack_taus = default_rtrack_taus();
  }
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration";
        for (const auto& p : problems) msg += "; " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

std::string default_output_dir() {
  const char* env = std::getenv("SAV_SPDE_OUT");
  return env && *env ? std::string(env) : std::string("out");
}

ExperimentPlan RunConfig::plan() const {
  ExperimentPlan p;
  p.dim = dim;
  p.ladder = ladder;
  p.reference = {reference_level, reference_tau};
  p.compare_tau = compare_tau;
  p.samples = samples;
  p.master_seed = seed;
  p.final_time = final_time;
  p.workers = workers;
  p.potential = potential;
  p.modes = active_modes();
  p.initial = initial;
  p.solver = solver;
  return p;
}

void validate_config(const RunConfig& c) {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  check(c.dim == 1 || c.dim == 2, "model.dim: must be 1 or 2");
  check(c.potential.gamma > 0.0, "model.gamma: must be > 0 (the scheme requires E_h >= gamma/epsilon > 0)");
  check(c.potential.epsilon > 0.0, "model.epsilon: must be > 0");
  check(c.tau > 0.0, "time.tau: must be > 0");
  check(c.final_time > 0.0, "time.final_time: must be > 0");
  if (c.tau > 0.0 && c.final_time > 0.0) {
    try {
      step_count(c.final_time, c.tau);
    } catch (const std::invalid_argument&) {
      problems.push_back("time.tau: final_time / tau must be an integer");
    }
  }
  check(c.level >= 1 && c.dim * c.level <= 30, "mesh.level: must be >= 1 and small enough for the node index type");
  check(c.initial.semi_axes[0] > 0.0 && c.initial.semi_axes[1] > 0.0, "initial.semi_axes: must be positive");
  check(c.solver.rel_tolerance > 0.0 && c.solver.rel_tolerance < 1.0, "solver.rel_tolerance: must lie in (0, 1)");
  check(c.samples >= 1, "experiment.samples: must be >= 1");
  check(c.workers >= 1, "experiment.workers: must be >= 1");
  check(c.reference_tau > 0.0, "experiment.reference_tau: must be > 0");
  check(c.reference_level >= 1 && c.dim * c.reference_level <= 30, "experiment.reference_level: out of range");
  check(c.compare_tau >= 0.0, "experiment.compare_tau: must be >= 0 (0 selects the coarsest ladder tau)");
  check(!c.ladder.empty(), "experiment.entry: the ladder is empty");
  check(c.rtrack_level >= 1 && c.dim * c.rtrack_level <= 30, "rtrack.level: out of range");
  check(!c.rtrack_taus.empty(), "rtrack.tau: at least one value required");
  for (const double t : c.rtrack_taus) check(t > 0.0, "rtrack.tau: values must be > 0");
  check(c.log_stride >= 1, "output.log_stride: must be >= 1");
  check(!c.output_dir.empty(), "output.dir: must not be empty");
  try {
    NoiseModel{c.dim == 2 ? 2 : 1, c.modes, c.seed}.validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("noise.mode: ") + e.what());
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

void validate_experiment(const RunConfig& c) {
  std::vector<std::string> problems;
  try {
    c.plan().validate();
  } catch (const std::invalid_argument& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) problems.push_back("experiment: " + trim(line));
  }
  for (const double t : c.rtrack_taus) {
    try {
      step_count(c.final_time, t);
    } catch (const std::invalid_argument&) {
      problems.push_back("rtrack.tau: final_time / " + fmt(t) + " is not an integer");
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

RunConfig parse_config_text(const std::string& text) {
  Parser p;
  p.feed(text);
  p.finish();
  if (!p.problems.empty()) throw ConfigError(std::move(p.problems));
  validate_config(p.cfg);
  return p.cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open configuration file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void emit_config(std::ostream& os, const RunConfig& c) {
  os << "[model]\n";
  os << "dim = " << c.dim << "\n";
  os << "epsilon = " << fmt(c.potential.epsilon) << "\n";
  os << "gamma = " << fmt(c.potential.gamma) << "\n";
  os << "rho = " << rho_name(c.potential.rho) << "\n";
  os << "\n[noise]\n";
  os << "enabled = " << (c.noise_enabled ? "true" : "false") << "\n";
  os << "seed = " << c.seed << "\n";
  for (const auto& m : c.modes) {
    os << "mode = " << m.index[0] << ' ';
    if (c.dim == 2) os << m.index[1] << ' ';
    os << fmt(m.amplitude) << "\n";
  }
  os << "\n[mesh]\n";
  os << "level = " << c.level << "\n";
  os << "\n[time]\n";
  os << "final_time = " << fmt(c.final_time) << "\n";
  os << "tau = " << fmt(c.tau) << "\n";
  os << "\n[initial]\n";
  os << "kind = " << initial_name(c.initial.kind) << "\n";
  os << "value = " << fmt(c.initial.value) << "\n";
  os << "wavenumber = " << c.initial.wavenumber << "\n";
  os << "center = " << fmt(c.initial.center[0]) << ' ' << fmt(c.initial.center[1]) << "\n";
  os << "semi_axes = " << fmt(c.initial.semi_axes[0]) << ' ' << fmt(c.initial.semi_axes[1]) << "\n";
  os << "\n[solver]\n";
  os << "rel_tolerance = " << fmt(c.solver.rel_tolerance) << "\n";
  os << "max_iterations = " << c.solver.max_iterations << "\n";
  os << "preconditioner = " << (c.solver.preconditioner == Preconditioner::none ? "none" : "diagonal") << "\n";
  os << "\n[experiment]\n";
  os << "reference_level = " << c.reference_level << "\n";
  os << "reference_tau = " << fmt(c.reference_tau) << "\n";
  for (const auto& e : c.ladder) os << "entry = " << e.level << ' ' << fmt(e.tau) << "\n";
  os << "compare_tau = " << fmt(c.compare_tau) << "\n";
  os << "samples = " << c.samples << "\n";
  os << "workers = " << c.workers << "\n";
  os << "\n[rtrack]\n";
  os << "level = " << c.rtrack_level << "\n";
  for (const double t : c.rtrack_taus) os << "tau = " << fmt(t) << "\n";
  os << "\n[output]\n";
  os << "dir = " << c.output_dir << "\n";
  os << "dump_stride = " << c.dump_stride << "\n";
  os << "log_stride = " << c.log_stride << "\n";
}

}  // namespace savac
