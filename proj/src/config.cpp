#include "gravduct/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gravduct/errors.hpp"

namespace gravduct {

namespace pt = boost::property_tree;

Subcommand parse_subcommand(const std::string& name) {
  static const std::map<std::string, Subcommand> table = {
      {"background", Subcommand::background}, {"phase", Subcommand::phase},
      {"solve", Subcommand::solve},           {"verify", Subcommand::verify},
      {"stability", Subcommand::stability},   {"uniqueness", Subcommand::uniqueness}};
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("", "unknown subcommand '" + name + "'");
  return it->second;
}

std::string to_string(Subcommand cmd) {
  switch (cmd) {
    case Subcommand::background: return "background";
    case Subcommand::phase: return "phase";
    case Subcommand::solve: return "solve";
    case Subcommand::verify: return "verify";
    case Subcommand::stability: return "stability";
    case Subcommand::uniqueness: return "uniqueness";
  }
  return "unknown";
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"background", {"gamma", "m0", "S0", "rho0", "G0", "L", "nodes"}},
      {"grid", {"n1", "n2", "background_refinement"}},
      {"iteration", {"sigma", "M", "max_iters", "tol", "under_relaxation", "fallback_relaxation"}},
      {"boundary",
       {"G_en_amplitude", "G_en_mode", "S_en_amplitude", "S_en_mode", "p_ex_amplitude", "p_ex_mode",
        "Phi_bd_amplitude", "Phi_bd_mode", "B_en_amplitude", "B_en_mode", "general_k"}},
      {"solver", {"method", "krylov_tol", "krylov_max_iters"}},
      {"phase", {"rho_min", "rho_max", "samples", "levels"}},
      {"experiments", {"uniqueness_starts", "seed"}},
      {"output", {"dir", "dump_matrix"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string text(const std::string& key) const { return *tree_.get_optional<std::string>(key); }

  double number(const std::string& key, double fallback, bool required = false) const {
    if (!has(key)) {
      if (required) throw ConfigError(key, "missing required key");
      return fallback;
    }
    const std::string raw = text(key);
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(raw, &used);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a decimal number, got '" + raw + "'");
    }
    if (used != raw.size() || !std::isfinite(v)) {
      throw ConfigError(key, "expected a finite decimal number, got '" + raw + "'");
    }
    return v;
  }

  long integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double v = number(key, 0.0);
    if (v != std::floor(v)) throw ConfigError(key, "expected an integer");
    return static_cast<long>(v);
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string raw = text(key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + raw + "'");
  }

 private:
  const pt::ptree& tree_;
};

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

Mode read_mode(const Reader& r, const std::string& name, double amplitude, int k) {
  Mode m;
  m.amplitude = r.number("boundary." + name + "_amplitude", amplitude);
  m.k = static_cast<int>(r.integer("boundary." + name + "_mode", k));
  check(m.k >= 1, "boundary." + name + "_mode", "must be a positive integer");
  return m;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("parse error: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (!body.data().empty()) throw ConfigError(section, "keys must appear inside a [section]");
    if (it == schema().end()) throw ConfigError(section, "unknown section");
    for (const auto& [key, value] : body) {
      (void)value;
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }

  const Reader r(tree);
  RunConfig cfg;
  cfg.source_text = text;

  auto& b = cfg.background;
  b.gamma = r.number("background.gamma", 0.0, true);
  b.m0 = r.number("background.m0", 0.0, true);
  b.S0 = r.number("background.S0", 0.0, true);
  b.rho0 = r.number("background.rho0", 0.0, true);
  b.G0 = r.number("background.G0", 0.0, true);
  b.L = r.number("background.L", 0.0, true);
  check(b.gamma > 1.0, "background.gamma", "must be > 1");
  check(b.m0 > 0.0, "background.m0", "must be > 0");
  check(b.S0 > 0.0, "background.S0", "must be > 0");
  check(b.rho0 > 0.0, "background.rho0", "must be > 0");
  check(b.L > 0.0, "background.L", "must be > 0");
  check(b.rho0 != critical_density(b), "background.rho0", "must differ from the sonic density");
  cfg.background_nodes = static_cast<int>(r.integer("background.nodes", cfg.background_nodes));
  check(cfg.background_nodes >= 2, "background.nodes", "must be >= 2");

  cfg.n1 = static_cast<int>(r.integer("grid.n1", cfg.n1));
  cfg.n2 = static_cast<int>(r.integer("grid.n2", cfg.n2));
  check(cfg.n1 >= 4, "grid.n1", "must be >= 4");
  check(cfg.n2 >= 4, "grid.n2", "must be >= 4");
  cfg.background_refinement =
      static_cast<int>(r.integer("grid.background_refinement", cfg.background_refinement));
  check(cfg.background_refinement >= 1, "grid.background_refinement", "must be >= 1");

  auto& it = cfg.iteration;
  it.sigma = r.number("iteration.sigma", it.sigma);
  it.M = r.number("iteration.M", it.M);
  it.max_iters = static_cast<int>(r.integer("iteration.max_iters", it.max_iters));
  it.tol_fixpoint = r.number("iteration.tol", it.tol_fixpoint);
  it.under_relaxation = r.number("iteration.under_relaxation", it.under_relaxation);
  it.fallback_relaxation = r.number("iteration.fallback_relaxation", it.fallback_relaxation);
  check(it.sigma >= 0.0, "iteration.sigma", "must be >= 0");
  check(it.M > 0.0, "iteration.M", "must be > 0");
  check(it.max_iters >= 1, "iteration.max_iters", "must be >= 1");
  check(it.tol_fixpoint > 0.0, "iteration.tol", "must be > 0");
  check(it.under_relaxation > 0.0 && it.under_relaxation <= 1.0, "iteration.under_relaxation",
        "must lie in (0, 1]");
  check(it.fallback_relaxation > 0.0 && it.fallback_relaxation <= 1.0, "iteration.fallback_relaxation",
        "must lie in (0, 1]");
  check(it.delta() < 0.25 * b.m0, "iteration.M", "box radius M*sigma must be < m0/4");

  auto& bd = cfg.boundary;
  bd.G_en_mode = read_mode(r, "G_en", 1.0, 1);
  bd.S_en_mode = read_mode(r, "S_en", 0.5, 1);
  bd.p_ex_mode = read_mode(r, "p_ex", 1.0, 2);
  bd.Phi_bd_mode = read_mode(r, "Phi_bd", 1.0, 2);
  bd.B_en_mode = read_mode(r, "B_en", 0.0, 1);
  bd.general_k = r.flag("boundary.general_k", false);
  bd.sigma = it.sigma;
  if (bd.B_en_mode.amplitude != 0.0 && !bd.general_k) {
    throw ConfigError("boundary.B_en_amplitude",
                      "an inlet Bernoulli perturbation breaks B_en + Phi_bd = 0; set boundary.general_k = true");
  }

  if (r.has("solver.method")) {
    const std::string m = r.text("solver.method");
    if (m == "direct") {
      cfg.solver.method = SolverOptions::Method::direct;
    } else if (m == "krylov") {
      cfg.solver.method = SolverOptions::Method::krylov;
    } else {
      throw ConfigError("solver.method", "expected direct or krylov, got '" + m + "'");
    }
  }
  cfg.solver.krylov_tol = r.number("solver.krylov_tol", cfg.solver.krylov_tol);
  cfg.solver.krylov_max_iters = static_cast<int>(r.integer("solver.krylov_max_iters", cfg.solver.krylov_max_iters));
  check(cfg.solver.krylov_tol > 0.0, "solver.krylov_tol", "must be > 0");

  auto& ph = cfg.phase;
  ph.rho_min = r.number("phase.rho_min", ph.rho_min);
  ph.rho_max = r.number("phase.rho_max", ph.rho_max);
  ph.samples = static_cast<int>(r.integer("phase.samples", ph.samples));
  check(ph.samples >= 2, "phase.samples", "must be >= 2");
  if (r.has("phase.levels")) {
    ph.level_factors.clear();
    std::stringstream ss(r.text("phase.levels"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        ph.level_factors.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("phase.levels", "expected a comma separated list of numbers");
      }
    }
    check(!ph.level_factors.empty(), "phase.levels", "must not be empty");
  }

  cfg.uniqueness_starts = static_cast<int>(r.integer("experiments.uniqueness_starts", cfg.uniqueness_starts));
  check(cfg.uniqueness_starts >= 1, "experiments.uniqueness_starts", "must be >= 1");
  cfg.seed = static_cast<std::uint64_t>(r.integer("experiments.seed", static_cast<long>(cfg.seed)));

  if (r.has("output.dir")) cfg.out_dir = r.text("output.dir");
  cfg.dump_matrix = r.flag("output.dump_matrix", false);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void validate_for(const RunConfig& cfg, Subcommand cmd) {
  const bool two_d = cmd == Subcommand::solve || cmd == Subcommand::stability ||
                     cmd == Subcommand::uniqueness || cmd == Subcommand::verify;
  if (two_d && !(cfg.background.rho0 > critical_density(cfg.background))) {
    throw ConfigError("background.rho0", "supersonic inlet not supported");
  }
  if (cmd == Subcommand::stability && !(cfg.iteration.sigma > 0.0)) {
    throw ConfigError("iteration.sigma", "stability sweep needs sigma > 0");
  }
}

}  // namespace gravduct
