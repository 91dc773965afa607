// gravduct: steady subsonic Euler-Poisson flow in a flat duct.
//
//   gravduct <subcommand> --config <path> [--out <dir>] [--grid N1xN2] [--sigma X]
//
// Exit codes: 0 success, 2 config error, 3 sonic or lifespan failure,
// 4 iteration or numerical failure, 5 verification failure, 1 anything else.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gravduct/background.hpp"
#include "gravduct/config.hpp"
#include "gravduct/driver.hpp"
#include "gravduct/errors.hpp"
#include "gravduct/io.hpp"
#include "gravduct/verification.hpp"

using namespace gravduct;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string grid;
  std::optional<double> sigma;
};

int exit_code(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::config: return 2;
    case ErrorClass::sonic: return 3;
    case ErrorClass::iteration: return 4;
    case ErrorClass::numerical: return 4;
    case ErrorClass::verification: return 5;
  }
  return 1;
}

std::string class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::config: return "config";
    case ErrorClass::sonic: return "sonic";
    case ErrorClass::iteration: return "iteration";
    case ErrorClass::numerical: return "numerical";
    case ErrorClass::verification: return "verification";
  }
  return "unknown";
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.grid.empty()) {
    const auto x = o.grid.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument("no x");
      std::size_t used1 = 0, used2 = 0;
      const std::string a = o.grid.substr(0, x), b = o.grid.substr(x + 1);
      cfg.n1 = std::stoi(a, &used1);
      cfg.n2 = std::stoi(b, &used2);
      if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("--grid", "expected N1xN2, got '" + o.grid + "'");
    }
    if (cfg.n1 < 4 || cfg.n2 < 4) throw ConfigError("--grid", "both sizes must be >= 4");
  }
  if (o.sigma) {
    if (!(*o.sigma >= 0.0)) throw ConfigError("--sigma", "must be >= 0");
    cfg.iteration.sigma = *o.sigma;
    cfg.boundary.sigma = *o.sigma;
    try {
      cfg.iteration.validate(cfg.background.m0);
    } catch (const Error& e) {
      throw ConfigError("--sigma", e.what());
    }
  }
}

std::string path_in(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

json background_params_json(const BackgroundParams& p) {
  return {{"gamma", p.gamma}, {"m0", p.m0}, {"S0", p.S0},
          {"rho0", p.rho0},   {"G0", p.G0}, {"L", p.L}};
}

json critical_json(const CriticalData& c) {
  return {{"rho_s", c.rho_s},
          {"G_M", c.G_M},
          {"rho_M", c.rho_M},
          {"lifespan_lower", c.L_bar_lower},
          {"lifespan_upper", c.L_bar_upper},
          {"nu0", c.nu0},
          {"delta0", c.delta0}};
}

BoundaryData boundary_for(const RunConfig& cfg, const BackgroundSolution& bg) {
  BoundaryData d = BoundaryData::around(bg);
  const BoundaryData& c = cfg.boundary;
  d.sigma = cfg.iteration.sigma;
  d.G_en_mode = c.G_en_mode;
  d.S_en_mode = c.S_en_mode;
  d.p_ex_mode = c.p_ex_mode;
  d.Phi_bd_mode = c.Phi_bd_mode;
  d.B_en_mode = c.B_en_mode;
  d.general_k = c.general_k;
  d.validate();
  return d;
}

json boundary_json(const BoundaryData& d) {
  auto mode = [](const Mode& m) { return json{{"amplitude", m.amplitude}, {"k", m.k}}; };
  return {{"sigma", d.sigma},       {"G_en", mode(d.G_en_mode)},     {"S_en", mode(d.S_en_mode)},
          {"p_ex", mode(d.p_ex_mode)}, {"Phi_bd", mode(d.Phi_bd_mode)}, {"B_en", mode(d.B_en_mode)},
          {"general_k", d.general_k}};
}

json iteration_config_json(const IterationConfig& c) {
  return {{"sigma", c.sigma},
          {"M", c.M},
          {"delta", c.delta()},
          {"max_iters", c.max_iters},
          {"tol", c.tol_fixpoint},
          {"under_relaxation", c.under_relaxation},
          {"fallback_relaxation", c.fallback_relaxation}};
}

int run_background(const RunConfig& cfg, json& summary) {
  const BackgroundParams& p = cfg.background;
  const BackgroundSolution bg = integrate_background(p, cfg.background_nodes);
  write_background_csv(path_in(cfg, "background.csv"), bg);
  summary["outputs"] = {"background.csv"};
  json rep = {{"rho_s", critical_density(p)},
              {"drift", bg.conservation_drift()},
              {"relative_drift", bg.relative_drift()},
              {"rho_L", bg.rho().back()},
              {"G_L", bg.G().back()},
              {"nodes", bg.size()}};
  if (p.rho0 > critical_density(p)) {
    const CriticalData c = critical_data(bg);
    rep.update(critical_json(c));
    rep["coercivity_margin_positive"] = c.delta0 > 0.0;
    rep["sonic_abscissa_detected"] = detect_sonic_abscissa(p, 2.0 * c.L_bar_upper, 100000);
  } else {
    rep["branch"] = "supersonic";
  }
  summary["background"] = rep;
  return 0;
}

int run_phase(const RunConfig& cfg, json& summary) {
  const BackgroundParams& p = cfg.background;
  const double rho_s = critical_density(p);
  const double base = first_integral(p, p.rho0, p.G0);
  std::vector<double> levels;
  for (double f : cfg.phase.level_factors) levels.push_back(f * base);
  const double lo = cfg.phase.rho_min > 0.0 ? cfg.phase.rho_min : 0.1 * rho_s;
  const double hi = cfg.phase.rho_max > 0.0 ? cfg.phase.rho_max : 4.0 * std::max(p.rho0, rho_s);
  const auto pts = phase_portrait(p, levels, lo, hi, static_cast<std::size_t>(cfg.phase.samples));
  write_phase_csv(path_in(cfg, "phase.csv"), pts);

  // Points come in (rho, G), (rho, -G) pairs.
  double asym = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); k += 2) {
    asym = std::max({asym, std::abs(pts[k].rho - pts[k + 1].rho), std::abs(pts[k].G + pts[k + 1].G)});
  }
  summary["outputs"] = {"phase.csv"};
  summary["phase"] = {{"rho_s", rho_s},       {"rho_min", lo},          {"rho_max", hi},
                      {"levels", levels},     {"points", pts.size()},   {"symmetry_defect", asym},
                      {"inlet_level", base}};
  return 0;
}

void export_state(const RunConfig& cfg, const PerturbationState& st, const std::string& name) {
  write_fields_csv(path_in(cfg, name), {&st.phi, &st.Psi, &st.S, &st.K});
}

int run_solve(const RunConfig& cfg, json& summary) {
  const Grid grid(cfg.background.L, cfg.n1, cfg.n2);
  const BackgroundSolution bg = background_for_grid(cfg.background, grid, cfg.background_refinement);
  const BoundaryData data = boundary_for(cfg, bg);
  summary["boundary"] = boundary_json(data);
  const FixedPointMap map(bg, grid, data, cfg.solver);
  summary["delta0"] = map.delta0();
  if (cfg.dump_matrix) write_matrix_market(map.solver().matrix(), path_in(cfg, "operator.mtx"));

  IterationResult res;
  try {
    res = iterate(map, cfg.iteration);
  } catch (const IterationError& e) {
    export_state(cfg, e.last_iterate(), "last_iterate.csv");
    summary["outputs"] = {"last_iterate.csv"};
    throw;
  }
  write_iteration_log(path_in(cfg, "iteration.log"), res.log);
  const FlowState flow = reconstruct(bg, res.state);

  const std::vector<const ScalarField*> fields = {&res.state.phi, &res.state.Psi, &res.state.S,
                                                  &flow.rho,      &flow.u,        &flow.v,
                                                  &flow.p,        &flow.Phi,      &flow.mach,
                                                  &flow.K};
  write_fields_csv(path_in(cfg, "fields.csv"), fields);
  json outputs = {"fields.csv", "iteration.log"};
  for (const auto* f : fields) {
    const std::string name = "field_" + f->name() + ".csv";
    write_field_csv(path_in(cfg, name), *f);
    outputs.push_back(name);
  }
  if (cfg.dump_matrix) outputs.push_back("operator.mtx");
  summary["outputs"] = outputs;
  summary["iteration"] = iteration_json(res.log);
  summary["residuals"] = residuals_json(flow.residuals);
  const double dev = background_deviation(bg, flow);
  summary["flow"] = {{"max_mach", flow.max_mach},
                     {"min_rho", flow.min_rho},
                     {"min_u", flow.min_u},
                     {"background_deviation", dev},
                     {"sup_phi", res.state.phi.max_abs()},
                     {"sup_Psi", res.state.Psi.max_abs()},
                     {"S_min", res.state.S.min()},
                     {"S_max", res.state.S.max()}};

  if (!(flow.max_mach < 1.0)) throw Error(ErrorClass::sonic, "reconstructed flow is not subsonic");
  if (!(flow.min_rho > 0.0 && flow.min_u > 0.0)) {
    throw Error(ErrorClass::iteration, "reconstructed density or horizontal velocity not positive");
  }
  return 0;
}

int run_verify(const RunConfig& cfg, json& summary) {
  const BackgroundSolution bg = integrate_background(cfg.background, cfg.background_nodes);
  const double delta0 = subsonic_margin(bg).delta0;
  summary["delta0"] = delta0;
  const auto items = run_verification(bg, delta0, cfg.seed, cfg.solver);
  json checks = json::array();
  bool ok = true;
  for (const auto& it : items) {
    checks.push_back({{"name", it.name}, {"value", it.value}, {"threshold", it.threshold}, {"pass", it.pass}});
    std::cout << (it.pass ? "ok    " : "FAIL  ") << it.name << " " << it.value << " (threshold "
              << it.threshold << ")\n";
    ok = ok && it.pass;
  }
  summary["checks"] = checks;
  if (!ok) throw VerificationFailure("verification suite reported failures");
  return 0;
}

int run_stability(const RunConfig& cfg, json& summary) {
  const Grid grid(cfg.background.L, cfg.n1, cfg.n2);
  const BackgroundSolution bg = background_for_grid(cfg.background, grid, cfg.background_refinement);
  const BoundaryData data = boundary_for(cfg, bg);
  summary["boundary"] = boundary_json(data);
  const StabilityReport rep = stability_experiment(bg, grid, data, cfg.iteration, cfg.solver);
  json sweep = json::array();
  for (const auto& s : rep.sweep) {
    sweep.push_back({{"sigma", s.sigma}, {"deviation", s.deviation}, {"iterations", s.iterations}});
  }
  const bool in_band = rep.ratio >= 1.8 && rep.ratio <= 2.2;
  summary["stability"] = {{"sweep", sweep},
                          {"ratio", rep.ratio},
                          {"ratio_in_band", in_band},
                          {"monotone", rep.monotone}};
  if (!in_band || !rep.monotone) throw VerificationFailure("deviation does not scale linearly in sigma");
  return 0;
}

int run_uniqueness(const RunConfig& cfg, json& summary) {
  const Grid grid(cfg.background.L, cfg.n1, cfg.n2);
  const BackgroundSolution bg = background_for_grid(cfg.background, grid, cfg.background_refinement);
  const BoundaryData data = boundary_for(cfg, bg);
  summary["boundary"] = boundary_json(data);
  const FixedPointMap map(bg, grid, data, cfg.solver);
  const UniquenessReport rep = uniqueness_experiment(map, cfg.iteration, cfg.uniqueness_starts, cfg.seed);
  json starts = json::array();
  for (const auto& s : rep.starts) {
    starts.push_back({{"kind", s.kind}, {"seed", s.seed}, {"accepted", s.accepted}, {"iterations", s.iterations}});
  }
  const double bound = 10.0 * cfg.iteration.tol_fixpoint;
  summary["uniqueness"] = {{"starts", starts},
                           {"pairwise", rep.pairwise},
                           {"max_difference", rep.max_difference},
                           {"bound", bound}};
  if (!(rep.max_difference <= bound)) throw VerificationFailure("converged states disagree");
  return 0;
}

int run(Subcommand cmd, const Overrides& o) {
  json summary = {{"schema", kSummarySchema}, {"subcommand", to_string(cmd)}};
  RunConfig cfg;
  bool have_out = false;
  auto finish = [&](int code, const std::string& status) {
    summary["status"] = status;
    summary["exit_code"] = code;
    if (have_out) {
      try {
        write_json(path_in(cfg, "summary.json"), summary);
      } catch (const std::exception& e) {
        std::cerr << "gravduct: " << e.what() << '\n';
      }
    }
    return code;
  };
  try {
    if (!o.out.empty()) {
      // Config errors still leave a summary when the directory is known.
      cfg.out_dir = o.out;
      std::filesystem::create_directories(cfg.out_dir);
      have_out = true;
    }
    cfg = parse_config(o.config);
    apply_overrides(cfg, o);
    validate_for(cfg, cmd);
    std::filesystem::create_directories(cfg.out_dir);
    have_out = true;
    summary["config_hash"] = fnv1a_hex(cfg.source_text);
    summary["seed"] = cfg.seed;
    summary["parameters"] = background_params_json(cfg.background);
    summary["grid"] = grid_json(Grid(cfg.background.L, cfg.n1, cfg.n2));
    summary["iteration_config"] = iteration_config_json(cfg.iteration);

    int code = 0;
    switch (cmd) {
      case Subcommand::background: code = run_background(cfg, summary); break;
      case Subcommand::phase: code = run_phase(cfg, summary); break;
      case Subcommand::solve: code = run_solve(cfg, summary); break;
      case Subcommand::verify: code = run_verify(cfg, summary); break;
      case Subcommand::stability: code = run_stability(cfg, summary); break;
      case Subcommand::uniqueness: code = run_uniqueness(cfg, summary); break;
    }
    return finish(code, "ok");
  } catch (const Error& e) {
    std::cerr << "gravduct: " << class_name(e.error_class()) << " error: " << e.what() << '\n';
    summary["error"] = {{"class", class_name(e.error_class())}, {"message", e.what()}};
    return finish(exit_code(e.error_class()), "error");
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gravduct: " << e.what() << '\n';
    return finish(2, "error");
  } catch (const std::exception& e) {
    std::cerr << "gravduct: internal error: " << e.what() << '\n';
    summary["error"] = {{"class", "internal"}, {"message", e.what()}};
    return finish(1, "error");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady subsonic Euler-Poisson flow in a flat duct"};
  app.require_subcommand(1);
  Overrides o;
  const char* names[] = {"background", "phase", "solve", "verify", "stability", "uniqueness"};
  const char* help[] = {"1D background profiles, lifespan bounds and coercivity margin",
                        "level sets of the first integral in the (rho, G) plane",
                        "nonlinear 2D pipeline with field export and residual report",
                        "manufactured solutions, oracle and coercivity suites",
                        "sigma sweep and linear-response ratio",
                        "multi-start agreement of the fixed point"};
  for (int k = 0; k < 6; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", o.config, "configuration file")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--grid", o.grid, "grid size N1xN2");
    sub->add_option("--sigma", o.sigma, "boundary perturbation amplitude");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(parse_subcommand(app.get_subcommands().front()->get_name()), o);
}
