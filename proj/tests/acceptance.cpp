// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gravduct/background.hpp"
#include "gravduct/driver.hpp"
#include "gravduct/elliptic.hpp"
#include "gravduct/errors.hpp"
#include "gravduct/formulation.hpp"
#include "gravduct/verification.hpp"

using namespace gravduct;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BackgroundParams reference_params(double L = 0.5) {
  BackgroundParams p;
  p.gamma = 2.0;
  p.S0 = 1.0;
  p.m0 = std::sqrt(2.0 * std::exp(1.0));
  p.rho0 = 2.0;
  p.G0 = -1.0;
  p.L = L;
  return p;
}

BoundaryData reference_data(const BackgroundSolution& bg, double sigma) {
  BoundaryData d = BoundaryData::around(bg);
  d.sigma = sigma;
  d.G_en_mode = {1.0, 1};
  d.S_en_mode = {0.5, 1};
  d.p_ex_mode = {1.0, 2};
  d.Phi_bd_mode = {1.0, 2};
  return d;
}

// Random subsonic inlet: gamma in [1.2, 3], m0 in [0.5, 3], S0 in [0.05, 1.5],
// rho0 in (1.1, 4) rho_s, G0 in [-2, 2].
BackgroundParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  BackgroundParams p;
  p.gamma = 1.2 + 1.8 * U(rng);
  p.m0 = 0.5 + 2.5 * U(rng);
  p.S0 = 0.05 + 1.45 * U(rng);
  p.rho0 = critical_density(p) * (1.1 + 2.9 * U(rng));
  p.G0 = -2.0 + 4.0 * U(rng);
  return p;
}

// 1. First integral and RK4 order.
Outcome check_first_integral() {
  const auto t0 = std::chrono::steady_clock::now();
  // A duct near the lower lifespan bound exercises the stiff end of the profile.
  const BackgroundParams p = reference_params(2.0);
  const BackgroundSolution fine = integrate_background(p, 10001);
  const double drift = fine.relative_drift();
  const double runtime = seconds_since(t0);

  const BackgroundSolution ref = integrate_background(p, 12801);
  std::vector<double> errs;
  for (std::size_t n : {51, 101, 201, 401}) {
    const BackgroundSolution b = integrate_background(p, n);
    errs.push_back(std::max(std::abs(b.rho().back() - ref.rho().back()), std::abs(b.G().back() - ref.G().back())));
  }
  double order = 1e300;
  for (double o : observed_orders(errs)) order = std::min(order, o);
  return {drift <= 1e-10 && order >= 3.8 && runtime < 1.0,
          fmt("relative drift %.2e at 1e4 steps, min order %.3f, %.3f s", drift, order, runtime)};
}

// 2. Branch preservation.
Outcome check_branch_preservation() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0.05, 0.99);
  int violations = 0, failures = 0;
  for (int k = 0; k < 100; ++k) {
    BackgroundParams p = random_params(rng);
    p.L = U(rng) * lifespan_bounds(p).lower;
    try {
      const BackgroundSolution bg = integrate_background(p, 2001);
      const double rs = critical_density(p);
      for (double r : bg.rho()) violations += (r > rs) ? 0 : 1;
    } catch (const Error&) {
      ++failures;
    }
  }
  return {violations == 0 && failures == 0,
          fmt("100 draws, %d sign violations, %d integration failures", violations, failures)};
}

// 3. Lifespan bracketing and the rho0 trend.
Outcome check_lifespan_bracketing() {
  std::mt19937_64 rng(303);
  int outside = 0;
  double worst_low = 1e300, worst_high = 1e300;
  for (int k = 0; k < 50; ++k) {
    const BackgroundParams p = random_params(rng);
    const LifespanBounds b = lifespan_bounds(p);
    const double x = detect_sonic_abscissa(p, 2.0 * b.upper, 100000);
    worst_low = std::min(worst_low, x - b.lower);
    worst_high = std::min(worst_high, b.upper - x);
    outside += (x >= b.lower && x <= b.upper) ? 0 : 1;
  }
  BackgroundParams g3;
  g3.gamma = 3.0;
  g3.m0 = 1.0;
  g3.S0 = 1.0;
  g3.G0 = 0.0;
  g3.rho0 = 10.0;
  const double low10 = lifespan_bounds(g3).lower;
  g3.rho0 = 1000.0;
  const double low1000 = lifespan_bounds(g3).lower;
  const double trend = low1000 / low10;
  return {outside == 0 && trend >= 3.0,
          fmt("50 draws, %d outside (min margins %.3g below, %.3g above); gamma=3 trend %.3g", outside,
              worst_low, worst_high, trend)};
}

// 4. Coefficient fidelity.
Outcome check_coefficient_fidelity(const BackgroundSolution& bg, double delta0) {
  const JacobianCheck j = coefficient_jacobian_check(bg, delta0);
  return {j.max_relative_error <= 1e-6 && j.max_b2_plus_c2 == 0.0 && j.d_bounds_hold,
          fmt("Jacobian rel %.2e, max |b2+c2| %.1e, d in [%.4f, %.4f]", j.max_relative_error, j.max_b2_plus_c2,
              j.d_min, j.d_max)};
}

// 5. Remainder oracles.
Outcome check_remainder_oracles(const BackgroundSolution& bg) {
  const RemainderOracle r = remainder_oracle(bg, 100, 505);
  const SmallnessCheck s = quadratic_smallness(bg, 100, 505);
  const bool quad = std::abs(std::log(s.ratio_F / 100.0)) <= std::log(1.25) &&
                    std::abs(std::log(s.ratio_g / 100.0)) <= std::log(1.25);
  return {r.max_error_F <= 1e-10 && r.max_error_g <= 1e-10 && quad,
          fmt("quadrature error F %.2e g %.2e; scale ratios %.2f, %.2f", r.max_error_F, r.max_error_g, s.ratio_F,
              s.ratio_g)};
}

// 6. Linear solver.
Outcome check_linear_solver() {
  const ConvergenceStudy s = mms_convergence({32, 64, 128, 256}, 0.5);
  const Grid g(0.5, 64, 64);
  const BackgroundSolution bg = background_for_grid(reference_params(), g);
  const double delta0 = subsonic_margin(bg).delta0;
  const EllipticCoefficients coef = grid_coefficients(bg, g, delta0);
  const LinearSolution z = solve(LinearProblem::zero(g, coef));
  const double zero = std::max(z.phi.max_abs(), z.Psi.max_abs());
  const double agree = homogenize_agreement(g, coef, 20, 606);
  return {s.min_order >= 1.9 && zero == 0.0 && agree <= 1e-8,
          fmt("MMS orders %.3f %.3f %.3f; zero data -> %.1e; two-path max diff %.2e", s.order[0], s.order[1],
              s.order[2], zero, agree)};
}

// 7. Discrete coercivity.
Outcome check_discrete_coercivity() {
  double worst = 1e300, worst_inflated = -1e300;
  int positive = 0, flagged = 0;
  for (int k = 0; k < 10; ++k) {
    const double target = 0.1 + 0.8 * k / 9.0;
    BackgroundParams p = reference_params();
    p.L = length_for_margin(p, target);
    const Grid g(p.L, 32, 32);
    const BackgroundSolution bg = background_for_grid(p, g);
    const double delta0 = subsonic_margin(bg).delta0;
    EllipticCoefficients coef = grid_coefficients(bg, g, delta0);
    const double lb = coercivity_check(g, coef).lower_bound;
    worst = std::min(worst, lb);
    positive += lb > 0.0;
    for (double& d : coef.d) d = -3.0 / (p.L * p.L);
    const double lbi = coercivity_check(g, coef).lower_bound;
    worst_inflated = std::max(worst_inflated, lbi);
    flagged += lbi <= 0.0;
  }
  return {positive == 10 && flagged == 10,
          fmt("%d/10 positive (min %.4f); inflated d: %d/10 nonpositive (max %.4f)", positive, worst, flagged,
              worst_inflated)};
}

// 8. Transport.
Outcome check_transport() {
  const TransportCheck t = transport_suite({32, 64, 128, 256}, 0.5, std::sqrt(2.0 * std::exp(1.0)));
  return {t.defect <= 1e-10 && t.streamline.min_order >= 1.9 && t.range_excess == 0.0 && t.inlet_error <= 1e-10,
          fmt("defect %.2e, streamline order %.3f, range excess %.1e, inlet error %.1e", t.defect,
              t.streamline.min_order, t.range_excess, t.inlet_error)};
}

struct PipelineRun {
  IterationLog log;
  FlowState flow;
  double seconds = 0.0;
};

PipelineRun run_pipeline(int n, double sigma) {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid g(0.5, n, n);
  const BackgroundSolution bg = background_for_grid(reference_params(), g);
  const FixedPointMap map(bg, g, reference_data(bg, sigma));
  IterationConfig cfg;
  cfg.sigma = sigma;
  IterationResult r = iterate(map, cfg);
  PipelineRun out{r.log, reconstruct(bg, r.state), 0.0};
  out.seconds = seconds_since(t0);
  return out;
}

// 9. Nonlinear pipeline.
Outcome check_pipeline() {
  const double tol = IterationConfig{}.tol_fixpoint;
  std::vector<PipelineRun> runs;
  for (int n : {32, 64, 128}) runs.push_back(run_pipeline(n, 1e-3));
  const PipelineRun& main = runs[1];

  double worst_ratio = 0.0;
  const auto& rec = main.log.records;
  for (std::size_t k = 2; k < rec.size(); ++k) {
    if (rec[k].difference <= tol) break;
    worst_ratio = std::max(worst_ratio, rec[k].difference / rec[k - 1].difference);
  }
  const bool decay = main.log.converged && worst_ratio < 0.9;
  const bool physical = main.flow.max_mach < 1.0 && main.flow.min_rho > 0.0;

  // A residual already at rounding level has nothing left to converge.
  const double floor = 1e-11;
  using Field = double ResidualReport::*;
  const std::pair<const char*, Field> fields[] = {
      {"mass", &ResidualReport::mass},         {"momentum_x", &ResidualReport::momentum_x},
      {"momentum_y", &ResidualReport::momentum_y}, {"energy", &ResidualReport::energy},
      {"poisson", &ResidualReport::poisson},   {"entropy", &ResidualReport::entropy},
      {"K_sup", &ResidualReport::K_sup}};
  double min_order = 1e300;
  std::string worst = "none";
  for (const auto& [name, f] : fields) {
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
      const double a = runs[k].flow.residuals.*f, b = runs[k + 1].flow.residuals.*f;
      if (b <= floor) continue;
      const double o = std::log2(a / b);
      if (o < min_order) {
        min_order = o;
        worst = name;
      }
    }
  }
  const bool orders = min_order >= 1.5;
  const bool pass = decay && main.log.fixed_point_defect <= tol && physical && orders && main.seconds < 60.0;
  return {pass, fmt("%zu iterations, worst decay ratio %.3f, defect %.2e, max Mach %.4f, min rho %.4f, min residual "
                    "order %.3f (%s), %.2f s at 64x64",
                    rec.size(), worst_ratio, main.log.fixed_point_defect, main.flow.max_mach, main.flow.min_rho,
                    min_order, worst.c_str(), main.seconds)};
}

// 10. Stability scaling.
Outcome check_stability() {
  const Grid g(0.5, 64, 64);
  const BackgroundSolution bg = background_for_grid(reference_params(), g);
  bool pass = true;
  std::ostringstream detail;
  for (double sigma : {1e-3, 5e-4}) {
    IterationConfig cfg;
    cfg.sigma = sigma;
    const StabilityReport r = stability_experiment(bg, g, reference_data(bg, sigma), cfg);
    pass = pass && r.ratio >= 1.8 && r.ratio <= 2.2;
    detail << fmt("sigma %.0e ratio %.5f; ", sigma, r.ratio);
  }
  return {pass, detail.str()};
}

// 11. Uniqueness.
Outcome check_uniqueness() {
  const Grid g(0.5, 64, 64);
  const BackgroundSolution bg = background_for_grid(reference_params(), g);
  const FixedPointMap map(bg, g, reference_data(bg, 1e-3));
  IterationConfig cfg;
  const UniquenessReport r = uniqueness_experiment(map, cfg, 3, 1111);
  int accepted = 0;
  for (const auto& s : r.starts) accepted += s.accepted;
  return {accepted == 3 && r.max_difference <= 10.0 * cfg.tol_fixpoint,
          fmt("%d/3 starts accepted, max pairwise difference %.2e (bound %.0e)", accepted, r.max_difference,
              10.0 * cfg.tol_fixpoint)};
}

// 12. sigma = 0 through the CLI.
Outcome check_zero_identity() {
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "gravduct_acceptance_zero";
  fs::remove_all(out);
  const std::string cmd = std::string(GRAVDUCT_CLI) + " solve --config " + GRAVDUCT_TEST_DATA +
                          "/reference.ini --sigma 0 --out " + out.string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  double dev = NAN;
  try {
    std::ifstream in(out / "summary.json");
    dev = nlohmann::json::parse(in)["flow"]["background_deviation"].get<double>();
  } catch (const std::exception&) {
  }
  fs::remove_all(out);
  return {code == 0 && dev <= 1e-10, fmt("exit code %d, background deviation %.2e", code, dev)};
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const BackgroundSolution bg = integrate_background(reference_params(), 10001);
  const double delta0 = subsonic_margin(bg).delta0;

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"first-integral conservation", check_first_integral},
      {"branch preservation", check_branch_preservation},
      {"lifespan bracketing", check_lifespan_bracketing},
      {"coefficient fidelity", [&] { return check_coefficient_fidelity(bg, delta0); }},
      {"remainder oracles", [&] { return check_remainder_oracles(bg); }},
      {"linear solver", check_linear_solver},
      {"discrete coercivity", check_discrete_coercivity},
      {"transport", check_transport},
      {"nonlinear pipeline", check_pipeline},
      {"stability scaling", check_stability},
      {"empirical uniqueness", check_uniqueness},
      {"sigma = 0 identity", check_zero_identity},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              seconds_since(t0));
  return failed == 0 ? 0 : 1;
}
