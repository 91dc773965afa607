#include "gravduct/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "gravduct/errors.hpp"
#include "gravduct/formulation.hpp"
#include "gravduct/transport.hpp"

namespace gravduct {

namespace {

constexpr double kPi = std::numbers::pi;

struct SyntheticProfile {
  double L;
  double a11(double x) const { return 1.0 + 0.25 * x / L; }
  double a11_d(double) const { return 0.25 / L; }
  double a22(double x) const { return 1.2 + 0.1 * std::cos(2.0 * x / L); }
  double b2(double x) const { return 0.3 * (1.0 + x / L); }
  double d(double x) const { return -(0.5 + 0.2 * x / L) / (L * L); }
};

// Manufactured flux F = (0.5 cos(x1/L) x2, 0.4 sin(x1/L) sin(x2)).
double mms_F1(double L, double x1, double x2) { return 0.5 * std::cos(x1 / L) * x2; }
double mms_F2(double L, double x1, double x2) { return 0.4 * std::sin(x1 / L) * std::sin(x2); }
double mms_divF(double L, double x1, double x2) {
  return -0.5 / L * std::sin(x1 / L) * x2 + 0.4 * std::sin(x1 / L) * std::cos(x2);
}

// Sum of three separable cosines with random frequencies and phases.
struct RandomSmooth {
  std::array<double, 3> a, f1, p1, f2, p2;

  template <class Rng>
  explicit RandomSmooth(Rng& rng) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.0, 3.0), phase(0.0, 2.0 * kPi);
    for (int k = 0; k < 3; ++k) {
      a[k] = amp(rng);
      f1[k] = freq(rng);
      p1[k] = phase(rng);
      f2[k] = freq(rng);
      p2[k] = phase(rng);
    }
  }
  double operator()(double s, double x2) const {
    double out = 0.0;
    for (int k = 0; k < 3; ++k) out += a[k] * std::cos(f1[k] * s + p1[k]) * std::cos(f2[k] * x2 + p2[k]);
    return out;
  }
};

}  // namespace

std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t k = 1; k < errors.size(); ++k) out.push_back(std::log2(errors[k - 1] / errors[k]));
  return out;
}

EllipticCoefficients synthetic_coefficients(const Grid& grid) {
  const SyntheticProfile s{grid.L};
  return EllipticCoefficients::from_functions(
      grid, [&](double x) { return s.a11(x); }, [&](double x) { return s.a22(x); },
      [&](double x) { return s.b2(x); }, [&](double x) { return -s.b2(x); },
      [&](double x) { return s.d(x); });
}

double mms_phi(double L, double x1, double x2) {
  return std::sin(kPi * x1 / (2.0 * L)) * std::cos(kPi * x2);
}

double mms_Psi(double L, double x1, double x2) {
  return std::cos(kPi * x1 / (2.0 * L)) * std::cos(kPi * x2);
}

LinearProblem mms_problem(const Grid& grid, const EllipticCoefficients& coef) {
  const double L = grid.L;
  const double k = kPi / (2.0 * L);
  const SyntheticProfile s{L};
  LinearProblem p = LinearProblem::zero(grid, coef);

  // Operators applied to the exact pair, with the analytic coefficient functions.
  auto L1 = [&](double x1, double x2) {
    const double c1 = std::cos(k * x1), s1 = std::sin(k * x1);
    const double c2 = std::cos(kPi * x2), s2 = std::sin(kPi * x2);
    return s.a11_d(x1) * k * c1 * c2 - s.a11(x1) * k * k * s1 * c2 - s.a22(x1) * kPi * kPi * s1 * c2 -
           s.b2(x1) * kPi * c1 * s2;
  };
  auto L2 = [&](double x1, double x2) {
    const double c1 = std::cos(k * x1), s1 = std::sin(k * x1);
    const double c2 = std::cos(kPi * x2), s2 = std::sin(kPi * x2);
    const double Psi = c1 * c2;
    // c2 coefficient is -b2, and d2 phi = -pi s1 s2.
    return -(k * k + kPi * kPi) * Psi - s.d(x1) * Psi - s.b2(x1) * kPi * s1 * s2;
  };
  p.F1 = ScalarField::sample(grid, "F1", [&](double a, double b) { return mms_F1(L, a, b); });
  p.F2 = ScalarField::sample(grid, "F2", [&](double a, double b) { return mms_F2(L, a, b); });
  p.f = ScalarField::sample(grid, "f", [&](double a, double b) { return L1(a, b) - mms_divF(L, a, b); });
  p.g = ScalarField::sample(grid, "g", L2);

  p.phi_inlet_flux.resize(grid.n2 + 1);
  for (int j = 0; j <= grid.n2; ++j) {
    const double x2 = grid.x2(j);
    p.phi_inlet_flux[j] = k * std::cos(kPi * x2);
    p.g_en[j] = 0.0;
    p.Psi_bd[j] = mms_Psi(L, L, x2);
    p.h_exit[j] = -kPi * std::sin(kPi * L / (2.0 * L)) * std::sin(kPi * x2);
  }
  p.phi_lower.resize(grid.n1 + 1);
  p.phi_upper.resize(grid.n1);
  for (int i = 0; i <= grid.n1; ++i) {
    p.phi_lower[i] = mms_phi(L, grid.x1(i), -1.0);
    if (i < grid.n1) p.phi_upper[i] = mms_phi(L, grid.x1(i), 1.0);
  }
  return p;
}

ConvergenceStudy mms_convergence(const std::vector<int>& sizes, double L,
                                 const SolverOptions& options) {
  ConvergenceStudy out;
  for (int n : sizes) {
    const Grid grid(L, n, n);
    const LinearSolution sol = solve(mms_problem(grid, synthetic_coefficients(grid)), options);
    double err = 0.0;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const double x1 = grid.x1(i), x2 = grid.x2(j);
        err = std::max({err, std::abs(sol.phi(i, j) - mms_phi(L, x1, x2)),
                        std::abs(sol.Psi(i, j) - mms_Psi(L, x1, x2))});
      }
    }
    out.n.push_back(n);
    out.error.push_back(err);
  }
  out.order = observed_orders(out.error);
  out.min_order = out.order.empty() ? 0.0 : *std::min_element(out.order.begin(), out.order.end());
  return out;
}

LinearProblem random_problem(const Grid& grid, const EllipticCoefficients& coef,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const RandomSmooth f(rng), F1(rng), F2(rng), g(rng), gen(rng), h(rng);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::array<double, 4> psi_modes;
  for (double& a : psi_modes) a = amp(rng);

  LinearProblem p = LinearProblem::zero(grid, coef);
  auto scaled = [&](const RandomSmooth& r) {
    return [&r, L = grid.L](double x1, double x2) { return r(x1 / L, x2); };
  };
  p.f = ScalarField::sample(grid, "f", scaled(f));
  p.F1 = ScalarField::sample(grid, "F1", scaled(F1));
  p.F2 = ScalarField::sample(grid, "F2", scaled(F2));
  p.g = ScalarField::sample(grid, "g", scaled(g));
  for (int j = 0; j <= grid.n2; ++j) {
    const double x2 = grid.x2(j);
    p.g_en[j] = gen(0.0, x2);
    p.h_exit[j] = h(1.0, x2);
    double psi = 0.0;
    for (int k = 0; k < 4; ++k) psi += psi_modes[k] * std::cos(k * kPi * (x2 + 1.0) / 2.0);
    p.Psi_bd[j] = psi;
  }
  return p;
}

double homogenize_agreement(const Grid& grid, const EllipticCoefficients& coef, int draws,
                            std::uint64_t seed, const SolverOptions& options) {
  const LinearSolver solver(grid, coef, options);
  double worst = 0.0;
  for (int k = 0; k < draws; ++k) {
    const LinearProblem p = random_problem(grid, coef, seed + k);
    const LinearSolution a = solver.solve(p);
    const LinearSolution b = homogenize_oracle(p, options);
    worst = std::max({worst, (a.phi - b.phi).max_abs(), (a.Psi - b.Psi).max_abs()});
  }
  return worst;
}

JacobianCheck coefficient_jacobian_check(const BackgroundSolution& bg, double delta0, int samples) {
  const auto& pr = bg.params();
  JacobianCheck out;
  out.d_min = std::numeric_limits<double>::infinity();
  out.d_max = -std::numeric_limits<double>::infinity();
  std::vector<double> xs;
  for (int k = 0; k < samples; ++k) xs.push_back(pr.L * k / (samples - 1));
  const CoefficientProfile prof = sample_coefficients(bg, xs, delta0);
  out.d_bounds_hold = prof.d_bounds_hold;

  for (int k = 0; k < samples; ++k) {
    const BaseState b = base_state(bg, xs[k]);
    const LinearCoefficients cf = prof.at(k);
    out.max_b2_plus_c2 = std::max(out.max_b2_plus_c2, std::abs(cf.b2 + cf.c2));
    out.d_min = std::min(out.d_min, cf.d);
    out.d_max = std::max(out.d_max, cf.d);

    auto eval = [&](double dq1, double dq2, double dz) {
      return momentum_map(b.gamma, {dq1, b.m0 + dq2}, b.Phi0 + dz, b.S0, 0.0, b.rho);
    };
    const double hq = 1e-6 * b.m0;
    const double hz = 1e-6 * std::max(1.0, std::abs(b.Phi0));
    const MomentumMap q1p = eval(hq, 0, 0), q1m = eval(-hq, 0, 0);
    const MomentumMap q2p = eval(0, hq, 0), q2m = eval(0, -hq, 0);
    const MomentumMap zp = eval(0, 0, hz), zm = eval(0, 0, -hz);
    const double a11 = (q1p.A1 - q1m.A1) / (2 * hq);
    const double a12 = (q2p.A1 - q2m.A1) / (2 * hq);
    const double a22 = (q2p.A2 - q2m.A2) / (2 * hq);
    const double b1 = (zp.A1 - zm.A1) / (2 * hz);
    const double b2 = (zp.A2 - zm.A2) / (2 * hz);
    const double c1 = (q1p.B - q1m.B) / (2 * hq);
    const double c2 = (q2p.B - q2m.B) / (2 * hq);
    const double d = (zp.B - zm.B) / (2 * hz);

    auto rel = [](double fd, double exact) { return std::abs(fd - exact) / std::abs(exact); };
    const double scale = std::max({std::abs(cf.a11), std::abs(cf.a22), std::abs(cf.b2), std::abs(cf.d)});
    out.max_relative_error = std::max({out.max_relative_error, rel(a11, cf.a11), rel(a22, cf.a22),
                                       rel(b2, cf.b2), rel(c2, cf.c2), rel(d, cf.d),
                                       std::abs(a12) / scale, std::abs(b1) / scale,
                                       std::abs(c1) / scale});
  }
  return out;
}

RemainderOracle remainder_oracle(const BackgroundSolution& bg, int samples, std::uint64_t seed) {
  using Quad = boost::math::quadrature::gauss<double, 16>;
  const auto& pr = bg.params();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), where(0.0, pr.L);
  RemainderOracle out;
  out.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const BaseState b = base_state(bg, where(rng));
    const Linearization lin(b);
    const Vec2 q = {0.05 * b.m0 * unit(rng), 0.05 * b.m0 * unit(rng)};
    const double z = 0.05 * unit(rng);
    const double dS = 0.05 * unit(rng);
    const auto& d0 = lin.background();

    // Derivatives along the segment t -> background + t (q, z, dS).
    auto at = [&](double t) {
      return momentum_derivatives(b.gamma, {t * q[0], b.m0 + t * q[1]}, b.Phi0 + t * z,
                                  b.S0 + t * dS, 0.0, b.rho);
    };
    const std::array<double, 3> inc = {q[0], q[1], z};
    const std::array<Arg, 3> arg = {kQ1, kQ2, kZ};
    auto F_integrand = [&](double t, int comp) {
      const MomentumDerivatives m = at(t);
      const auto& dA = comp == 0 ? m.dA1 : m.dA2;
      const auto& dA0 = comp == 0 ? d0.dA1 : d0.dA2;
      double v = -dS * dA[kS];
      for (int k = 0; k < 3; ++k) v += inc[k] * (dA0[arg[k]] - dA[arg[k]]);
      return v;
    };
    auto g_integrand = [&](double t) {
      const MomentumDerivatives m = at(t);
      double v = dS * m.dB[kS];
      for (int k = 0; k < 3; ++k) v += inc[k] * (m.dB[arg[k]] - d0.dB[arg[k]]);
      return v;
    };
    const double F1 = Quad::integrate([&](double t) { return F_integrand(t, 0); }, 0.0, 1.0);
    const double F2 = Quad::integrate([&](double t) { return F_integrand(t, 1); }, 0.0, 1.0);
    const double g = Quad::integrate(g_integrand, 0.0, 1.0);

    const Vec2 F = lin.F(q, z, b.S0 + dS);
    out.max_error_F = std::max({out.max_error_F, std::abs(F[0] - F1), std::abs(F[1] - F2)});
    out.max_error_g = std::max(out.max_error_g, std::abs(lin.g(q, z, b.S0 + dS) - g));
  }
  return out;
}

SmallnessCheck quadratic_smallness(const BackgroundSolution& bg, int samples, std::uint64_t seed) {
  const auto& pr = bg.params();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), where(0.0, pr.L);
  SmallnessCheck out;
  auto worse = [](double current, double r) {
    return std::abs(std::log(r / 100.0)) > std::abs(std::log(current / 100.0)) ? r : current;
  };
  out.ratio_F = out.ratio_g = 100.0;
  for (int s = 0; s < samples; ++s) {
    const BaseState b = base_state(bg, where(rng));
    const Linearization lin(b);
    const double u1 = unit(rng), u2 = unit(rng), uz = unit(rng);
    auto norms = [&](double eps) {
      const Vec2 q = {eps * b.m0 * u1, eps * b.m0 * u2};
      const Vec2 F = lin.F(q, eps * uz, b.S0);
      return std::pair{std::hypot(F[0], F[1]), std::abs(lin.g(q, eps * uz, b.S0))};
    };
    const auto big = norms(1e-2);
    const auto small = norms(1e-3);
    out.ratio_F = worse(out.ratio_F, big.first / small.first);
    out.ratio_g = worse(out.ratio_g, big.second / small.second);
  }
  return out;
}

PoincareCheck identity_coercivity(double L, int n) {
  const Grid grid(L, n, n);
  const auto one = [](double) { return 1.0; };
  const auto nil = [](double) { return 0.0; };
  const EllipticCoefficients coef = EllipticCoefficients::from_functions(grid, one, one, nil, nil, nil);
  PoincareCheck out;
  out.computed = coercivity_check(grid, coef).lower_bound;
  const double mu = std::pow(kPi / (2.0 * L), 2);
  out.expected = mu / (1.0 + mu);
  out.relative_error = std::abs(out.computed - out.expected) / out.expected;
  return out;
}

double length_for_margin(BackgroundParams params, double delta0_target, std::size_t nodes) {
  if (!(delta0_target > 0.0 && delta0_target < 1.0)) {
    throw DomainError("length_for_margin: target must lie in (0, 1)");
  }
  auto margin = [&](double L) {
    params.L = L;
    try {
      return subsonic_margin(integrate_background(params, nodes)).delta0;
    } catch (const SonicApproach&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  double lo = 0.0;
  double hi = lifespan_bounds(params).upper;
  if (margin(hi) > delta0_target) throw DomainError("length_for_margin: target not attained");
  for (int it = 0; it < 80 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) > delta0_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TransportCheck transport_suite(const std::vector<int>& sizes, double L, double m0) {
  const double S0 = 1.0, a = 0.1;
  const Trace trace = [&](double t) { return S0 + a * std::sin(kPi * t / 2.0); };
  auto phi_exact = [&](double x1, double x2) {
    return 0.1 * m0 * std::sin(kPi * x1 / (2.0 * L)) * (1.0 - x2 * x2) * (1.0 + 0.3 * x2);
  };
  TransportCheck out;
  std::vector<double> res;
  for (int n : sizes) {
    const Grid grid(L, n, n);
    const StreamMap map = build_stream_map(ScalarField::sample(grid, "phi", phi_exact), m0);
    const ScalarField S = transport_scalar(map, trace);
    res.push_back(streamline_residual(map.psi(), S));
    out.defect = map.defect();
    out.range_excess = 0.0;
    for (double v : S.values()) {
      out.range_excess = std::max({out.range_excess, v - (S0 + a), (S0 - a) - v});
    }
    out.inlet_error = 0.0;
    for (int j = 0; j <= n; ++j) {
      out.inlet_error = std::max(out.inlet_error, std::abs(map.theta()(0, j) - grid.x2(j)));
    }
  }
  out.streamline.n = sizes;
  out.streamline.error = res;
  out.streamline.order = observed_orders(res);
  out.streamline.min_order =
      out.streamline.order.empty() ? 0.0
                                   : *std::min_element(out.streamline.order.begin(), out.streamline.order.end());
  return out;
}

std::vector<VerifyItem> run_verification(const BackgroundSolution& bg, double delta0,
                                         std::uint64_t seed, const SolverOptions& options) {
  std::vector<VerifyItem> items;
  auto add_le = [&](std::string name, double value, double threshold) {
    items.push_back({std::move(name), value, threshold, value <= threshold});
  };
  auto add_ge = [&](std::string name, double value, double threshold) {
    items.push_back({std::move(name), value, threshold, value >= threshold});
  };
  const double L = bg.params().L;

  const ConvergenceStudy mms = mms_convergence({32, 64, 128}, L, options);
  add_ge("mms_min_order", mms.min_order, 1.9);

  const Grid small(L, 16, 16);
  const EllipticCoefficients small_coef = grid_coefficients(bg, small, delta0);
  const LinearSolution zero = solve(LinearProblem::zero(small, small_coef), options);
  add_le("zero_data_solution", std::max(zero.phi.max_abs(), zero.Psi.max_abs()), 0.0);

  const Grid mid(L, 32, 32);
  const EllipticCoefficients mid_coef = grid_coefficients(bg, mid, delta0);
  add_le("homogenize_agreement", homogenize_agreement(mid, mid_coef, 5, seed, options), 1e-8);

  const JacobianCheck jac = coefficient_jacobian_check(bg, delta0);
  add_le("coefficient_jacobian_rel", jac.max_relative_error, 1e-6);
  add_le("b2_plus_c2", jac.max_b2_plus_c2, 0.0);
  items.push_back({"d_bounds", jac.d_min, -(2.0 / (L * L)) * (1.0 - delta0), jac.d_bounds_hold});

  const RemainderOracle rem = remainder_oracle(bg, 100, seed);
  add_le("remainder_F_quadrature", rem.max_error_F, 1e-10);
  add_le("remainder_g_quadrature", rem.max_error_g, 1e-10);
  const SmallnessCheck sm = quadratic_smallness(bg, 20, seed);
  add_le("remainder_F_ratio_dev", std::abs(std::log(sm.ratio_F / 100.0)), std::log(1.25));
  add_le("remainder_g_ratio_dev", std::abs(std::log(sm.ratio_g / 100.0)), std::log(1.25));

  add_le("poincare_identity_rel", identity_coercivity(L, 32).relative_error, 0.1);
  const double lb = coercivity_check(mid, mid_coef).lower_bound;
  items.push_back({"coercivity_background", lb, 0.0, lb > 0.0});

  const TransportCheck tr = transport_suite({32, 64, 128, 256}, L, bg.params().m0);
  add_le("transport_defect", tr.defect, 1e-10);
  add_le("transport_range_excess", tr.range_excess, 0.0);
  add_le("transport_inlet_identity", tr.inlet_error, 1e-10);
  add_ge("streamline_residual_order", tr.streamline.min_order, 1.9);
  return items;
}

}  // namespace gravduct
