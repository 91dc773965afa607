#include "gravduct/background.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "gravduct/errors.hpp"

namespace gravduct {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw DomainError("background." + field + " " + what);
}

int branch_sign(const BackgroundParams& params) {
  return params.rho0 > critical_density(params) ? 1 : -1;
}

// (rho', G') for the background ODE.
std::array<double, 2> rhs(const BackgroundParams& params, double rho, double G) {
  return {-rho * G / sonic_denominator(params, rho), rho};
}

struct Rk4Step {
  double rho;
  double G;
  bool ok;
};

// One RK4 step; fails if any stage leaves the guarded region of its branch.
Rk4Step rk4_step(const BackgroundParams& params, double rho, double G, double h, double nu_floor,
                 int sign) {
  auto admissible = [&](double r) {
    return r > 0.0 && std::isfinite(r) && sign * sonic_denominator(params, r) >= nu_floor;
  };
  if (!admissible(rho)) return {rho, G, false};
  const auto k1 = rhs(params, rho, G);
  const double r2 = rho + 0.5 * h * k1[0];
  if (!admissible(r2)) return {rho, G, false};
  const auto k2 = rhs(params, r2, G + 0.5 * h * k1[1]);
  const double r3 = rho + 0.5 * h * k2[0];
  if (!admissible(r3)) return {rho, G, false};
  const auto k3 = rhs(params, r3, G + 0.5 * h * k2[1]);
  const double r4 = rho + h * k3[0];
  if (!admissible(r4)) return {rho, G, false};
  const auto k4 = rhs(params, r4, G + h * k3[1]);
  const double rho_next = rho + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
  const double G_next = G + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
  if (!admissible(rho_next)) return {rho, G, false};
  return {rho_next, G_next, true};
}

double guard_floor(const BackgroundParams& params, const IntegrationOptions& options) {
  return options.nu_floor_factor * std::abs(sonic_denominator(params, params.rho0));
}

// Cumulative Simpson quadrature on uniform nodes; odd nodes close with the
// three-point partial-interval rule.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[1] = 0.5 * h * (f[0] + f[1]);
    return out;
  }
  for (std::size_t i = 2; i < n; i += 2) {
    out[i] = out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
  }
  for (std::size_t i = 1; i < n; i += 2) {
    if (i + 1 < n) {
      out[i] = out[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1]);
    } else {
      out[i] = out[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    }
  }
  return out;
}

}  // namespace

void BackgroundParams::validate() const {
  require(std::isfinite(gamma) && gamma > 1.0, "gamma", "must be > 1");
  require(std::isfinite(m0) && m0 > 0.0, "m0", "must be > 0");
  require(std::isfinite(S0) && S0 > 0.0, "S0", "must be > 0");
  require(std::isfinite(rho0) && rho0 > 0.0, "rho0", "must be > 0");
  require(std::isfinite(G0), "G0", "must be finite");
  require(std::isfinite(L) && L > 0.0, "L", "must be > 0");
}

double critical_density(const BackgroundParams& params) {
  return std::pow(params.m0 * params.m0 / (params.gamma * std::exp(params.S0)),
                  1.0 / (params.gamma + 1.0));
}

double sonic_denominator(const BackgroundParams& params, double rho) {
  return params.gamma * std::exp(params.S0) * std::pow(rho, params.gamma - 1.0) -
         params.m0 * params.m0 / (rho * rho);
}

double enthalpy_H(const BackgroundParams& params, double rho) {
  if (!(rho > 0.0)) throw DomainError("enthalpy_H: density must be > 0");
  const double m2 = params.m0 * params.m0;
  const double rho_s = critical_density(params);
  return std::exp(params.S0) * std::pow(rho, params.gamma) + m2 / rho -
         (params.gamma + 1.0) / params.gamma * m2 / rho_s;
}

double first_integral(const BackgroundParams& params, double rho, double G) {
  return enthalpy_H(params, rho) + 0.5 * G * G;
}

double terminal_G(const BackgroundParams& params) {
  params.validate();
  const double H0 = enthalpy_H(params, params.rho0);
  return std::sqrt(2.0 * H0 + params.G0 * params.G0);
}

double turning_density(const BackgroundParams& params) {
  params.validate();
  const double rho_s = critical_density(params);
  if (params.rho0 == rho_s) throw DomainError("turning_density: rho0 equals the sonic density");
  const double target = enthalpy_H(params, params.rho0) + 0.5 * params.G0 * params.G0;
  if (params.G0 == 0.0) return params.rho0;

  // H is monotone on each branch and unbounded at its far end.
  double inner = params.rho0;
  double outer = params.rho0;
  const bool upper_branch = params.rho0 > rho_s;
  for (int k = 0; k < 2000 && enthalpy_H(params, outer) < target; ++k) {
    inner = outer;
    outer = upper_branch ? 2.0 * outer : 0.5 * outer;
  }
  if (enthalpy_H(params, outer) < target) {
    throw Error(ErrorClass::numerical, "turning_density: bracket expansion failed");
  }
  for (int k = 0; k < 400; ++k) {
    const double mid = 0.5 * (inner + outer);
    if (enthalpy_H(params, mid) < target) {
      inner = mid;
    } else {
      outer = mid;
    }
    if (std::abs(outer - inner) <= 1e-14 * std::abs(outer)) break;
  }
  return 0.5 * (inner + outer);
}

LifespanBounds lifespan_bounds(const BackgroundParams& params) {
  params.validate();
  const double rho_s = critical_density(params);
  if (!(params.rho0 > rho_s)) {
    throw DomainError("lifespan_bounds: requires rho0 > rho_s");
  }
  const double gap = terminal_G(params) - params.G0;
  return {gap / turning_density(params), gap / rho_s};
}

double BackgroundSolution::relative_drift() const {
  const auto& pr = params_;
  const double scale = std::exp(pr.S0) * std::pow(pr.rho0, pr.gamma) + pr.m0 * pr.m0 / pr.rho0 +
                       0.5 * pr.G0 * pr.G0;
  return drift_ / scale;
}

double BackgroundSolution::inlet_bernoulli() const {
  const auto& pr = params_;
  return pr.m0 * pr.m0 / (2.0 * pr.rho0 * pr.rho0) +
         pr.gamma * std::exp(pr.S0) * std::pow(pr.rho0, pr.gamma - 1.0) / (pr.gamma - 1.0);
}

BackgroundSolution::Point BackgroundSolution::at(double x) const {
  const std::size_t n = x1_.size();
  if (n == 1 || spacing_ == 0.0) return {rho_[0], G_[0], Phi0_[0]};
  const double s = std::clamp(x / spacing_, 0.0, static_cast<double>(n - 1));
  std::size_t k = static_cast<std::size_t>(std::floor(s));
  if (k >= n - 1) k = n - 2;
  const double t = s - static_cast<double>(k);
  if (t == 0.0) return {rho_[k], G_[k], Phi0_[k]};
  if (t == 1.0) return {rho_[k + 1], G_[k + 1], Phi0_[k + 1]};

  const double h = spacing_;
  const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
  const double h10 = t * (1.0 - t) * (1.0 - t);
  const double h01 = t * t * (3.0 - 2.0 * t);
  const double h11 = t * t * (t - 1.0);
  auto hermite = [&](double y0, double y1, double d0, double d1) {
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
  };
  const double drho0 = rhs(params_, rho_[k], G_[k])[0];
  const double drho1 = rhs(params_, rho_[k + 1], G_[k + 1])[0];
  return {hermite(rho_[k], rho_[k + 1], drho0, drho1),
          hermite(G_[k], G_[k + 1], rho_[k], rho_[k + 1]),
          hermite(Phi0_[k], Phi0_[k + 1], G_[k], G_[k + 1])};
}

BackgroundSolution integrate_background(const BackgroundParams& params, std::size_t n_nodes,
                                        const IntegrationOptions& options) {
  params.validate();
  if (n_nodes < 2) throw DomainError("integrate_background: n_nodes must be >= 2");
  const double rho_s = critical_density(params);
  if (params.rho0 == rho_s) throw DomainError("integrate_background: rho0 equals the sonic density");

  BackgroundSolution bg;
  bg.params_ = params;
  bg.spacing_ = params.L / static_cast<double>(n_nodes - 1);
  bg.x1_.resize(n_nodes);
  bg.rho_.resize(n_nodes);
  bg.G_.resize(n_nodes);

  const int sign = branch_sign(params);
  const double floor = guard_floor(params, options);
  const double h = bg.spacing_;
  bg.rho_[0] = params.rho0;
  bg.G_[0] = params.G0;
  for (std::size_t k = 0; k < n_nodes; ++k) bg.x1_[k] = static_cast<double>(k) * h;
  bg.x1_.back() = params.L;

  for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
    const auto step = rk4_step(params, bg.rho_[k], bg.G_[k], h, floor, sign);
    if (!step.ok) throw SonicApproach(bg.x1_[k]);
    bg.rho_[k + 1] = step.rho;
    bg.G_[k + 1] = step.G;
  }

  const double e = std::exp(params.S0);
  bg.u_.resize(n_nodes);
  bg.p_.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    bg.u_[k] = params.m0 / bg.rho_[k];
    bg.p_[k] = e * std::pow(bg.rho_[k], params.gamma);
  }
  bg.Phi0_ = cumulative_simpson(bg.G_, h);
  const double B0 = bg.inlet_bernoulli();
  for (double& v : bg.Phi0_) v -= B0;

  const double E0 = first_integral(params, params.rho0, params.G0);
  double drift = 0.0;
  for (std::size_t k = 0; k < n_nodes; ++k) {
    drift = std::max(drift, std::abs(first_integral(params, bg.rho_[k], bg.G_[k]) - E0));
  }
  bg.drift_ = drift;
  return bg;
}

double detect_sonic_abscissa(const BackgroundParams& params, double x_max, std::size_t n_steps,
                             const IntegrationOptions& options) {
  params.validate();
  if (n_steps == 0 || !(x_max > 0.0)) throw DomainError("detect_sonic_abscissa: bad resolution");
  const int sign = branch_sign(params);
  const double floor = guard_floor(params, options);
  const double h0 = x_max / static_cast<double>(n_steps);
  const double h_min = 1e-14 * x_max;

  double x = 0.0;
  double rho = params.rho0;
  double G = params.G0;
  double h = h0;
  while (x < x_max) {
    h = std::min(h, x_max - x);
    const auto step = rk4_step(params, rho, G, h, floor, sign);
    if (step.ok) {
      x += h;
      rho = step.rho;
      G = step.G;
      continue;
    }
    h *= 0.5;
    if (h < h_min) return x;
  }
  return x_max;
}

SubsonicMargin subsonic_margin(const BackgroundSolution& bg) {
  const auto& pr = bg.params();
  const int sign = branch_sign(pr);
  double worst = -std::numeric_limits<double>::infinity();
  double nu0 = std::numeric_limits<double>::infinity();
  for (double rho : bg.rho()) {
    const double nu = sonic_denominator(pr, rho);
    nu0 = std::min(nu0, sign * nu);
    worst = std::max(worst, rho * pr.L * pr.L / (2.0 * nu));
  }
  return {1.0 - worst, nu0};
}

CriticalData critical_data(const BackgroundSolution& bg) {
  const auto& pr = bg.params();
  CriticalData out;
  out.rho_s = critical_density(pr);
  out.G_M = terminal_G(pr);
  out.rho_M = turning_density(pr);
  if (pr.rho0 > out.rho_s) {
    const auto bounds = lifespan_bounds(pr);
    out.L_bar_lower = bounds.lower;
    out.L_bar_upper = bounds.upper;
  }
  const auto margin = subsonic_margin(bg);
  out.nu0 = margin.nu0;
  out.delta0 = margin.delta0;
  return out;
}

std::vector<PhasePoint> phase_portrait(const BackgroundParams& params,
                                       const std::vector<double>& levels, double rho_min,
                                       double rho_max, std::size_t samples) {
  params.validate();
  if (!(rho_min > 0.0) || !(rho_max > rho_min) || samples < 2) {
    throw DomainError("phase_portrait: need 0 < rho_min < rho_max and samples >= 2");
  }
  std::vector<PhasePoint> out;
  for (double level : levels) {
    for (std::size_t k = 0; k < samples; ++k) {
      const double rho =
          rho_min + (rho_max - rho_min) * static_cast<double>(k) / static_cast<double>(samples - 1);
      const double slack = level - enthalpy_H(params, rho);
      if (slack < 0.0) continue;
      const double G = std::sqrt(2.0 * slack);
      out.push_back({rho, G, level});
      out.push_back({rho, -G, level});
    }
  }
  return out;
}

}  // namespace gravduct
