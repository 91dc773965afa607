#include "gravduct/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gravduct/errors.hpp"

namespace gravduct {

namespace {

double norm2(const Vec2& q) { return q[0] * q[0] + q[1] * q[1]; }

std::string describe(const Vec2& q, double z, double S, double K) {
  std::ostringstream os;
  os.precision(17);
  os << "q=(" << q[0] << ", " << q[1] << "), z=" << z << ", S=" << S << ", K=" << K;
  return os.str();
}

}  // namespace

double bernoulli_relation(double gamma, double rho, const Vec2& q, double z, double S, double K) {
  return 0.5 * norm2(q) / (rho * rho) + gamma * std::pow(rho, gamma - 1.0) * std::exp(S) / (gamma - 1.0) +
         z - K;
}

double bernoulli_relation_drho(double gamma, double rho, const Vec2& q, double S) {
  return -norm2(q) / (rho * rho * rho) + gamma * std::pow(rho, gamma - 2.0) * std::exp(S);
}

double local_sonic_density(double gamma, const Vec2& q, double S) {
  return std::pow(norm2(q) / (gamma * std::exp(S)), 1.0 / (gamma + 1.0));
}

double resolve_density(double gamma, const Vec2& q, double z, double S, double K,
                       double rho_guess, double rho_max) {
  if (!(std::isfinite(q[0]) && std::isfinite(q[1]) && std::isfinite(z) && std::isfinite(S) &&
        std::isfinite(K))) {
    throw NoSubsonicRoot("resolve_density: nonfinite input " + describe(q, z, S, K));
  }
  auto G = [&](double r) { return bernoulli_relation(gamma, r, q, z, S, K); };

  const double sonic = local_sonic_density(gamma, q, S);
  double lo = sonic > 0.0 ? sonic * (1.0 + 1e-9) : std::numeric_limits<double>::min();
  if (G(lo) > 0.0) {
    throw NoSubsonicRoot("resolve_density: no subsonic root at " + describe(q, z, S, K));
  }
  double hi = rho_max > 0.0 ? rho_max : 10.0 * std::max(rho_guess, lo);
  hi = std::max(hi, 2.0 * lo);
  for (int k = 0; G(hi) <= 0.0; ++k) {
    if (k > 200) throw NoSubsonicRoot("resolve_density: bracket growth failed at " + describe(q, z, S, K));
    lo = hi;
    hi *= 2.0;
  }

  double x = (rho_guess > lo && rho_guess < hi) ? rho_guess : 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double value = G(x);
    if (value == 0.0) return x;
    if (value < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double slope = bernoulli_relation_drho(gamma, x, q, S);
    double next = x - value / slope;
    if (!(slope > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

MomentumMap momentum_map(double gamma, const Vec2& q, double z, double S, double K,
                         double rho_guess) {
  const double Q = resolve_density(gamma, q, z, S, K, rho_guess);
  return {q[0] / Q, q[1] / Q, Q};
}

MomentumDerivatives momentum_derivatives(double gamma, const Vec2& q, double z, double S, double K,
                                         double rho_guess) {
  const double Q = resolve_density(gamma, q, z, S, K, rho_guess);
  const double Gs = bernoulli_relation_drho(gamma, Q, q, S);
  const std::array<double, 5> Gv = {q[0] / (Q * Q), q[1] / (Q * Q), 1.0,
                                    gamma * std::pow(Q, gamma - 1.0) * std::exp(S) / (gamma - 1.0),
                                    -1.0};
  MomentumDerivatives out;
  out.value = {q[0] / Q, q[1] / Q, Q};
  for (int v = 0; v < 5; ++v) {
    const double dQ = -Gv[v] / Gs;
    out.dB[v] = dQ;
    out.dA1[v] = (v == kQ1 ? 1.0 / Q : 0.0) - q[0] * dQ / (Q * Q);
    out.dA2[v] = (v == kQ2 ? 1.0 / Q : 0.0) - q[1] * dQ / (Q * Q);
  }
  return out;
}

LinearCoefficients closed_form_coefficients(const BackgroundParams& params, double rho) {
  const double nu = sonic_denominator(params, rho);
  const double m0 = params.m0;
  LinearCoefficients c;
  c.a11 = 1.0 / rho;
  c.a22 = 1.0 / rho + m0 * m0 / (rho * rho * rho * nu);
  c.b2 = m0 / (rho * nu);
  c.c2 = -c.b2;
  c.d = -rho / nu;
  return c;
}

void CoefficientProfile::push_back(double x, const LinearCoefficients& c) {
  x1.push_back(x);
  a11.push_back(c.a11);
  a22.push_back(c.a22);
  b2.push_back(c.b2);
  c2.push_back(c.c2);
  d.push_back(c.d);
}

void CoefficientProfile::finalize(double L, double margin) {
  delta0 = margin;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  d_bounds_hold = true;
  const double floor = -(2.0 / (L * L)) * (1.0 - margin);
  for (std::size_t k = 0; k < size(); ++k) {
    lo = std::min({lo, a11[k], a22[k]});
    hi = std::max({hi, a11[k], a22[k]});
    // rounding slack: the lower bound is attained at the worst node by construction
    if (!(d[k] < 0.0) || d[k] < floor * (1.0 + 1e-12)) d_bounds_hold = false;
  }
  lambda0 = std::min(lo, 1.0 / hi);
}

CoefficientProfile linear_coefficients(const BackgroundSolution& bg, double delta0) {
  CoefficientProfile out;
  for (std::size_t k = 0; k < bg.size(); ++k) {
    out.push_back(bg.x1()[k], closed_form_coefficients(bg.params(), bg.rho()[k]));
  }
  out.finalize(bg.params().L, delta0);
  return out;
}

CoefficientProfile sample_coefficients(const BackgroundSolution& bg, const std::vector<double>& x1,
                                       double delta0) {
  CoefficientProfile out;
  for (double x : x1) out.push_back(x, closed_form_coefficients(bg.params(), bg.at(x).rho));
  out.finalize(bg.params().L, delta0);
  return out;
}

BaseState base_state(const BackgroundSolution& bg, double x1) {
  const auto& pr = bg.params();
  const auto pt = bg.at(x1);
  return {pr.gamma, pr.m0, pr.S0, pt.rho, pt.Phi0};
}

Linearization::Linearization(const BaseState& base)
    : base_(base),
      bg_(momentum_derivatives(base.gamma, {0.0, base.m0}, base.Phi0, base.S0, 0.0, base.rho)) {}

MomentumMap Linearization::full(const Vec2& q, double z, double S, double K) const {
  return momentum_map(base_.gamma, {q[0], base_.m0 + q[1]}, base_.Phi0 + z, S, K, bg_.value.B);
}

Vec2 Linearization::F(const Vec2& q, double z, double S, double K) const {
  const MomentumMap m = full(q, z, S, K);
  const auto& b = bg_;
  const double F1 = b.value.A1 + q[0] * b.dA1[kQ1] + q[1] * b.dA1[kQ2] + z * b.dA1[kZ] - m.A1;
  const double F2 = b.value.A2 + q[0] * b.dA2[kQ1] + q[1] * b.dA2[kQ2] + z * b.dA2[kZ] - m.A2;
  return {F1, F2};
}

double Linearization::g(const Vec2& q, double z, double S, double K) const {
  const MomentumMap m = full(q, z, S, K);
  const auto& b = bg_;
  return m.B - b.value.B - q[0] * b.dB[kQ1] - q[1] * b.dB[kQ2] - z * b.dB[kZ];
}

double Linearization::f(const Vec2& q, double z, double S, double dS2, double K, double dK2) const {
  const double flux = base_.m0 + q[1];
  if (flux < 0.5 * base_.m0) {
    throw DegenerateVerticalFlux("remainder_f: m0 + q2 = " + std::to_string(flux) + " < m0/2");
  }
  const double gamma = base_.gamma;
  const double B = full(q, z, S, K).B;
  return (dK2 - std::exp(S) * std::pow(B, gamma - 1.0) * dS2 / (gamma - 1.0)) * B / flux;
}

Vec2 remainder_F(const BaseState& base, const Vec2& q, double z, double S, double K) {
  return Linearization(base).F(q, z, S, K);
}

double remainder_g(const BaseState& base, const Vec2& q, double z, double S, double K) {
  return Linearization(base).g(q, z, S, K);
}

double remainder_f(const BaseState& base, const Vec2& q, double z, double S, double dS2, double K,
                   double dK2) {
  return Linearization(base).f(q, z, S, dS2, K, dK2);
}

ExitBaseline exit_baseline(const BackgroundSolution& bg) {
  const auto& pr = bg.params();
  return {pr.gamma, pr.m0, pr.S0, bg.p().back(), bg.Phi0().back()};
}

namespace {

double exit_term(double gamma, double p, double Phi, double S) {
  const double rho2 = std::pow(p / std::exp(S), 2.0 / gamma);
  return rho2 * (Phi + gamma * std::exp(S / gamma) * std::pow(p, 1.0 - 1.0 / gamma) / (gamma - 1.0));
}

}  // namespace

double exit_h1(const ExitBaseline& base, double p_ex, double Phi_bd, double S, double K) {
  if (!(p_ex > 0.0)) throw DomainError("exit_h: p_ex must be > 0");
  return exit_term(base.gamma, p_ex, Phi_bd - K, S) - exit_term(base.gamma, base.p_bar, base.Phi0, base.S0);
}

double exit_h(const ExitBaseline& base, const Vec2& q, double p_ex, double Phi_bd, double S,
              double K) {
  return -(exit_h1(base, p_ex, Phi_bd, S, K) + 0.5 * norm2(q)) / base.m0;
}

}  // namespace gravduct
