#pragma once

#include <array>
#include <vector>

#include "gravduct/background.hpp"

namespace gravduct {

using Vec2 = std::array<double, 2>;

/// Bernoulli relation 1/2 |q|^2/rho^2 + gamma rho^{gamma-1} e^S/(gamma-1) + z - K.
/// Its zero in rho on the subsonic branch is the density Q(q, z, S, K).
double bernoulli_relation(double gamma, double rho, const Vec2& q, double z, double S, double K);
double bernoulli_relation_drho(double gamma, double rho, const Vec2& q, double S);

/// Density at which the relation above is stationary in rho (local sonic point).
double local_sonic_density(double gamma, const Vec2& q, double S);

/// Subsonic root of the Bernoulli relation. Newton from rho_guess, safeguarded
/// by bisection on [rho_sonic (1 + 1e-9), rho_max]; rho_max <= 0 selects
/// 10 rho_guess (grown if it does not bracket). Throws NoSubsonicRoot.
double resolve_density(double gamma, const Vec2& q, double z, double S, double K,
                       double rho_guess, double rho_max = 0.0);

struct MomentumMap {
  double A1;
  double A2;
  double B;
};

MomentumMap momentum_map(double gamma, const Vec2& q, double z, double S, double K,
                         double rho_guess);

/// Ordering of the partial derivatives in MomentumDerivatives.
enum Arg { kQ1 = 0, kQ2 = 1, kZ = 2, kS = 3, kK = 4 };

/// (A, B) together with their first derivatives in (q1, q2, z, S, K), from
/// implicit differentiation of the Bernoulli relation.
struct MomentumDerivatives {
  MomentumMap value;
  std::array<double, 5> dA1;
  std::array<double, 5> dA2;
  std::array<double, 5> dB;
};

MomentumDerivatives momentum_derivatives(double gamma, const Vec2& q, double z, double S, double K,
                                         double rho_guess);

/// Coefficients of the linearized operators at one background density.
/// a12 = b1 = c1 = 0 identically.
struct LinearCoefficients {
  double a11;
  double a22;
  double b2;
  double c2;
  double d;
};

LinearCoefficients closed_form_coefficients(const BackgroundParams& params, double rho);

struct CoefficientProfile {
  std::vector<double> x1, a11, a22, b2, c2, d;
  double lambda0 = 0.0;       // ellipticity constant
  double delta0 = 0.0;        // margin the profile was checked against
  bool d_bounds_hold = false; // -(2/L^2)(1 - delta0) <= d < 0 at every sample

  std::size_t size() const { return x1.size(); }
  LinearCoefficients at(std::size_t k) const { return {a11[k], a22[k], b2[k], c2[k], d[k]}; }
  void push_back(double x, const LinearCoefficients& c);
  /// Recomputes lambda0 and the d bounds for duct length L.
  void finalize(double L, double margin);
};

/// Closed forms evaluated at the background nodes.
CoefficientProfile linear_coefficients(const BackgroundSolution& bg, double delta0);

/// Closed forms evaluated at arbitrary abscissae through the background interpolant.
CoefficientProfile sample_coefficients(const BackgroundSolution& bg, const std::vector<double>& x1,
                                       double delta0);

/// Background quantities at a fixed x1 needed by the pointwise maps.
struct BaseState {
  double gamma;
  double m0;
  double S0;
  double rho;   // background density, used as Newton seed
  double Phi0;  // background potential
};

BaseState base_state(const BackgroundSolution& bg, double x1);

/// Linearization of (A, B) about the background at one abscissa, with the
/// nonlinear remainders written as Taylor remainders. Background values are
/// recomputed through the same density resolver, so every remainder vanishes
/// exactly at zero increment.
class Linearization {
 public:
  explicit Linearization(const BaseState& base);

  const BaseState& base() const { return base_; }
  const MomentumDerivatives& background() const { return bg_; }

  /// Full state (grad psi0 + q, Phi0 + z, S, K).
  MomentumMap full(const Vec2& q, double z, double S, double K = 0.0) const;

  /// F = A(bg) + sum_j q_j dA/dq_j(bg) + z dA/dz(bg) - A(full).
  Vec2 F(const Vec2& q, double z, double S, double K = 0.0) const;
  /// g = B(full) - B(bg) - sum_j q_j dB/dq_j(bg) - z dB/dz(bg).
  double g(const Vec2& q, double z, double S, double K = 0.0) const;
  /// Source of the first equation: (K_{x2} - e^S B^{gamma-1} S_{x2}/(gamma-1)) B/(m0 + q2).
  /// Throws DegenerateVerticalFlux when m0 + q2 < m0/2.
  double f(const Vec2& q, double z, double S, double dS2, double K = 0.0, double dK2 = 0.0) const;

 private:
  BaseState base_;
  MomentumDerivatives bg_;
};

Vec2 remainder_F(const BaseState& base, const Vec2& q, double z, double S, double K = 0.0);
double remainder_g(const BaseState& base, const Vec2& q, double z, double S, double K = 0.0);
double remainder_f(const BaseState& base, const Vec2& q, double z, double S, double dS2,
                   double K = 0.0, double dK2 = 0.0);

/// Background exit state entering h1.
struct ExitBaseline {
  double gamma;
  double m0;
  double S0;
  double p_bar;  // background pressure at x1 = L
  double Phi0;   // background potential at x1 = L
};

ExitBaseline exit_baseline(const BackgroundSolution& bg);

/// h1 = rho_ex^2 (Phi_bd - K + gamma e^{S/gamma} p_ex^{1-1/gamma}/(gamma-1)) minus the
/// same expression at the background, rho_ex = (p_ex/e^S)^{1/gamma}.
double exit_h1(const ExitBaseline& base, double p_ex, double Phi_bd, double S, double K = 0.0);

/// Exit condition phi_{x2} = -(h1 + |q|^2/2)/m0.
double exit_h(const ExitBaseline& base, const Vec2& q, double p_ex, double Phi_bd, double S,
              double K = 0.0);

}  // namespace gravduct
