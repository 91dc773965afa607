#pragma once

#include <cstddef>
#include <vector>

namespace gravduct {

/// Data of a one-dimensional Euler-Poisson background: gas constants, inlet
/// state and duct length.
struct BackgroundParams {
  double gamma = 2.0;
  double m0 = 1.0;   // mass flux rho*u
  double S0 = 1.0;   // entropy, p = e^{S0} rho^gamma
  double rho0 = 1.0; // inlet density
  double G0 = 0.0;   // inlet gravity gradient Phi_{x1}
  double L = 1.0;

  /// Throws DomainError naming the offending field.
  void validate() const;
};

/// Sonic density rho_s = (m0^2 / (gamma e^{S0}))^{1/(gamma+1)}.
double critical_density(const BackgroundParams& params);

/// Denominator of the rho' equation, gamma e^{S0} rho^{gamma-1} - m0^2/rho^2.
/// Vanishes exactly at rho_s.
double sonic_denominator(const BackgroundParams& params, double rho);

/// Integral of the sonic denominator from rho_s to rho, in closed form.
/// Zero at rho_s, positive elsewhere.
double enthalpy_H(const BackgroundParams& params, double rho);

/// H(rho) + G^2/2, conserved along background solutions.
double first_integral(const BackgroundParams& params, double rho, double G);

/// Gravity gradient reached at the sonic point along the level set of the
/// inlet data: sqrt(2 H(rho0) + G0^2).
double terminal_G(const BackgroundParams& params);

/// Density where G vanishes on the inlet level set, on the inlet branch.
double turning_density(const BackgroundParams& params);

struct LifespanBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// ((G_M - G0)/rho_M, (G_M - G0)/rho_s); requires rho0 > rho_s.
LifespanBounds lifespan_bounds(const BackgroundParams& params);

struct CriticalData {
  double rho_s = 0.0;
  double G_M = 0.0;
  double rho_M = 0.0;
  double L_bar_lower = 0.0;
  double L_bar_upper = 0.0;
  double nu0 = 0.0;
  double delta0 = 0.0;
};

struct IntegrationOptions {
  /// Integration halts once |nu(rho)| drops below this fraction of |nu(rho0)|.
  double nu_floor_factor = 1e-6;
};

/// Sampled background profiles on a uniform x1 grid.
class BackgroundSolution {
 public:
  struct Point {
    double rho;
    double G;
    double Phi0;
  };

  BackgroundSolution() = default;

  const BackgroundParams& params() const { return params_; }
  std::size_t size() const { return x1_.size(); }
  double spacing() const { return spacing_; }

  const std::vector<double>& x1() const { return x1_; }
  const std::vector<double>& rho() const { return rho_; }
  const std::vector<double>& G() const { return G_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& Phi0() const { return Phi0_; }

  /// max over nodes of |H(rho) + G^2/2 - H(rho0) - G0^2/2|.
  double conservation_drift() const { return drift_; }
  /// Drift scaled by e^{S0} rho0^gamma + m0^2/rho0 + G0^2/2, the size of the
  /// terms that cancel inside H.
  double relative_drift() const;

  /// Inlet Bernoulli constant B0 = m0^2/(2 rho0^2) + gamma e^{S0} rho0^{gamma-1}/(gamma-1).
  double inlet_bernoulli() const;

  /// Cubic Hermite interpolation of (rho, G, Phi0) using the ODE right-hand
  /// sides as slopes. Exact at nodes.
  Point at(double x1) const;

 private:
  friend BackgroundSolution integrate_background(const BackgroundParams&, std::size_t,
                                                 const IntegrationOptions&);
  BackgroundParams params_;
  double spacing_ = 0.0;
  std::vector<double> x1_, rho_, G_, u_, p_, Phi0_;
  double drift_ = 0.0;
};

/// Classical RK4 on (rho, G)' = (-rho G / nu(rho), rho) over [0, L] with
/// n_nodes equally spaced nodes. Throws SonicApproach with the last accepted
/// abscissa if the sonic guard trips first.
BackgroundSolution integrate_background(const BackgroundParams& params, std::size_t n_nodes,
                                        const IntegrationOptions& options = {});

/// Integrates toward the sonic point from x1 = 0 with initial step x_max/n_steps,
/// halving the step whenever the guard would trip, and returns the furthest
/// abscissa reached. Returns x_max if the guard never trips.
double detect_sonic_abscissa(const BackgroundParams& params, double x_max, std::size_t n_steps,
                             const IntegrationOptions& options = {});

struct SubsonicMargin {
  double delta0 = 0.0;  // 1 - max rho L^2 / (2 nu); <= 0 means no coercivity margin
  double nu0 = 0.0;     // min over nodes of nu * sgn(rho0 - rho_s)
};

SubsonicMargin subsonic_margin(const BackgroundSolution& bg);

/// Collects rho_s, G_M, rho_M, lifespan bounds and the margins for a computed
/// background (subsonic branch only).
CriticalData critical_data(const BackgroundSolution& bg);

struct PhasePoint {
  double rho;
  double G;
  double level;
};

/// Samples the level sets H(rho) + G^2/2 = level on rho in [rho_min, rho_max].
/// Each admissible sample contributes the pair (rho, +G) and (rho, -G).
std::vector<PhasePoint> phase_portrait(const BackgroundParams& params,
                                       const std::vector<double>& levels, double rho_min,
                                       double rho_max, std::size_t samples);

}  // namespace gravduct
