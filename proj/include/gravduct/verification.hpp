#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gravduct/background.hpp"
#include "gravduct/elliptic.hpp"
#include "gravduct/grid.hpp"

namespace gravduct {

/// Observed order between successive entries of a refinement study, each
/// step halving the spacing.
std::vector<double> observed_orders(const std::vector<double>& errors);

struct ConvergenceStudy {
  std::vector<int> n;
  std::vector<double> error;
  std::vector<double> order;  // one entry per doubling
  double min_order = 0.0;
};

/// Smooth x1-dependent coefficients with the structure of the background ones
/// (c2 = -b2, d < 0), used by the manufactured-solution tests.
EllipticCoefficients synthetic_coefficients(const Grid& grid);

/// Data reproducing phi* = sin(pi x1/(2L)) cos(pi x2), Psi* = cos(pi x1/(2L)) cos(pi x2).
/// The first right-hand side is split between f and an analytic div F.
LinearProblem mms_problem(const Grid& grid, const EllipticCoefficients& coef);
double mms_phi(double L, double x1, double x2);
double mms_Psi(double L, double x1, double x2);

/// Max-norm error of (phi, Psi) against the manufactured solution on n x n grids.
ConvergenceStudy mms_convergence(const std::vector<int>& sizes, double L,
                                 const SolverOptions& options = {});

/// Random smooth data satisfying the corner compatibility of Psi_bd.
LinearProblem random_problem(const Grid& grid, const EllipticCoefficients& coef,
                             std::uint64_t seed);

/// max |solve - homogenize_oracle| over `draws` random problems.
double homogenize_agreement(const Grid& grid, const EllipticCoefficients& coef, int draws,
                            std::uint64_t seed, const SolverOptions& options = {});

struct JacobianCheck {
  double max_relative_error = 0.0;  // closed forms against central differences
  double max_b2_plus_c2 = 0.0;
  bool d_bounds_hold = false;
  double d_min = 0.0;
  double d_max = 0.0;
};

/// Closed-form coefficients against finite-difference Jacobians of (A, B) at
/// `samples` abscissae, plus the sign and size conditions on d.
JacobianCheck coefficient_jacobian_check(const BackgroundSolution& bg, double delta0,
                                         int samples = 41);

struct RemainderOracle {
  int samples = 0;
  double max_error_F = 0.0;
  double max_error_g = 0.0;
};

/// F and g against 16-point Gauss-Legendre quadrature of their integral forms
/// along the segment from the background to the perturbed state.
RemainderOracle remainder_oracle(const BackgroundSolution& bg, int samples, std::uint64_t seed);

struct SmallnessCheck {
  double ratio_F = 0.0;  // |F(1e-2 v)| / |F(1e-3 v)|, about 100 for a quadratic remainder
  double ratio_g = 0.0;
};

/// Quadratic scaling of F and g in the (q, z) increment at S = S0, worst case
/// over random directions.
SmallnessCheck quadratic_smallness(const BackgroundSolution& bg, int samples, std::uint64_t seed);

struct PoincareCheck {
  double computed = 0.0;
  double expected = 0.0;  // mu/(1 + mu), mu = (pi/(2L))^2
  double relative_error = 0.0;
};

/// Coercivity of the decoupled identity operator against the exact Poincare constant.
PoincareCheck identity_coercivity(double L, int n);

/// Duct length giving the target subsonic margin, by bisection below the
/// sonic abscissa. Throws DomainError if the target is not attained.
double length_for_margin(BackgroundParams params, double delta0_target, std::size_t nodes = 4001);

struct TransportCheck {
  double defect = 0.0;               // level-set defect at the finest grid
  double range_excess = 0.0;         // amount by which S leaves [min S_en, max S_en]
  double inlet_error = 0.0;          // max |theta(0, x2) - x2|
  ConvergenceStudy streamline;       // residual of psi_x2 S_x1 - psi_x1 S_x2
};

/// Transport through an analytic stream function on n x n grids.
TransportCheck transport_suite(const std::vector<int>& sizes, double L, double m0);

struct VerifyItem {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Verification suites on a background: manufactured solutions, coefficient
/// and remainder oracles, coercivity and the two-path solve.
std::vector<VerifyItem> run_verification(const BackgroundSolution& bg, double delta0,
                                         std::uint64_t seed, const SolverOptions& options = {});

}  // namespace gravduct
