#pragma once

#include <Eigen/Sparse>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gravduct/formulation.hpp"
#include "gravduct/grid.hpp"

namespace gravduct {

/// Coefficients of the linear system on a grid: a11 at the half nodes
/// x_{i+1/2}, everything else at the nodes x_i.
struct EllipticCoefficients {
  std::vector<double> a11_half;  // n1 values
  std::vector<double> a11, a22, b2, c2, d;  // n1 + 1 values

  /// `fine` must be sampled at x = k h1/2, k = 0..2 n1.
  static EllipticCoefficients from_profile(const CoefficientProfile& fine, const Grid& grid);

  template <class A11, class A22, class B2, class C2, class D>
  static EllipticCoefficients from_functions(const Grid& grid, A11&& a11, A22&& a22, B2&& b2,
                                             C2&& c2, D&& d) {
    EllipticCoefficients out;
    for (int i = 0; i <= grid.n1; ++i) {
      const double x = grid.x1(i);
      out.a11.push_back(a11(x));
      out.a22.push_back(a22(x));
      out.b2.push_back(b2(x));
      out.c2.push_back(c2(x));
      out.d.push_back(d(x));
      if (i < grid.n1) out.a11_half.push_back(a11(x + 0.5 * grid.h1()));
    }
    return out;
  }

  void validate(const Grid& grid) const;
};

/// Background coefficients sampled at the grid nodes and half nodes.
EllipticCoefficients grid_coefficients(const BackgroundSolution& bg, const Grid& grid,
                                       double delta0);

/// Data of the coupled linear problem
///   d1(a11 d1 phi) + a22 d22 phi + b2 d2 Psi = f + div F,
///   Lap Psi - d Psi - c2 d2 phi = g,
/// with d1 phi = 0 on the inlet, phi = 0 on the lower wall, phi equal to the
/// integrated exit data h on the exit and upper wall, d1 Psi = g_en on the inlet,
/// Psi = Psi_bd on the exit and d2 Psi = 0 on the walls.
struct LinearProblem {
  Grid grid;
  EllipticCoefficients coef;
  ScalarField f, F1, F2, g;
  std::vector<double> g_en;    // inlet nodes j = 0..n2
  std::vector<double> Psi_bd;  // exit nodes j = 0..n2
  std::vector<double> h_exit;  // exit nodes j = 0..n2

  // Inhomogeneous variants of the phi conditions, used by manufactured
  // solutions. Empty means the default above.
  std::vector<double> phi_inlet_flux;  // d1 phi on the inlet, j = 0..n2
  std::vector<double> phi_lower;       // phi on x2 = -1, i = 0..n1
  std::vector<double> phi_upper;       // phi on x2 = +1, i = 0..n1-1

  /// All data zero.
  static LinearProblem zero(const Grid& grid, const EllipticCoefficients& coef);

  void validate() const;

  /// Dirichlet values of phi on the exit: phi_lower(L) + int_{-1}^{x2} h (trapezoid).
  std::vector<double> exit_phi() const;
};

struct SolverOptions {
  enum class Method { direct, krylov };
  Method method = Method::direct;
  double krylov_tol = 1e-13;
  int krylov_max_iters = 5000;
  double residual_tol = 1e-10;  // relative algebraic residual accepted by solve
};

struct EnergyReport {
  double h1_phi = 0.0;
  double h1_Psi = 0.0;
  double coercivity = std::numeric_limits<double>::quiet_NaN();
};

struct LinearSolution {
  ScalarField phi;
  ScalarField Psi;
  double residual_inf = 0.0;  // max-norm algebraic residual
  double residual_rel = 0.0;  // scaled by |b| + |A| |x|
  EnergyReport energy;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Unknown ordering: 2 * grid.index(i, j) + component, component 0 = phi, 1 = Psi.
inline Eigen::Index unknown(const Grid& grid, int i, int j, int component) {
  return static_cast<Eigen::Index>(2 * grid.index(i, j) + component);
}

SparseMatrix assemble_operator(const Grid& grid, const EllipticCoefficients& coef);
Eigen::VectorXd assemble_load(const LinearProblem& problem);

struct AssembledSystem {
  SparseMatrix A;
  Eigen::VectorXd b;
};

AssembledSystem assemble(const LinearProblem& problem);

/// Factorizes the operator once; solve() may then be called for any data on
/// the same grid and coefficients.
class LinearSolver {
 public:
  LinearSolver(const Grid& grid, const EllipticCoefficients& coef, SolverOptions options = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  const Grid& grid() const { return grid_; }
  const EllipticCoefficients& coefficients() const { return coef_; }
  const SparseMatrix& matrix() const { return A_; }

  LinearSolution solve(const LinearProblem& problem) const;
  Eigen::VectorXd solve_vector(const Eigen::VectorXd& b) const;

 private:
  struct Backend;
  Grid grid_;
  EllipticCoefficients coef_;
  SolverOptions options_;
  SparseMatrix A_;
  std::unique_ptr<Backend> backend_;
};

LinearSolution solve(const LinearProblem& problem, const SolverOptions& options = {});

/// Matrix-free application of the discrete operator. Dirichlet rows return the
/// nodal value itself.
std::pair<ScalarField, ScalarField> apply_operator(const Grid& grid,
                                                   const EllipticCoefficients& coef,
                                                   const ScalarField& phi, const ScalarField& Psi);

/// Discrete bilinear form evaluated directly from its edge and node sums with
/// trapezoid weights.
double discrete_form(const Grid& grid, const EllipticCoefficients& coef, const ScalarField& phi,
                     const ScalarField& Psi, const ScalarField& zeta, const ScalarField& omega);

/// Trapezoid-weighted pairing sum W u v.
double weighted_pairing(const ScalarField& u, const ScalarField& v);

/// Discrete H1 norm: edge differences plus trapezoid mass.
double discrete_h1_norm(const ScalarField& u);

/// Splits the data into a lift (x1-independent extensions of the exit data)
/// and a remainder with homogeneous Dirichlet data, solves for the remainder
/// and adds the lift back. Requires the default phi wall and inlet conditions.
LinearSolution homogenize_oracle(const LinearProblem& problem, const SolverOptions& options = {});

/// Symmetric part of the discrete form and the discrete H1 Gram matrix,
/// restricted to the homogeneous test space (zeta free off the walls and exit,
/// omega free off the exit).
struct CoercivityMatrices {
  SparseMatrix K;
  SparseMatrix M;
  std::vector<Eigen::Index> free_unknowns;
};

CoercivityMatrices coercivity_matrices(const Grid& grid, const EllipticCoefficients& coef);

struct CoercivityReport {
  double lower_bound = 0.0;  // smallest eigenvalue of K relative to M
  int iterations = 0;
  bool converged = false;
};

/// Smallest generalized eigenvalue of (K, M) by shifted subspace inverse iteration.
/// Throws SolverFailure if the iteration does not converge.
CoercivityReport coercivity_check(const Grid& grid, const EllipticCoefficients& coef,
                                  int subspace = 8, double tol = 1e-10, int max_iters = 1000);

/// Writes the matrix in Matrix Market coordinate format.
void write_matrix_market(const SparseMatrix& A, const std::string& path);

}  // namespace gravduct
