#include "gravduct/elliptic.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <unsupported/Eigen/SparseExtra>

#include "gravduct/errors.hpp"

namespace gravduct {

namespace {

using Triplet = Eigen::Triplet<double>;

double weight(int k, int n) { return (k == 0 || k == n) ? 0.5 : 1.0; }

void require_size(const std::vector<double>& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw AssemblyError(name + ": expected " + std::to_string(n) + " values, got " +
                        std::to_string(v.size()));
  }
}

void require_finite(const std::vector<double>& v, const std::string& name) {
  for (double x : v) {
    if (!std::isfinite(x)) throw AssemblyError(name + ": nonfinite value");
  }
}

void require_field(const ScalarField& f, const Grid& grid, const std::string& name) {
  if (!(f.grid() == grid)) throw AssemblyError(name + ": grid mismatch");
  require_finite(f.values(), name);
}

bool phi_dirichlet(const Grid& g, int i, int j) { return j == 0 || j == g.n2 || i == g.n1; }
bool Psi_dirichlet(const Grid& g, int i, int) { return i == g.n1; }

}  // namespace

EllipticCoefficients EllipticCoefficients::from_profile(const CoefficientProfile& fine,
                                                        const Grid& grid) {
  if (fine.size() != static_cast<std::size_t>(2 * grid.n1 + 1)) {
    throw AssemblyError("coefficient profile must have 2 n1 + 1 samples");
  }
  EllipticCoefficients out;
  for (int i = 0; i <= grid.n1; ++i) {
    const std::size_t k = 2 * static_cast<std::size_t>(i);
    out.a11.push_back(fine.a11[k]);
    out.a22.push_back(fine.a22[k]);
    out.b2.push_back(fine.b2[k]);
    out.c2.push_back(fine.c2[k]);
    out.d.push_back(fine.d[k]);
    if (i < grid.n1) out.a11_half.push_back(fine.a11[k + 1]);
  }
  return out;
}

void EllipticCoefficients::validate(const Grid& grid) const {
  const std::size_t n = grid.n1 + 1;
  require_size(a11_half, n - 1, "a11_half");
  require_size(a11, n, "a11");
  require_size(a22, n, "a22");
  require_size(b2, n, "b2");
  require_size(c2, n, "c2");
  require_size(d, n, "d");
  for (const auto* v : {&a11_half, &a11, &a22, &b2, &c2, &d}) require_finite(*v, "coefficients");
}

EllipticCoefficients grid_coefficients(const BackgroundSolution& bg, const Grid& grid,
                                       double delta0) {
  std::vector<double> x(2 * grid.n1 + 1);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.5 * grid.h1() * static_cast<double>(k);
  x.back() = grid.L;
  return EllipticCoefficients::from_profile(sample_coefficients(bg, x, delta0), grid);
}

LinearProblem LinearProblem::zero(const Grid& grid, const EllipticCoefficients& coef) {
  LinearProblem p;
  p.grid = grid;
  p.coef = coef;
  p.f = ScalarField(grid, "f");
  p.F1 = ScalarField(grid, "F1");
  p.F2 = ScalarField(grid, "F2");
  p.g = ScalarField(grid, "g");
  const std::size_t m = grid.n2 + 1;
  p.g_en.assign(m, 0.0);
  p.Psi_bd.assign(m, 0.0);
  p.h_exit.assign(m, 0.0);
  return p;
}

void LinearProblem::validate() const {
  coef.validate(grid);
  require_field(f, grid, "f");
  require_field(F1, grid, "F1");
  require_field(F2, grid, "F2");
  require_field(g, grid, "g");
  const std::size_t m = grid.n2 + 1;
  require_size(g_en, m, "g_en");
  require_size(Psi_bd, m, "Psi_bd");
  require_size(h_exit, m, "h_exit");
  for (const auto* v : {&g_en, &Psi_bd, &h_exit}) require_finite(*v, "boundary data");
  if (!phi_inlet_flux.empty()) require_size(phi_inlet_flux, m, "phi_inlet_flux");
  if (!phi_lower.empty()) require_size(phi_lower, grid.n1 + 1, "phi_lower");
  if (!phi_upper.empty()) require_size(phi_upper, grid.n1, "phi_upper");
}

std::vector<double> LinearProblem::exit_phi() const {
  std::vector<double> out(grid.n2 + 1);
  out[0] = phi_lower.empty() ? 0.0 : phi_lower.back();
  const double h = grid.h2();
  for (int j = 1; j <= grid.n2; ++j) out[j] = out[j - 1] + 0.5 * h * (h_exit[j - 1] + h_exit[j]);
  return out;
}

SparseMatrix assemble_operator(const Grid& grid, const EllipticCoefficients& coef) {
  coef.validate(grid);
  const int n1 = grid.n1;
  const int n2 = grid.n2;
  const double h1 = grid.h1();
  const double h2 = grid.h2();
  const double ih1 = 1.0 / (h1 * h1);
  const double ih2 = 1.0 / (h2 * h2);
  std::vector<Triplet> t;
  t.reserve(grid.nodes() * 16);

  for (int i = 0; i <= n1; ++i) {
    for (int j = 0; j <= n2; ++j) {
      // phi row
      const auto r = unknown(grid, i, j, 0);
      if (phi_dirichlet(grid, i, j)) {
        t.emplace_back(r, r, 1.0);
      } else {
        if (i == 0) {
          const double a = 2.0 * coef.a11_half[0] * ih1;
          t.emplace_back(r, unknown(grid, 1, j, 0), a);
          t.emplace_back(r, r, -a);
        } else {
          const double ap = coef.a11_half[i] * ih1;
          const double am = coef.a11_half[i - 1] * ih1;
          t.emplace_back(r, unknown(grid, i + 1, j, 0), ap);
          t.emplace_back(r, unknown(grid, i - 1, j, 0), am);
          t.emplace_back(r, r, -(ap + am));
        }
        const double a22 = coef.a22[i] * ih2;
        t.emplace_back(r, unknown(grid, i, j + 1, 0), a22);
        t.emplace_back(r, unknown(grid, i, j - 1, 0), a22);
        t.emplace_back(r, r, -2.0 * a22);
        const double b = coef.b2[i] / (2.0 * h2);
        t.emplace_back(r, unknown(grid, i, j + 1, 1), b);
        t.emplace_back(r, unknown(grid, i, j - 1, 1), -b);
      }

      // Psi row
      const auto s = unknown(grid, i, j, 1);
      if (Psi_dirichlet(grid, i, j)) {
        t.emplace_back(s, s, 1.0);
        continue;
      }
      if (i == 0) {
        t.emplace_back(s, unknown(grid, 1, j, 1), 2.0 * ih1);
        t.emplace_back(s, s, -2.0 * ih1);
      } else {
        t.emplace_back(s, unknown(grid, i + 1, j, 1), ih1);
        t.emplace_back(s, unknown(grid, i - 1, j, 1), ih1);
        t.emplace_back(s, s, -2.0 * ih1);
      }
      if (j == 0) {
        t.emplace_back(s, unknown(grid, i, 1, 1), 2.0 * ih2);
        t.emplace_back(s, s, -2.0 * ih2);
      } else if (j == n2) {
        t.emplace_back(s, unknown(grid, i, n2 - 1, 1), 2.0 * ih2);
        t.emplace_back(s, s, -2.0 * ih2);
      } else {
        t.emplace_back(s, unknown(grid, i, j + 1, 1), ih2);
        t.emplace_back(s, unknown(grid, i, j - 1, 1), ih2);
        t.emplace_back(s, s, -2.0 * ih2);
      }
      t.emplace_back(s, s, -coef.d[i]);
      const double c = coef.c2[i];
      if (j == 0) {
        t.emplace_back(s, unknown(grid, i, 1, 0), -c / h2);
        t.emplace_back(s, unknown(grid, i, 0, 0), c / h2);
      } else if (j == n2) {
        t.emplace_back(s, unknown(grid, i, n2, 0), -c / h2);
        t.emplace_back(s, unknown(grid, i, n2 - 1, 0), c / h2);
      } else {
        t.emplace_back(s, unknown(grid, i, j + 1, 0), -c / (2.0 * h2));
        t.emplace_back(s, unknown(grid, i, j - 1, 0), c / (2.0 * h2));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(2 * grid.nodes());
  SparseMatrix A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

Eigen::VectorXd assemble_load(const LinearProblem& p) {
  p.validate();
  const Grid& grid = p.grid;
  const int n1 = grid.n1;
  const int n2 = grid.n2;
  const double h1 = grid.h1();
  const double h2 = grid.h2();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * grid.nodes()));
  const auto exit = p.exit_phi();

  for (int i = 0; i <= n1; ++i) {
    for (int j = 0; j <= n2; ++j) {
      const auto r = unknown(grid, i, j, 0);
      if (i == n1) {
        b[r] = exit[j];
      } else if (j == 0) {
        b[r] = p.phi_lower.empty() ? 0.0 : p.phi_lower[i];
      } else if (j == n2) {
        b[r] = p.phi_upper.empty() ? exit[n2] : p.phi_upper[i];
      } else {
        // conservative divergence: the half cell at the inlet includes the boundary flux
        const double div1 = i == 0 ? (p.F1(1, j) - p.F1(0, j)) / h1
                                   : (p.F1(i + 1, j) - p.F1(i - 1, j)) / (2.0 * h1);
        const double div2 = (p.F2(i, j + 1) - p.F2(i, j - 1)) / (2.0 * h2);
        b[r] = p.f(i, j) + div1 + div2;
        if (i == 0 && !p.phi_inlet_flux.empty()) {
          b[r] += 2.0 * p.coef.a11[0] * p.phi_inlet_flux[j] / h1;
        }
      }

      const auto s = unknown(grid, i, j, 1);
      if (i == n1) {
        b[s] = p.Psi_bd[j];
      } else {
        b[s] = p.g(i, j) + (i == 0 ? 2.0 * p.g_en[j] / h1 : 0.0);
      }
    }
  }
  return b;
}

AssembledSystem assemble(const LinearProblem& problem) {
  return {assemble_operator(problem.grid, problem.coef), assemble_load(problem)};
}

struct LinearSolver::Backend {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> krylov;
};

LinearSolver::LinearSolver(const Grid& grid, const EllipticCoefficients& coef, SolverOptions options)
    : grid_(grid), coef_(coef), options_(options), A_(assemble_operator(grid, coef)),
      backend_(std::make_unique<Backend>()) {
  if (options_.method == SolverOptions::Method::direct) {
    backend_->lu.compute(A_);
    if (backend_->lu.info() != Eigen::Success) {
      throw SolverFailure("sparse LU factorization failed: " + backend_->lu.lastErrorMessage(),
                          std::numeric_limits<double>::quiet_NaN());
    }
  } else {
    backend_->krylov.setTolerance(options_.krylov_tol);
    backend_->krylov.setMaxIterations(options_.krylov_max_iters);
    backend_->krylov.preconditioner().setDroptol(1e-6);
    backend_->krylov.compute(A_);
    if (backend_->krylov.info() != Eigen::Success) {
      throw SolverFailure("ILUT preconditioner setup failed", std::numeric_limits<double>::quiet_NaN());
    }
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Eigen::VectorXd LinearSolver::solve_vector(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x;
  if (options_.method == SolverOptions::Method::direct) {
    x = backend_->lu.solve(b);
    if (backend_->lu.info() != Eigen::Success) {
      throw SolverFailure("sparse LU solve failed", std::numeric_limits<double>::quiet_NaN());
    }
  } else {
    x = backend_->krylov.solve(b);
    if (backend_->krylov.info() != Eigen::Success) {
      throw SolverFailure("BiCGSTAB did not converge", std::numeric_limits<double>::quiet_NaN());
    }
  }
  return x;
}

namespace {

double coercivity_if_small(const Grid& grid, const EllipticCoefficients& coef) {
  if (grid.n1 * grid.n2 > 4096) return std::numeric_limits<double>::quiet_NaN();
  try {
    return coercivity_check(grid, coef).lower_bound;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

LinearSolution LinearSolver::solve(const LinearProblem& problem) const {
  if (!(problem.grid == grid_)) throw AssemblyError("solve: grid differs from the factorized operator");
  const Eigen::VectorXd b = assemble_load(problem);
  const Eigen::VectorXd x = solve_vector(b);

  LinearSolution out;
  out.phi = ScalarField(grid_, "phi");
  out.Psi = ScalarField(grid_, "Psi");
  for (int i = 0; i <= grid_.n1; ++i) {
    for (int j = 0; j <= grid_.n2; ++j) {
      out.phi(i, j) = x[unknown(grid_, i, j, 0)];
      out.Psi(i, j) = x[unknown(grid_, i, j, 1)];
    }
  }
  const Eigen::VectorXd r = A_ * x - b;
  out.residual_inf = r.lpNorm<Eigen::Infinity>();
  double a_norm = 0.0;
  for (Eigen::Index k = 0; k < A_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A_, k); it; ++it) a_norm = std::max(a_norm, std::abs(it.value()));
  }
  const double scale = b.lpNorm<Eigen::Infinity>() + 5.0 * a_norm * x.lpNorm<Eigen::Infinity>();
  out.residual_rel = scale > 0.0 ? out.residual_inf / scale : 0.0;
  if (!x.allFinite() || out.residual_rel > options_.residual_tol) {
    throw SolverFailure("linear solve residual " + std::to_string(out.residual_rel) + " above tolerance",
                        coercivity_if_small(grid_, coef_));
  }
  out.energy.h1_phi = discrete_h1_norm(out.phi);
  out.energy.h1_Psi = discrete_h1_norm(out.Psi);
  return out;
}

LinearSolution solve(const LinearProblem& problem, const SolverOptions& options) {
  problem.validate();
  return LinearSolver(problem.grid, problem.coef, options).solve(problem);
}

std::pair<ScalarField, ScalarField> apply_operator(const Grid& grid,
                                                   const EllipticCoefficients& coef,
                                                   const ScalarField& phi, const ScalarField& Psi) {
  const int n1 = grid.n1;
  const int n2 = grid.n2;
  const double h1 = grid.h1();
  const double h2 = grid.h2();
  ScalarField L1(grid, "L1");
  ScalarField L2(grid, "L2");
  auto dd2 = [&](const ScalarField& u, int i, int j) {
    if (j == 0) return (u(i, 1) - u(i, 0)) / h2;
    if (j == n2) return (u(i, n2) - u(i, n2 - 1)) / h2;
    return (u(i, j + 1) - u(i, j - 1)) / (2.0 * h2);
  };
  for (int i = 0; i <= n1; ++i) {
    for (int j = 0; j <= n2; ++j) {
      if (phi_dirichlet(grid, i, j)) {
        L1(i, j) = phi(i, j);
      } else {
        const double flux_p = coef.a11_half[i] * (phi(i + 1, j) - phi(i, j)) / h1;
        const double flux_m = i == 0 ? -flux_p : coef.a11_half[i - 1] * (phi(i, j) - phi(i - 1, j)) / h1;
        L1(i, j) = (flux_p - flux_m) / h1 +
                   coef.a22[i] * (phi(i, j + 1) - 2.0 * phi(i, j) + phi(i, j - 1)) / (h2 * h2) +
                   coef.b2[i] * dd2(Psi, i, j);
      }
      if (Psi_dirichlet(grid, i, j)) {
        L2(i, j) = Psi(i, j);
        continue;
      }
      const double west = i == 0 ? Psi(1, j) : Psi(i - 1, j);
      const double south = j == 0 ? Psi(i, 1) : Psi(i, j - 1);
      const double north = j == n2 ? Psi(i, n2 - 1) : Psi(i, j + 1);
      L2(i, j) = (Psi(i + 1, j) - 2.0 * Psi(i, j) + west) / (h1 * h1) +
                 (north - 2.0 * Psi(i, j) + south) / (h2 * h2) - coef.d[i] * Psi(i, j) -
                 coef.c2[i] * dd2(phi, i, j);
    }
  }
  return {L1, L2};
}

double weighted_pairing(const ScalarField& u, const ScalarField& v) {
  const Grid& g = u.grid();
  double s = 0.0;
  for (int i = 0; i <= g.n1; ++i)
    for (int j = 0; j <= g.n2; ++j) s += weight(i, g.n1) * weight(j, g.n2) * u(i, j) * v(i, j);
  return s * g.h1() * g.h2();
}

namespace {

// Edge sums with optional x1-dependent coefficients on each edge family.
template <class Cx, class Cy>
double edge_form(const ScalarField& u, const ScalarField& v, Cx&& cx, Cy&& cy) {
  const Grid& g = u.grid();
  const double h1 = g.h1();
  const double h2 = g.h2();
  double s = 0.0;
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j <= g.n2; ++j)
      s += h2 / h1 * weight(j, g.n2) * cx(i) * (u(i + 1, j) - u(i, j)) * (v(i + 1, j) - v(i, j));
  for (int i = 0; i <= g.n1; ++i)
    for (int j = 0; j < g.n2; ++j)
      s += h1 / h2 * weight(i, g.n1) * cy(i) * (u(i, j + 1) - u(i, j)) * (v(i, j + 1) - v(i, j));
  return s;
}

ScalarField wall_derivative(const ScalarField& u) {
  const Grid& g = u.grid();
  ScalarField out(g, "d2");
  const double h2 = g.h2();
  for (int i = 0; i <= g.n1; ++i) {
    out(i, 0) = (u(i, 1) - u(i, 0)) / h2;
    out(i, g.n2) = (u(i, g.n2) - u(i, g.n2 - 1)) / h2;
    for (int j = 1; j < g.n2; ++j) out(i, j) = (u(i, j + 1) - u(i, j - 1)) / (2.0 * h2);
  }
  return out;
}

ScalarField scale_columns(ScalarField u, const std::vector<double>& c) {
  const Grid& g = u.grid();
  for (int i = 0; i <= g.n1; ++i)
    for (int j = 0; j <= g.n2; ++j) u(i, j) *= c[i];
  return u;
}

}  // namespace

double discrete_h1_norm(const ScalarField& u) {
  const auto one = [](int) { return 1.0; };
  return std::sqrt(edge_form(u, u, one, one) + weighted_pairing(u, u));
}

double discrete_form(const Grid&, const EllipticCoefficients& coef, const ScalarField& phi,
                     const ScalarField& Psi, const ScalarField& zeta, const ScalarField& omega) {
  const auto one = [](int) { return 1.0; };
  const auto a11 = [&](int i) { return coef.a11_half[i]; };
  const auto a22 = [&](int i) { return coef.a22[i]; };
  const auto zero = [](int) { return 0.0; };
  double s = edge_form(phi, zeta, a11, zero) + edge_form(phi, zeta, zero, a22);
  s += weighted_pairing(scale_columns(Psi, coef.b2), wall_derivative(zeta));
  s += edge_form(Psi, omega, one, one);
  s += weighted_pairing(scale_columns(Psi, coef.d), omega);
  s += weighted_pairing(scale_columns(wall_derivative(phi), coef.c2), omega);
  return s;
}

LinearSolution homogenize_oracle(const LinearProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (!problem.phi_inlet_flux.empty() || !problem.phi_lower.empty() || !problem.phi_upper.empty()) {
    throw DomainError("homogenize_oracle: requires the default phi wall and inlet conditions");
  }
  const Grid& grid = problem.grid;
  const auto hH = problem.exit_phi();
  ScalarField lphi(grid, "lift_phi");
  ScalarField lPsi(grid, "lift_Psi");
  for (int i = 0; i <= grid.n1; ++i) {
    for (int j = 0; j <= grid.n2; ++j) {
      lphi(i, j) = hH[j];
      lPsi(i, j) = problem.Psi_bd[j];
    }
  }
  // With the lift in place the remainder has zero Dirichlet data.
  const auto [A1, A2] = apply_operator(grid, problem.coef, lphi, lPsi);
  Eigen::VectorXd b = assemble_load(problem);
  for (int i = 0; i <= grid.n1; ++i) {
    for (int j = 0; j <= grid.n2; ++j) {
      const auto r = unknown(grid, i, j, 0);
      const auto s = unknown(grid, i, j, 1);
      b[r] = phi_dirichlet(grid, i, j) ? 0.0 : b[r] - A1(i, j);
      b[s] = Psi_dirichlet(grid, i, j) ? 0.0 : b[s] - A2(i, j);
    }
  }
  LinearSolver solver(grid, problem.coef, options);
  const Eigen::VectorXd x = solver.solve_vector(b);

  LinearSolution out;
  out.phi = lphi;
  out.phi.rename("phi");
  out.Psi = lPsi;
  out.Psi.rename("Psi");
  for (int i = 0; i <= grid.n1; ++i) {
    for (int j = 0; j <= grid.n2; ++j) {
      out.phi(i, j) += x[unknown(grid, i, j, 0)];
      out.Psi(i, j) += x[unknown(grid, i, j, 1)];
    }
  }
  const Eigen::VectorXd r = solver.matrix() * x - b;
  out.residual_inf = r.lpNorm<Eigen::Infinity>();
  out.energy.h1_phi = discrete_h1_norm(out.phi);
  out.energy.h1_Psi = discrete_h1_norm(out.Psi);
  return out;
}

CoercivityMatrices coercivity_matrices(const Grid& grid, const EllipticCoefficients& coef) {
  const SparseMatrix A = assemble_operator(grid, coef);
  const auto n = A.rows();
  // Nodal trapezoid weights W, per unknown.
  Eigen::VectorXd W(n);
  std::vector<Eigen::Index> free;
  std::vector<Eigen::Index> position(static_cast<std::size_t>(n), -1);
  for (int i = 0; i <= grid.n1; ++i) {
    for (int j = 0; j <= grid.n2; ++j) {
      const double w = grid.h1() * grid.h2() * weight(i, grid.n1) * weight(j, grid.n2);
      W[unknown(grid, i, j, 0)] = w;
      W[unknown(grid, i, j, 1)] = w;
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const int node = static_cast<int>(k / 2);
    const int i = node / (grid.n2 + 1);
    const int j = node % (grid.n2 + 1);
    const bool fixed = (k % 2 == 0) ? phi_dirichlet(grid, i, j) : Psi_dirichlet(grid, i, j);
    if (!fixed) {
      position[static_cast<std::size_t>(k)] = static_cast<Eigen::Index>(free.size());
      free.push_back(k);
    }
  }
  const auto m = static_cast<Eigen::Index>(free.size());

  // Form matrix entries: form(u, v) = -sum_row W_row v_row (A u)_row.
  std::vector<Triplet> tk;
  for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      const auto pr = position[static_cast<std::size_t>(it.row())];
      const auto pc = position[static_cast<std::size_t>(it.col())];
      if (pr < 0 || pc < 0) continue;
      const double v = -W[it.row()] * it.value();
      // symmetric part
      tk.emplace_back(pr, pc, 0.5 * v);
      tk.emplace_back(pc, pr, 0.5 * v);
    }
  }
  CoercivityMatrices out;
  out.K.resize(m, m);
  out.K.setFromTriplets(tk.begin(), tk.end());

  // Gram matrix of the discrete H1 inner product, per component.
  std::vector<Triplet> tm;
  auto add_edge = [&](Eigen::Index a, Eigen::Index b, double c) {
    const auto pa = position[static_cast<std::size_t>(a)];
    const auto pb = position[static_cast<std::size_t>(b)];
    if (pa >= 0) tm.emplace_back(pa, pa, c);
    if (pb >= 0) tm.emplace_back(pb, pb, c);
    if (pa >= 0 && pb >= 0) {
      tm.emplace_back(pa, pb, -c);
      tm.emplace_back(pb, pa, -c);
    }
  };
  for (int comp = 0; comp < 2; ++comp) {
    for (int i = 0; i <= grid.n1; ++i) {
      for (int j = 0; j <= grid.n2; ++j) {
        const auto k = unknown(grid, i, j, comp);
        const auto pk = position[static_cast<std::size_t>(k)];
        if (pk >= 0) tm.emplace_back(pk, pk, W[k]);
        if (i < grid.n1) {
          add_edge(k, unknown(grid, i + 1, j, comp), grid.h2() / grid.h1() * weight(j, grid.n2));
        }
        if (j < grid.n2) {
          add_edge(k, unknown(grid, i, j + 1, comp), grid.h1() / grid.h2() * weight(i, grid.n1));
        }
      }
    }
  }
  out.M.resize(m, m);
  out.M.setFromTriplets(tm.begin(), tm.end());
  out.free_unknowns = std::move(free);
  return out;
}

CoercivityReport coercivity_check(const Grid& grid, const EllipticCoefficients& coef, int subspace,
                                  double tol, int max_iters) {
  const CoercivityMatrices mats = coercivity_matrices(grid, coef);
  const auto n = mats.K.rows();
  const int p = static_cast<int>(std::min<Eigen::Index>(subspace, n));

  // Shift below the spectrum: K - s M is positive definite when the diagonal
  // coefficients are positive and s < min(0, min d).
  double dmin = 0.0;
  for (double v : coef.d) dmin = std::min(dmin, v);
  const double shift = dmin - 1.0;
  SparseMatrix S = mats.K - shift * mats.M;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
  if (ldlt.info() != Eigen::Success) {
    throw SolverFailure("coercivity_check: shifted factorization failed",
                        std::numeric_limits<double>::quiet_NaN());
  }

  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index r = 0; r < n; ++r)
    for (int c = 0; c < p; ++c) X(r, c) = normal(rng);

  CoercivityReport report;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::MatrixXd MX = mats.M * X;
    Eigen::MatrixXd Y = ldlt.solve(MX);
    const Eigen::MatrixXd Kr = Y.transpose() * (mats.K * Y);
    Eigen::MatrixXd Mr = Y.transpose() * (mats.M * Y);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(
        0.5 * (Kr + Kr.transpose()), 0.5 * (Mr + Mr.transpose()));
    if (ritz.info() != Eigen::Success) break;
    X = Y * ritz.eigenvectors();
    const double lambda = ritz.eigenvalues()[0];
    report.lower_bound = lambda;
    report.iterations = it;
    if (std::abs(lambda - previous) <= tol * std::max(1.0, std::abs(lambda))) {
      report.converged = true;
      return report;
    }
    previous = lambda;
  }
  throw SolverFailure("coercivity_check: inverse iteration did not converge", report.lower_bound);
}

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
  if (!Eigen::saveMarket(A, path)) throw Error(ErrorClass::config, "cannot write " + path);
}

}  // namespace gravduct
