#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "gravduct/elliptic.hpp"
#include "gravduct/errors.hpp"
#include "gravduct/verification.hpp"

using namespace gravduct;

namespace {

constexpr double kPi = std::numbers::pi;

const BackgroundSolution& bg() {
  static const BackgroundSolution b = [] {
    BackgroundParams p;
    p.gamma = 2.0;
    p.S0 = 1.0;
    p.m0 = std::sqrt(2.0 * std::exp(1.0));
    p.rho0 = 2.0;
    p.G0 = -1.0;
    p.L = 0.5;
    return integrate_background(p, 4097);
  }();
  return b;
}

double delta0() { return subsonic_margin(bg()).delta0; }

EllipticCoefficients identity(const Grid& g) {
  const auto one = [](double) { return 1.0; };
  const auto nil = [](double) { return 0.0; };
  return EllipticCoefficients::from_functions(g, one, one, nil, nil, nil);
}

}  // namespace

TEST_SUITE("elliptic") {

TEST_CASE("identity coefficients decouple the blocks") {
  const Grid g(1.0, 8, 8);
  const SparseMatrix A = assemble_operator(g, identity(g));
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      if (it.value() == 0.0) continue;
      CHECK(it.row() % 2 == it.col() % 2);
    }
  }
}

TEST_CASE("Laplacian rows annihilate constants") {
  const Grid g(0.7, 10, 12);
  const auto coef = identity(g);
  const ScalarField zero(g, "phi");
  const ScalarField one(g, "Psi", 1.0);
  const auto [r1, r2] = apply_operator(g, coef, zero, one);
  for (int i = 1; i < g.n1; ++i)
    for (int j = 1; j < g.n2; ++j) CHECK(std::abs(r2(i, j)) < 1e-12);
}

TEST_CASE("operator consistency on smooth fields") {
  std::vector<double> errs;
  for (int n : {16, 32, 64}) {
    const Grid g(1.0, n, n);
    const auto coef = synthetic_coefficients(g);
    const LinearProblem mms = mms_problem(g, coef);
    const auto phi = ScalarField::sample(g, "phi", [](double a, double b) { return mms_phi(1.0, a, b); });
    const auto Psi = ScalarField::sample(g, "Psi", [](double a, double b) { return mms_Psi(1.0, a, b); });
    const auto [r1, r2] = apply_operator(g, coef, phi, Psi);
    double err = 0.0;
    for (int i = 1; i < n; ++i) {
      for (int j = 1; j < n; ++j) {
        // The first equation's right-hand side is f + div F with an analytic div F.
        const double divF = (mms.F1(i + 1, j) - mms.F1(i - 1, j)) / (2 * g.h1()) +
                            (mms.F2(i, j + 1) - mms.F2(i, j - 1)) / (2 * g.h2());
        err = std::max({err, std::abs(r1(i, j) - mms.f(i, j) - divF), std::abs(r2(i, j) - mms.g(i, j))});
      }
    }
    errs.push_back(err);
  }
  for (double o : observed_orders(errs)) CHECK(o > 1.9);
}

TEST_CASE("zero data gives the zero solution") {
  const Grid g(0.5, 16, 16);
  const auto sol = solve(LinearProblem::zero(g, grid_coefficients(bg(), g, delta0())));
  CHECK(sol.phi.max_abs() == 0.0);
  CHECK(sol.Psi.max_abs() == 0.0);
  const auto oracle = homogenize_oracle(LinearProblem::zero(g, grid_coefficients(bg(), g, delta0())));
  CHECK(oracle.phi.max_abs() == 0.0);
  CHECK(oracle.Psi.max_abs() == 0.0);
}

TEST_CASE("manufactured solution converges at second order") {
  const ConvergenceStudy s = mms_convergence({16, 32, 64}, 0.5);
  CHECK(s.min_order >= 1.9);
}

TEST_CASE("boundary conditions hold at the solution") {
  const Grid g(0.5, 24, 20);
  const auto coef = grid_coefficients(bg(), g, delta0());
  const LinearProblem p = random_problem(g, coef, 99);
  const auto sol = solve(p);
  const auto exit_phi = p.exit_phi();
  // Dirichlet rows pass through the factorization, so they hold to rounding.
  double err = 0.0;
  for (int i = 0; i <= g.n1; ++i) {
    err = std::max({err, std::abs(sol.phi(i, 0)), std::abs(sol.phi(i, g.n2) - exit_phi[g.n2])});
  }
  for (int j = 0; j <= g.n2; ++j) {
    err = std::max({err, std::abs(sol.phi(g.n1, j) - exit_phi[j]), std::abs(sol.Psi(g.n1, j) - p.Psi_bd[j])});
  }
  CHECK(err < 1e-11);
  CHECK(sol.residual_rel <= 1e-10);
}

TEST_CASE("parity of the data is inherited by the solution") {
  // b2 d2 Psi couples an even Psi to an odd phi, so the invariant pairing is
  // (phi odd, Psi even) in x2.
  const Grid g(0.5, 16, 16);
  const auto coef = grid_coefficients(bg(), g, delta0());
  LinearProblem p = LinearProblem::zero(g, coef);
  p.f = ScalarField::sample(g, "f", [](double a, double b) { return std::cos(a) * std::sin(kPi * b); });
  p.F1 = ScalarField::sample(g, "F1", [](double a, double b) { return a * b * b * b; });
  p.F2 = ScalarField::sample(g, "F2", [](double a, double b) { return std::sin(a) * b * b; });
  p.g = ScalarField::sample(g, "g", [](double a, double b) { return std::sin(3 * a) * std::cos(kPi * b); });
  for (int j = 0; j <= g.n2; ++j) {
    const double x2 = g.x2(j);
    p.g_en[j] = std::cos(kPi * x2);
    p.Psi_bd[j] = std::cos(kPi * (x2 + 1));
  }
  const auto sol = solve(p);
  for (int i = 0; i <= g.n1; ++i) {
    for (int j = 0; j <= g.n2; ++j) {
      CHECK(std::abs(sol.phi(i, j) + sol.phi(i, g.n2 - j)) < 1e-12);
      CHECK(std::abs(sol.Psi(i, j) - sol.Psi(i, g.n2 - j)) < 1e-12);
    }
  }

  // Decoupled identity operator: even data, even solution.
  LinearProblem q = LinearProblem::zero(g, identity(g));
  q.f = ScalarField::sample(g, "f", [](double a, double b) { return std::cos(a) * (1.0 + b * b); });
  q.g = p.g;
  q.g_en = p.g_en;
  q.Psi_bd = p.Psi_bd;
  const auto sol_id = solve(q);
  for (int i = 0; i <= g.n1; ++i) {
    for (int j = 0; j <= g.n2; ++j) {
      CHECK(std::abs(sol_id.phi(i, j) - sol_id.phi(i, g.n2 - j)) < 1e-12);
      CHECK(std::abs(sol_id.Psi(i, j) - sol_id.Psi(i, g.n2 - j)) < 1e-12);
    }
  }
}

TEST_CASE("two-path equivalence") {
  const Grid g(0.5, 32, 32);
  const auto coef = grid_coefficients(bg(), g, delta0());
  CHECK(homogenize_agreement(g, coef, 5, 2024) <= 1e-8);

  // Constant exit potential and zero h: the lift is a constant shift of Psi.
  LinearProblem p = LinearProblem::zero(g, coef);
  p.f = ScalarField::sample(g, "f", [](double a, double b) { return a * b; });
  for (double& v : p.Psi_bd) v = 0.3;
  const auto a = solve(p);
  const auto b = homogenize_oracle(p);
  CHECK((a.phi - b.phi).max_abs() < 1e-10);
  CHECK((a.Psi - b.Psi).max_abs() < 1e-10);
}

TEST_CASE("discrete energy identity") {
  const Grid g(0.5, 20, 20);
  const auto coef = grid_coefficients(bg(), g, delta0());
  LinearProblem p = LinearProblem::zero(g, coef);
  p.f = ScalarField::sample(g, "f", [](double a, double b) { return std::cos(3 * a) * (1 - b * b); });
  p.g = ScalarField::sample(g, "g", [](double a, double b) { return std::sin(2 * a + b); });
  const auto sol = solve(p);
  const double form = discrete_form(g, coef, sol.phi, sol.Psi, sol.phi, sol.Psi);
  // On the homogeneous space the operator is minus the weighted form.
  ScalarField fz = p.f, gz = p.g;
  for (int i = 0; i <= g.n1; ++i) {
    fz(i, 0) = fz(i, g.n2) = 0.0;
  }
  for (int j = 0; j <= g.n2; ++j) {
    fz(g.n1, j) = 0.0;
    gz(g.n1, j) = 0.0;
  }
  const double pairing = -(weighted_pairing(fz, sol.phi) + weighted_pairing(gz, sol.Psi));
  CHECK(form == doctest::Approx(pairing).epsilon(1e-9));
  CHECK(form > 0.0);
}

TEST_CASE("discrete stability constant is stable across data") {
  const Grid g(0.5, 24, 24);
  const auto coef = grid_coefficients(bg(), g, delta0());
  const LinearSolver solver(g, coef);
  double cmin = 1e300, cmax = 0.0;
  for (int k = 0; k < 20; ++k) {
    LinearProblem p = LinearProblem::zero(g, coef);
    const LinearProblem r = random_problem(g, coef, 500 + k);
    p.f = r.f;
    p.g = r.g;
    const auto sol = solver.solve(p);
    const double data = std::sqrt(weighted_pairing(p.f, p.f) + weighted_pairing(p.g, p.g));
    const double c = std::hypot(discrete_h1_norm(sol.phi), discrete_h1_norm(sol.Psi)) / data;
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  CAPTURE(cmin);
  CAPTURE(cmax);
  CHECK(cmax < 2.0 * cmin);
}

TEST_CASE("coercivity diagnostics") {
  const PoincareCheck id = identity_coercivity(1.0, 32);
  CHECK(id.relative_error < 0.1);

  const Grid g(0.5, 16, 16);
  auto coef = grid_coefficients(bg(), g, delta0());
  CHECK(coercivity_check(g, coef).lower_bound > 0.0);
  for (double& d : coef.d) d = -3.0 / (0.5 * 0.5);
  CHECK(coercivity_check(g, coef).lower_bound <= 0.0);
}

TEST_CASE("Krylov path agrees with the direct solver") {
  const Grid g(0.5, 24, 24);
  const auto coef = grid_coefficients(bg(), g, delta0());
  const LinearProblem p = random_problem(g, coef, 7);
  SolverOptions kr;
  kr.method = SolverOptions::Method::krylov;
  const auto a = solve(p);
  const auto b = solve(p, kr);
  CHECK((a.phi - b.phi).max_abs() < 1e-8);
  CHECK((a.Psi - b.Psi).max_abs() < 1e-8);
}

TEST_CASE("invalid coefficients are rejected") {
  const Grid g(0.5, 8, 8);
  auto coef = identity(g);
  coef.a22[3] = std::nan("");
  CHECK_THROWS_AS(assemble_operator(g, coef), AssemblyError);
}

TEST_CASE("matrix market dump") {
  const Grid g(0.5, 6, 6);
  const SparseMatrix A = assemble_operator(g, identity(g));
  const std::string path = "elliptic_dump_test.mtx";
  write_matrix_market(A, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("%%MatrixMarket", 0) == 0);
  std::remove(path.c_str());
}

}  // TEST_SUITE
