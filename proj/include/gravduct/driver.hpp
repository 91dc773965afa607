#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gravduct/boundary_data.hpp"
#include "gravduct/elliptic.hpp"
#include "gravduct/errors.hpp"
#include "gravduct/formulation.hpp"
#include "gravduct/grid.hpp"

namespace gravduct {

struct IterationConfig {
  double sigma = 1e-3;
  double M = 8.0;  // box radius delta = M sigma
  int max_iters = 100;
  double tol_fixpoint = 1e-10;
  double under_relaxation = 1.0;
  double fallback_relaxation = 0.5;

  double delta() const { return M * sigma; }
  /// Throws DomainError; delta must stay below m0/4.
  void validate(double m0) const;
};

struct PerturbationState {
  ScalarField phi;
  ScalarField Psi;
  ScalarField S;
  ScalarField K;

  static PerturbationState zero(const Grid& grid, double S0);
};

struct IterationRecord {
  int iteration = 0;
  double difference = 0.0;  // C1 proxy of the successive difference
  double sup_phi = 0.0;
  double sup_Psi = 0.0;
  double min_psi_x2 = 0.0;
  double relaxation = 1.0;
};

struct IterationLog {
  std::vector<IterationRecord> records;
  bool converged = false;
  double fixed_point_defect = 0.0;
};

/// Carries the last iterate for diagnosis.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, PerturbationState last)
      : Error(ErrorClass::iteration, what), last_(std::move(last)) {}
  const PerturbationState& last_iterate() const { return last_; }

 private:
  PerturbationState last_;
};

class LeftIterationBox : public IterationError {
 public:
  using IterationError::IterationError;
};

class MaxItersExceeded : public IterationError {
 public:
  using IterationError::IterationError;
};

/// max(C1 proxy of a, C1 proxy of b): sup norms of the fields and of their
/// first differences divided by the spacing.
double iteration_metric(const ScalarField& a, const ScalarField& b);

/// The map (phi~, Psi~) -> (phi, Psi): transport the inlet entropy along the
/// streamlines of psi0 + phi~, freeze the nonlinear terms at (phi~, Psi~, S~)
/// and solve the linear problem. The operator is factorized once.
class FixedPointMap {
 public:
  FixedPointMap(const BackgroundSolution& bg, const Grid& grid, const BoundaryData& data,
                SolverOptions options = {});

  struct Output {
    ScalarField phi;
    ScalarField Psi;
    ScalarField S;
    ScalarField K;
  };

  Output apply(const ScalarField& phi, const ScalarField& Psi) const;

  /// Linear problem assembled from a frozen iterate (exposed for inspection).
  LinearProblem frozen_problem(const ScalarField& phi, const ScalarField& Psi, ScalarField* S_out,
                               ScalarField* K_out) const;

  const Grid& grid() const { return grid_; }
  const BackgroundSolution& background() const { return bg_; }
  const BoundaryData& data() const { return data_; }
  const EllipticCoefficients& coefficients() const { return coef_; }
  const LinearSolver& solver() const { return solver_; }
  double delta0() const { return delta0_; }

 private:
  BackgroundSolution bg_;
  Grid grid_;
  BoundaryData data_;
  double delta0_;
  EllipticCoefficients coef_;
  LinearSolver solver_;
  std::vector<Linearization> columns_;
  ExitBaseline exit_;
};

/// Background resolution used for a 2D grid: every node and half node of the
/// grid lies on a background node.
BackgroundSolution background_for_grid(const BackgroundParams& params, const Grid& grid,
                                       int refinement = 8);

/// True when sup |phi|, sup |Psi| <= delta (plus 1e-12 m0 of rounding slack)
/// and psi_x2 >= 3 m0/4 everywhere.
bool in_box(const ScalarField& phi, const ScalarField& Psi, double m0, double delta);

struct IterationResult {
  PerturbationState state;
  IterationLog log;
};

/// Picard iteration from (0, 0) or from the given start, which must lie in the box.
IterationResult iterate(const FixedPointMap& map, const IterationConfig& cfg,
                        const std::optional<std::pair<ScalarField, ScalarField>>& start = std::nullopt);

struct ResidualReport {
  double mass = 0.0;              // (rho u)_x1 + (rho v)_x2
  double momentum_y = 0.0;        // (rho u v)_x1 + (rho v^2 + p)_x2 + rho Phi_x2
  double entropy = 0.0;           // u . grad S
  double pseudo_bernoulli = 0.0;  // u . grad K
  double poisson = 0.0;           // Lap Phi - rho
  double momentum_x = 0.0;        // (rho u^2 + p)_x1 + (rho u v)_x2 + rho Phi_x1
  double energy = 0.0;            // div(rho u B) + rho u . grad Phi
  double K_sup = 0.0;             // sup |B + Phi - K|
};

struct FlowState {
  ScalarField rho, u, v, p, Phi, mach, K, S;
  ResidualReport residuals;
  double max_mach = 0.0;
  double min_rho = 0.0;
  double min_u = 0.0;
};

FlowState reconstruct(const BackgroundSolution& bg, const PerturbationState& state);

/// sup over (rho, u, v, p) of the deviation from the background.
double background_deviation(const BackgroundSolution& bg, const FlowState& flow);

struct StabilityPoint {
  double sigma = 0.0;
  double deviation = 0.0;
  int iterations = 0;
};

struct StabilityReport {
  std::vector<StabilityPoint> sweep;  // sigma/4, sigma/2, sigma
  double ratio = 0.0;                 // deviation(sigma) / deviation(sigma/2)
  bool monotone = false;
};

/// Runs the pipeline at sigma/4, sigma/2 and sigma with the same perturbation shapes.
StabilityReport stability_experiment(const BackgroundSolution& bg, const Grid& grid,
                                     const BoundaryData& data, const IterationConfig& cfg,
                                     const SolverOptions& options = {});

struct UniquenessStart {
  std::string kind;
  std::uint64_t seed = 0;
  bool accepted = false;
  int iterations = 0;
};

struct UniquenessReport {
  std::vector<UniquenessStart> starts;
  std::vector<double> pairwise;  // max-norm differences of (phi, Psi), upper triangle
  double max_difference = 0.0;
};

/// Iterates from n_starts distinct in-box guesses: zero, seeded random smooth
/// fields, and half of the first iterate. Starts outside the box are rejected.
UniquenessReport uniqueness_experiment(const FixedPointMap& map, const IterationConfig& cfg,
                                       int n_starts, std::uint64_t seed);

}  // namespace gravduct
