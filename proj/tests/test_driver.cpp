#include <doctest.h>

#include <cmath>
#include <memory>

#include "gravduct/driver.hpp"
#include "gravduct/transport.hpp"
#include "gravduct/verification.hpp"

using namespace gravduct;

namespace {

BackgroundParams reference_params() {
  BackgroundParams p;
  p.gamma = 2.0;
  p.S0 = 1.0;
  p.m0 = std::sqrt(2.0 * std::exp(1.0));
  p.rho0 = 2.0;
  p.G0 = -1.0;
  p.L = 0.5;
  return p;
}

BoundaryData data_for(const BackgroundSolution& bg, double sigma) {
  BoundaryData d = BoundaryData::around(bg);
  d.sigma = sigma;
  d.G_en_mode = {1.0, 1};
  d.S_en_mode = {0.5, 1};
  d.p_ex_mode = {1.0, 2};
  d.Phi_bd_mode = {1.0, 2};
  return d;
}

struct Setup {
  Grid grid;
  BackgroundSolution bg;
  BoundaryData data;
  std::unique_ptr<FixedPointMap> map;
  IterationConfig cfg;

  Setup(int n, double sigma)
      : grid(0.5, n, n), bg(background_for_grid(reference_params(), grid)), data(data_for(bg, sigma)) {
    map = std::make_unique<FixedPointMap>(bg, grid, data);
    cfg.sigma = sigma;
  }
};

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("zero data: the background is the fixed point") {
  Setup s(16, 0.0);
  const IterationResult r = iterate(*s.map, s.cfg);
  CHECK(r.log.converged);
  CHECK(r.log.records.size() == 1);
  CHECK(r.log.records.front().difference < 1e-14);
  CHECK(r.state.phi.max_abs() < 1e-14);
  CHECK(r.state.Psi.max_abs() < 1e-14);

  const FlowState flow = reconstruct(s.bg, r.state);
  CHECK(background_deviation(s.bg, flow) < 1e-12);
}

TEST_CASE("reconstruct of the zero state is the background") {
  Setup s(16, 0.0);
  const PerturbationState z = PerturbationState::zero(s.grid, s.bg.params().S0);
  const FlowState flow = reconstruct(s.bg, z);
  CHECK(background_deviation(s.bg, flow) < 1e-12);
  CHECK(flow.max_mach < 1.0);
  CHECK(flow.v.max_abs() < 1e-12);
}

TEST_CASE("contraction at the reference point") {
  Setup s(32, 1e-3);
  const IterationResult r = iterate(*s.map, s.cfg);
  REQUIRE(r.log.converged);
  CHECK(r.log.fixed_point_defect <= s.cfg.tol_fixpoint);
  const auto& rec = r.log.records;
  REQUIRE(rec.size() >= 3);
  for (std::size_t k = 2; k < rec.size(); ++k) {
    if (rec[k].difference < 1e-13) break;
    CHECK(rec[k].difference / rec[k - 1].difference < 0.9);
  }
  CHECK(in_box(r.state.phi, r.state.Psi, s.bg.params().m0, s.cfg.delta()));
}

TEST_CASE("entropy stays in the inlet range and is transported") {
  Setup s(32, 1e-3);
  const IterationResult r = iterate(*s.map, s.cfg);
  double lo = 1e300, hi = -1e300;
  for (int j = 0; j <= s.grid.n2; ++j) {
    lo = std::min(lo, s.data.S_en(s.grid.x2(j)));
    hi = std::max(hi, s.data.S_en(s.grid.x2(j)));
  }
  CHECK(r.state.S.min() >= lo - 1e-14);
  CHECK(r.state.S.max() <= hi + 1e-14);
}

TEST_CASE("mass flux is independent of x1") {
  std::vector<double> errs;
  for (int n : {32, 64}) {
    Setup s(n, 1e-3);
    const FlowState flow = reconstruct(s.bg, iterate(*s.map, s.cfg).state);
    // Trapezoidal flux through each vertical section.
    std::vector<double> flux(s.grid.n1 + 1, 0.0);
    for (int i = 0; i <= s.grid.n1; ++i) {
      for (int j = 0; j < s.grid.n2; ++j) {
        flux[i] += 0.5 * s.grid.h2() *
                   (flow.rho(i, j) * flow.u(i, j) + flow.rho(i, j + 1) * flow.u(i, j + 1));
      }
    }
    double spread = 0.0;
    for (double f : flux) spread = std::max(spread, std::abs(f - flux[0]));
    errs.push_back(spread);
  }
  CAPTURE(errs[0]);
  CAPTURE(errs[1]);
  CHECK(errs[1] < 1e-3);
  CHECK(errs[1] < 0.5 * errs[0]);
}

TEST_CASE("residuals decay under refinement") {
  std::vector<ResidualReport> reps;
  for (int n : {32, 64}) {
    Setup s(n, 1e-3);
    reps.push_back(reconstruct(s.bg, iterate(*s.map, s.cfg).state).residuals);
  }
  auto order = [](double a, double b) { return std::log2(a / b); };
  // Mass holds to rounding because (rho u, rho v) is the curl of psi.
  CHECK(reps[1].mass < 1e-11);
  CHECK(reps[1].pseudo_bernoulli < 1e-11);
  CHECK(order(reps[0].energy, reps[1].energy) >= 1.5);
  CHECK(order(reps[0].momentum_y, reps[1].momentum_y) >= 1.5);
  CHECK(order(reps[0].poisson, reps[1].poisson) >= 1.5);
  CHECK(order(reps[0].momentum_x, reps[1].momentum_x) >= 1.5);
  CHECK(reps[1].K_sup < 1e-3);
}

TEST_CASE("stability sweep is linear in sigma") {
  Setup s(32, 1e-3);
  const StabilityReport r = stability_experiment(s.bg, s.grid, s.data, s.cfg);
  REQUIRE(r.sweep.size() == 3);
  CHECK(r.monotone);
  CHECK(r.ratio >= 1.8);
  CHECK(r.ratio <= 2.2);
}

TEST_CASE("uniqueness across starts") {
  Setup s(32, 1e-3);
  const UniquenessReport one = uniqueness_experiment(*s.map, s.cfg, 1, 7);
  CHECK(one.pairwise.empty());
  const UniquenessReport r = uniqueness_experiment(*s.map, s.cfg, 3, 7);
  CHECK(r.starts.size() == 3);
  for (const auto& st : r.starts) CHECK(st.accepted);
  CHECK(r.max_difference <= 10.0 * s.cfg.tol_fixpoint);
}

TEST_CASE("starts outside the box are refused") {
  Setup s(16, 1e-3);
  const ScalarField big(s.grid, "phi", 1.0);
  const ScalarField zero(s.grid, "Psi");
  CHECK_THROWS_AS(iterate(*s.map, s.cfg, std::make_pair(big, zero)), DomainError);
}

TEST_CASE("iteration config validation") {
  IterationConfig c;
  CHECK_NOTHROW(c.validate(2.0));
  c.sigma = 0.1;  // delta = 0.8 > m0/4
  CHECK_THROWS_AS(c.validate(2.0), DomainError);
  c = IterationConfig{};
  c.sigma = -1.0;
  CHECK_THROWS_AS(c.validate(2.0), DomainError);
  c = IterationConfig{};
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(2.0), DomainError);
}

TEST_CASE("iteration metric") {
  const Grid g(1.0, 10, 10);
  const auto a = ScalarField::sample(g, "a", [](double x1, double) { return 0.5 * x1; });
  const ScalarField z(g, "z");
  CHECK(iteration_metric(a, z) == doctest::Approx(0.5));
  CHECK(iteration_metric(z, z) == 0.0);
}

}  // TEST_SUITE
