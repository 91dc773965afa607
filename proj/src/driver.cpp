#include "gravduct/driver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gravduct/transport.hpp"

namespace gravduct {

void IterationConfig::validate(double m0) const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("iteration.sigma must be >= 0");
  if (!(M > 0.0)) throw DomainError("iteration.M must be > 0");
  if (!(delta() < 0.25 * m0)) throw DomainError("iteration: delta = M sigma must be < m0/4");
  if (max_iters < 1) throw DomainError("iteration.max_iters must be >= 1");
  if (!(tol_fixpoint > 0.0)) throw DomainError("iteration.tol must be > 0");
  if (!(under_relaxation > 0.0 && under_relaxation <= 1.0)) {
    throw DomainError("iteration.under_relaxation must lie in (0, 1]");
  }
  if (!(fallback_relaxation > 0.0 && fallback_relaxation <= 1.0)) {
    throw DomainError("iteration.fallback_relaxation must lie in (0, 1]");
  }
}

PerturbationState PerturbationState::zero(const Grid& grid, double S0) {
  return {ScalarField(grid, "phi"), ScalarField(grid, "Psi"), ScalarField(grid, "S", S0),
          ScalarField(grid, "K")};
}

double iteration_metric(const ScalarField& a, const ScalarField& b) {
  return std::max(c1_norm(a), c1_norm(b));
}

BackgroundSolution background_for_grid(const BackgroundParams& params, const Grid& grid,
                                       int refinement) {
  const auto nodes = static_cast<std::size_t>(2 * grid.n1 * refinement + 1);
  return integrate_background(params, nodes);
}

FixedPointMap::FixedPointMap(const BackgroundSolution& bg, const Grid& grid, const BoundaryData& data,
                             SolverOptions options)
    : bg_(bg),
      grid_(grid),
      data_(data),
      delta0_(subsonic_margin(bg).delta0),
      coef_(grid_coefficients(bg, grid, delta0_)),
      solver_(grid, coef_, options),
      exit_(exit_baseline(bg)) {
  if (grid.L != bg.params().L) throw DomainError("grid length differs from background length");
  if (!(delta0_ > 0.0)) {
    throw Error(ErrorClass::sonic,
                "subsonic margin delta0 = " + std::to_string(delta0_) + " <= 0; shorten the duct");
  }
  data_.validate();
  columns_.reserve(grid.n1 + 1);
  for (int i = 0; i <= grid.n1; ++i) columns_.emplace_back(base_state(bg, grid.x1(i)));
}

LinearProblem FixedPointMap::frozen_problem(const ScalarField& phi, const ScalarField& Psi,
                                            ScalarField* S_out, ScalarField* K_out) const {
  const Grid& g = grid_;
  const double m0 = bg_.params().m0;
  const StreamMap map = build_stream_map(phi, m0);
  const auto S = transport_with_gradient(
      map, [this](double y) { return data_.S_en(y); },
      [this](double y) { return data_.S_en_derivative(y); }, "S");
  TransportedField K{ScalarField(g, "K"), ScalarField(g, "d1_K"), ScalarField(g, "d2_K")};
  if (data_.general_k) {
    K = transport_with_gradient(
        map, [this](double y) { return data_.K_en(y); },
        [this](double y) { return data_.K_en_derivative(y); }, "K");
  }

  LinearProblem p = LinearProblem::zero(g, coef_);
  for (int i = 0; i <= g.n1; ++i) {
    const Linearization& lin = columns_[i];
    for (int j = 0; j <= g.n2; ++j) {
      const Vec2 q = {d1(phi, i, j), d2(phi, i, j)};
      const double z = Psi(i, j);
      const double s = S.value(i, j);
      const double k = K.value(i, j);
      p.f(i, j) = lin.f(q, z, s, S.d2(i, j), k, K.d2(i, j));
      const Vec2 F = lin.F(q, z, s, k);
      p.F1(i, j) = F[0];
      p.F2(i, j) = F[1];
      p.g(i, j) = lin.g(q, z, s, k);
    }
  }
  for (int j = 0; j <= g.n2; ++j) {
    const double x2 = g.x2(j);
    const Vec2 q = {d1(phi, g.n1, j), d2(phi, g.n1, j)};
    p.h_exit[j] = exit_h(exit_, q, data_.p_ex(x2), data_.Phi_bd(x2), S.value(g.n1, j), K.value(g.n1, j));
    p.g_en[j] = data_.G_en(x2) - data_.G0;
    p.Psi_bd[j] = data_.Phi_bd(x2) - exit_.Phi0;
  }
  if (S_out) *S_out = S.value;
  if (K_out) *K_out = K.value;
  return p;
}

FixedPointMap::Output FixedPointMap::apply(const ScalarField& phi, const ScalarField& Psi) const {
  Output out;
  const LinearProblem p = frozen_problem(phi, Psi, &out.S, &out.K);
  LinearSolution sol = solver_.solve(p);
  out.phi = std::move(sol.phi);
  out.Psi = std::move(sol.Psi);
  return out;
}

namespace {

double min_psi_x2(const ScalarField& phi, double m0) {
  double m = std::numeric_limits<double>::infinity();
  const Grid& g = phi.grid();
  for (int i = 0; i <= g.n1; ++i)
    for (int j = 0; j <= g.n2; ++j) m = std::min(m, m0 + d2(phi, i, j));
  return m;
}

ScalarField blend(const ScalarField& next, const ScalarField& prev, double w) {
  if (w == 1.0) return next;
  ScalarField out = next;
  auto& v = out.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = w * v[k] + (1.0 - w) * prev.values()[k];
  return out;
}

}  // namespace

bool in_box(const ScalarField& phi, const ScalarField& Psi, double m0, double delta) {
  // Rounding slack, so that sigma = 0 keeps the background in its zero-radius box.
  delta += 1e-12 * m0;
  return phi.max_abs() <= delta && Psi.max_abs() <= delta && min_psi_x2(phi, m0) >= 0.75 * m0;
}

IterationResult iterate(const FixedPointMap& map, const IterationConfig& cfg,
                        const std::optional<std::pair<ScalarField, ScalarField>>& start) {
  const auto& pr = map.background().params();
  cfg.validate(pr.m0);
  const double delta = cfg.delta();
  PerturbationState x = PerturbationState::zero(map.grid(), pr.S0);
  if (start) {
    if (!in_box(start->first, start->second, pr.m0, delta)) {
      throw DomainError("iterate: initial guess lies outside the iteration box");
    }
    x.phi = start->first;
    x.Psi = start->second;
  }

  IterationResult result;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    FixedPointMap::Output out = map.apply(x.phi, x.Psi);
    double w = cfg.under_relaxation;
    ScalarField phi = blend(out.phi, x.phi, w);
    ScalarField Psi = blend(out.Psi, x.Psi, w);
    if (!in_box(phi, Psi, pr.m0, delta) && cfg.fallback_relaxation < w) {
      w = cfg.fallback_relaxation;
      phi = blend(out.phi, x.phi, w);
      Psi = blend(out.Psi, x.Psi, w);
    }
    if (!in_box(phi, Psi, pr.m0, delta)) {
      PerturbationState last{phi, Psi, out.S, out.K};
      throw LeftIterationBox("iteration " + std::to_string(it) + " left the box: sup|phi| = " +
                                 std::to_string(phi.max_abs()) + ", sup|Psi| = " +
                                 std::to_string(Psi.max_abs()) + ", delta = " + std::to_string(delta),
                             std::move(last));
    }
    IterationRecord rec;
    rec.iteration = it;
    rec.difference = iteration_metric(phi - x.phi, Psi - x.Psi);
    rec.sup_phi = phi.max_abs();
    rec.sup_Psi = Psi.max_abs();
    rec.min_psi_x2 = min_psi_x2(phi, pr.m0);
    rec.relaxation = w;
    result.log.records.push_back(rec);
    x.phi = std::move(phi);
    x.Psi = std::move(Psi);
    x.phi.rename("phi");
    x.Psi.rename("Psi");
    if (rec.difference < cfg.tol_fixpoint) {
      result.log.converged = true;
      break;
    }
  }
  if (!result.log.converged) {
    x.S = map.apply(x.phi, x.Psi).S;
    throw MaxItersExceeded("no convergence after " + std::to_string(cfg.max_iters) + " iterations",
                           std::move(x));
  }
  // One more application: the fixed-point defect, and the entropy of the final iterate.
  FixedPointMap::Output check = map.apply(x.phi, x.Psi);
  result.log.fixed_point_defect = iteration_metric(check.phi - x.phi, check.Psi - x.Psi);
  x.S = std::move(check.S);
  x.K = std::move(check.K);
  result.state = std::move(x);
  return result;
}

FlowState reconstruct(const BackgroundSolution& bg, const PerturbationState& state) {
  const Grid& g = state.phi.grid();
  const auto& pr = bg.params();
  const double gamma = pr.gamma;
  FlowState fs;
  fs.rho = ScalarField(g, "rho");
  fs.u = ScalarField(g, "u");
  fs.v = ScalarField(g, "v");
  fs.p = ScalarField(g, "p");
  fs.Phi = ScalarField(g, "Phi");
  fs.mach = ScalarField(g, "mach");
  fs.K = ScalarField(g, "K");
  fs.S = state.S;
  fs.S.rename("S");
  fs.max_mach = 0.0;
  fs.min_rho = std::numeric_limits<double>::infinity();
  fs.min_u = std::numeric_limits<double>::infinity();

  ScalarField B(g, "B");
  for (int i = 0; i <= g.n1; ++i) {
    const auto base = bg.at(g.x1(i));
    for (int j = 0; j <= g.n2; ++j) {
      const Vec2 grad = {d1(state.phi, i, j), pr.m0 + d2(state.phi, i, j)};
      const double Phi = base.Phi0 + state.Psi(i, j);
      const double S = state.S(i, j);
      const double rho = resolve_density(gamma, grad, Phi, S, state.K(i, j), base.rho);
      const double u = grad[1] / rho;
      const double v = -grad[0] / rho;
      const double p = std::exp(S) * std::pow(rho, gamma);
      const double c = std::sqrt(gamma * p / rho);
      fs.rho(i, j) = rho;
      fs.u(i, j) = u;
      fs.v(i, j) = v;
      fs.p(i, j) = p;
      fs.Phi(i, j) = Phi;
      fs.mach(i, j) = std::hypot(u, v) / c;
      B(i, j) = 0.5 * (u * u + v * v) + gamma * p / ((gamma - 1.0) * rho);
      fs.K(i, j) = B(i, j) + Phi;
      fs.max_mach = std::max(fs.max_mach, fs.mach(i, j));
      fs.min_rho = std::min(fs.min_rho, rho);
      fs.min_u = std::min(fs.min_u, u);
    }
  }

  // Residuals with centered differences on nodes two cells away from the
  // boundary. Next to the boundary the stencil would mix one-sided boundary
  // gradients with centered ones, and the mismatch of their O(h^2) truncation
  // errors divided by h shows up as a spurious first-order residual.
  const double h1 = g.h1();
  const double h2 = g.h2();
  auto D1 = [&](auto&& f, int i, int j) { return (f(i + 1, j) - f(i - 1, j)) / (2.0 * h1); };
  auto D2 = [&](auto&& f, int i, int j) { return (f(i, j + 1) - f(i, j - 1)) / (2.0 * h2); };
  const auto& rho = fs.rho;
  const auto& u = fs.u;
  const auto& v = fs.v;
  const auto& p = fs.p;
  const auto& Phi = fs.Phi;
  auto mass1 = [&](int i, int j) { return rho(i, j) * u(i, j); };
  auto mass2 = [&](int i, int j) { return rho(i, j) * v(i, j); };
  auto ruv = [&](int i, int j) { return rho(i, j) * u(i, j) * v(i, j); };
  auto rvvp = [&](int i, int j) { return rho(i, j) * v(i, j) * v(i, j) + p(i, j); };
  auto ruup = [&](int i, int j) { return rho(i, j) * u(i, j) * u(i, j) + p(i, j); };
  auto ruB = [&](int i, int j) { return rho(i, j) * u(i, j) * B(i, j); };
  auto rvB = [&](int i, int j) { return rho(i, j) * v(i, j) * B(i, j); };
  auto& r = fs.residuals;
  for (int i = 2; i < g.n1 - 1; ++i) {
    for (int j = 2; j < g.n2 - 1; ++j) {
      const double Phi1 = D1(Phi, i, j);
      const double Phi2 = D2(Phi, i, j);
      r.mass = std::max(r.mass, std::abs(D1(mass1, i, j) + D2(mass2, i, j)));
      r.momentum_y = std::max(r.momentum_y, std::abs(D1(ruv, i, j) + D2(rvvp, i, j) + rho(i, j) * Phi2));
      r.momentum_x = std::max(r.momentum_x, std::abs(D1(ruup, i, j) + D2(ruv, i, j) + rho(i, j) * Phi1));
      r.entropy = std::max(r.entropy, std::abs(u(i, j) * D1(fs.S, i, j) + v(i, j) * D2(fs.S, i, j)));
      r.pseudo_bernoulli =
          std::max(r.pseudo_bernoulli, std::abs(u(i, j) * D1(fs.K, i, j) + v(i, j) * D2(fs.K, i, j)));
      const double lap = (Phi(i + 1, j) - 2.0 * Phi(i, j) + Phi(i - 1, j)) / (h1 * h1) +
                         (Phi(i, j + 1) - 2.0 * Phi(i, j) + Phi(i, j - 1)) / (h2 * h2);
      r.poisson = std::max(r.poisson, std::abs(lap - rho(i, j)));
      r.energy = std::max(r.energy, std::abs(D1(ruB, i, j) + D2(rvB, i, j) +
                                             rho(i, j) * (u(i, j) * Phi1 + v(i, j) * Phi2)));
    }
  }
  for (std::size_t k = 0; k < fs.K.values().size(); ++k) {
    r.K_sup = std::max(r.K_sup, std::abs(fs.K.values()[k] - state.K.values()[k]));
  }
  return fs;
}

double background_deviation(const BackgroundSolution& bg, const FlowState& flow) {
  const Grid& g = flow.rho.grid();
  double dev = 0.0;
  for (int i = 0; i <= g.n1; ++i) {
    const double rho_bar = bg.at(g.x1(i)).rho;
    const double u_bar = bg.params().m0 / rho_bar;
    const double p_bar = std::exp(bg.params().S0) * std::pow(rho_bar, bg.params().gamma);
    for (int j = 0; j <= g.n2; ++j) {
      dev = std::max({dev, std::abs(flow.rho(i, j) - rho_bar), std::abs(flow.u(i, j) - u_bar),
                      std::abs(flow.v(i, j)), std::abs(flow.p(i, j) - p_bar)});
    }
  }
  return dev;
}

StabilityReport stability_experiment(const BackgroundSolution& bg, const Grid& grid,
                                     const BoundaryData& data, const IterationConfig& cfg,
                                     const SolverOptions& options) {
  StabilityReport report;
  for (double scale : {0.25, 0.5, 1.0}) {
    BoundaryData d = data;
    d.sigma = data.sigma * scale;
    IterationConfig c = cfg;
    c.sigma = d.sigma;
    const FixedPointMap map(bg, grid, d, options);
    const IterationResult res = iterate(map, c);
    const FlowState flow = reconstruct(bg, res.state);
    report.sweep.push_back({d.sigma, background_deviation(bg, flow),
                            static_cast<int>(res.log.records.size())});
  }
  const auto& s = report.sweep;
  report.ratio = s[1].deviation > 0.0 ? s[2].deviation / s[1].deviation : 0.0;
  report.monotone = s[0].deviation <= s[1].deviation && s[1].deviation <= s[2].deviation;
  return report;
}

UniquenessReport uniqueness_experiment(const FixedPointMap& map, const IterationConfig& cfg,
                                       int n_starts, std::uint64_t seed) {
  const Grid& g = map.grid();
  const double L = g.L;
  const double delta = cfg.delta();
  const double m0 = map.background().params().m0;
  UniquenessReport report;
  std::vector<PerturbationState> solutions;

  auto random_start = [&](std::uint64_t s) {
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    const double a = amp(rng) * delta;
    const double b = amp(rng) * delta;
    const double k = 1.0 + static_cast<double>(rng() % 3);
    auto phi = ScalarField::sample(g, "phi", [&](double x1, double x2) {
      return a * std::sin(std::numbers::pi * (x2 + 1.0) / 2.0) * std::cos(std::numbers::pi * x1 / (2.0 * L));
    });
    auto Psi = ScalarField::sample(g, "Psi", [&](double x1, double x2) {
      return b * std::cos(k * std::numbers::pi * x2) * (1.0 - 0.5 * x1 / L);
    });
    return std::make_pair(phi, Psi);
  };

  for (int n = 0; n < n_starts; ++n) {
    UniquenessStart st;
    std::optional<std::pair<ScalarField, ScalarField>> start;
    if (n == 0) {
      st.kind = "zero";
      start = std::make_pair(ScalarField(g, "phi"), ScalarField(g, "Psi"));
    } else if (n == 2) {
      st.kind = "scaled_first_iterate";
      const auto first = map.apply(ScalarField(g, "phi"), ScalarField(g, "Psi"));
      start = std::make_pair(0.5 * first.phi, 0.5 * first.Psi);
    } else {
      st.kind = "random_smooth";
      st.seed = seed + static_cast<std::uint64_t>(n);
      start = random_start(st.seed);
    }
    st.accepted = in_box(start->first, start->second, m0, delta);
    if (st.accepted) {
      const IterationResult res = iterate(map, cfg, start);
      st.iterations = static_cast<int>(res.log.records.size());
      solutions.push_back(res.state);
    }
    report.starts.push_back(st);
  }
  for (std::size_t a = 0; a < solutions.size(); ++a) {
    for (std::size_t b = a + 1; b < solutions.size(); ++b) {
      const double diff = std::max((solutions[a].phi - solutions[b].phi).max_abs(),
                                   (solutions[a].Psi - solutions[b].Psi).max_abs());
      report.pairwise.push_back(diff);
      report.max_difference = std::max(report.max_difference, diff);
    }
  }
  return report;
}

}  // namespace gravduct
