#include "gravduct/transport.hpp"

#include <algorithm>
// pchip.hpp in Boost 1.74 calls isnan unqualified; the C header puts it in scope.
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <vector>

#include "gravduct/errors.hpp"

namespace gravduct {

struct StreamMap::Interpolant {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

StreamMap::~StreamMap() = default;
StreamMap::StreamMap(StreamMap&&) noexcept = default;
StreamMap& StreamMap::operator=(StreamMap&&) noexcept = default;

double StreamMap::inlet(double x2) const { return inlet_->spline(std::clamp(x2, -1.0, 1.0)); }
double StreamMap::inlet_derivative(double x2) const {
  return inlet_->spline.prime(std::clamp(x2, -1.0, 1.0));
}

StreamMap::StreamMap(const ScalarField& psi, double m0)
    : psi_(psi),
      theta_(psi.grid(), "theta"),
      theta_d1_(psi.grid(), "theta_d1"),
      theta_d2_(psi.grid(), "theta_d2") {
  const Grid& g = psi.grid();
  for (int i = 0; i <= g.n1; ++i) {
    for (int j = 0; j <= g.n2; ++j) {
      const double slope = d2(psi, i, j);
      if (!(slope >= 0.5 * m0)) {
        throw MonotonicityLost("stream map: psi_x2 = " + std::to_string(slope) + " < m0/2 at node (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }

  std::vector<double> xs(g.n2 + 1);
  std::vector<double> ys(g.n2 + 1);
  for (int j = 0; j <= g.n2; ++j) {
    xs[j] = g.x2(j);
    ys[j] = psi(0, j);
  }
  const double y_lo = ys.front();
  const double y_hi = ys.back();
  // The default end slopes are one-sided secants, first order only.
  const double left = d2(psi, 0, 0);
  const double right = d2(psi, 0, g.n2);
  inlet_ = std::make_unique<Interpolant>(Interpolant{
      boost::math::interpolators::pchip<std::vector<double>>(std::move(xs), std::move(ys), left, right)});

  for (int i = 0; i <= g.n1; ++i) {
    for (int j = 0; j <= g.n2; ++j) {
      const double target = psi(i, j);
      double theta;
      if (i == 0) {
        theta = g.x2(j);
      } else if (target <= y_lo) {
        theta = -1.0;
      } else if (target >= y_hi) {
        theta = 1.0;
      } else {
        double lo = -1.0;
        double hi = 1.0;
        while (hi - lo > 1e-8) {
          const double mid = 0.5 * (lo + hi);
          if (inlet(mid) < target) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        theta = 0.5 * (lo + hi);
        for (int k = 0; k < 2; ++k) {
          const double next = theta - (inlet(theta) - target) / inlet_derivative(theta);
          theta = std::clamp(next, lo, hi);
        }
      }
      theta_(i, j) = theta;
      defect_ = std::max(defect_, std::abs(target - inlet(theta)));
      const double slope = inlet_derivative(theta);
      theta_d1_(i, j) = d1(psi, i, j) / slope;
      theta_d2_(i, j) = d2(psi, i, j) / slope;
    }
  }
}

StreamMap build_stream_map(const ScalarField& phi, double m0) {
  ScalarField psi = ScalarField::sample(phi.grid(), "psi", [m0](double, double x2) { return m0 * (x2 + 1.0); });
  psi += phi;
  return StreamMap(psi, m0);
}

ScalarField transport_scalar(const StreamMap& map, const Trace& trace, std::string name) {
  ScalarField out(map.grid(), std::move(name));
  auto& v = out.values();
  const auto& th = map.theta().values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = trace(th[k]);
  return out;
}

TransportedField transport_with_gradient(const StreamMap& map, const Trace& trace,
                                         const Trace& trace_derivative, std::string name) {
  TransportedField out{transport_scalar(map, trace, name), ScalarField(map.grid(), "d1_" + name),
                       ScalarField(map.grid(), "d2_" + name)};
  const auto& th = map.theta().values();
  for (std::size_t k = 0; k < th.size(); ++k) {
    const double s = trace_derivative(th[k]);
    out.d1.values()[k] = s * map.theta_d1().values()[k];
    out.d2.values()[k] = s * map.theta_d2().values()[k];
  }
  return out;
}

TransportReport transport_stability_check(const StreamMap& map, const Trace& trace,
                                          const Trace& trace_derivative, double reference) {
  const auto field = transport_with_gradient(map, trace, trace_derivative);
  TransportReport r;
  const Grid& g = map.grid();
  for (std::size_t k = 0; k < field.value.values().size(); ++k) {
    r.sup_deviation = std::max(r.sup_deviation, std::abs(field.value.values()[k] - reference));
    r.grad_deviation = std::max(
        r.grad_deviation, std::hypot(field.d1.values()[k], field.d2.values()[k]));
  }
  for (int j = 0; j <= g.n2; ++j) {
    r.sup_trace_deviation = std::max(r.sup_trace_deviation, std::abs(trace(g.x2(j)) - reference));
    r.grad_trace_deviation = std::max(r.grad_trace_deviation, std::abs(trace_derivative(g.x2(j))));
  }
  r.value_ratio = r.sup_trace_deviation > 0.0 ? r.sup_deviation / r.sup_trace_deviation : 0.0;
  r.grad_ratio = r.grad_trace_deviation > 0.0 ? r.grad_deviation / r.grad_trace_deviation : 0.0;
  return r;
}

double streamline_residual(const ScalarField& psi, const ScalarField& S) {
  const Grid& g = psi.grid();
  const double h1 = g.h1();
  const double h2 = g.h2();
  double worst = 0.0;
  for (int i = 1; i < g.n1; ++i) {
    for (int j = 1; j < g.n2; ++j) {
      const double p1 = (psi(i + 1, j) - psi(i - 1, j)) / (2.0 * h1);
      const double p2 = (psi(i, j + 1) - psi(i, j - 1)) / (2.0 * h2);
      const double s1 = (S(i + 1, j) - S(i - 1, j)) / (2.0 * h1);
      const double s2 = (S(i, j + 1) - S(i, j - 1)) / (2.0 * h2);
      worst = std::max(worst, std::abs(p2 * s1 - p1 * s2));
    }
  }
  return worst;
}

}  // namespace gravduct
