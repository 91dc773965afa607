#pragma once

#include <functional>
#include <memory>
#include <string>

#include "gravduct/grid.hpp"

namespace gravduct {

using Trace = std::function<double(double)>;

/// Inverse of the streamline labelling: for each node, the inlet ordinate
/// theta on the same level set of psi = psi0 + phi.
class StreamMap {
 public:
  StreamMap(const ScalarField& psi, double m0);
  ~StreamMap();
  StreamMap(StreamMap&&) noexcept;
  StreamMap& operator=(StreamMap&&) noexcept;

  const Grid& grid() const { return psi_.grid(); }
  const ScalarField& psi() const { return psi_; }
  const ScalarField& theta() const { return theta_; }
  /// Gradient of theta from grad psi / psi_{x2}(0, theta).
  const ScalarField& theta_d1() const { return theta_d1_; }
  const ScalarField& theta_d2() const { return theta_d2_; }
  /// max over nodes of |psi(x) - psi(0, theta(x))|.
  double defect() const { return defect_; }

  /// Monotone cubic interpolant of the inlet trace psi(0, .) and its derivative.
  double inlet(double x2) const;
  double inlet_derivative(double x2) const;

 private:
  struct Interpolant;
  ScalarField psi_, theta_, theta_d1_, theta_d2_;
  std::unique_ptr<Interpolant> inlet_;
  double defect_ = 0.0;
};

/// psi = m0 (x2 + 1) + phi. Throws MonotonicityLost if the discrete psi_{x2}
/// drops below m0/2 anywhere.
StreamMap build_stream_map(const ScalarField& phi, double m0);

/// trace(theta(x)) at every node.
ScalarField transport_scalar(const StreamMap& map, const Trace& trace, std::string name = "S");

struct TransportedField {
  ScalarField value;
  ScalarField d1;
  ScalarField d2;
};

/// Composition together with its chain-rule gradient trace'(theta) grad theta.
TransportedField transport_with_gradient(const StreamMap& map, const Trace& trace,
                                         const Trace& trace_derivative, std::string name = "S");

struct TransportReport {
  double sup_deviation = 0.0;        // sup |S - S0|
  double sup_trace_deviation = 0.0;  // sup |S_en - S0| over the inlet nodes
  double grad_deviation = 0.0;       // sup |grad S|
  double grad_trace_deviation = 0.0; // sup |S_en'| over the inlet nodes
  double value_ratio = 0.0;
  double grad_ratio = 0.0;
};

TransportReport transport_stability_check(const StreamMap& map, const Trace& trace,
                                          const Trace& trace_derivative, double reference);

/// max over interior nodes of |psi_{x2} S_{x1} - psi_{x1} S_{x2}| with centered differences.
double streamline_residual(const ScalarField& psi, const ScalarField& S);

}  // namespace gravduct
