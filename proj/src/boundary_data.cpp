#include "gravduct/boundary_data.hpp"

#include <cmath>
#include <numbers>

#include "gravduct/errors.hpp"

namespace gravduct {

double Mode::shape(double x2) const {
  return amplitude * std::cos(k * std::numbers::pi * (x2 + 1.0) / 2.0);
}

double Mode::shape_derivative(double x2) const {
  const double w = k * std::numbers::pi / 2.0;
  return -amplitude * w * std::sin(w * (x2 + 1.0));
}

double corner_weight(double x2) {
  const double s = 1.0 - x2 * x2;
  return s * s;
}

double corner_weight_derivative(double x2) { return -4.0 * x2 * (1.0 - x2 * x2); }

BoundaryData BoundaryData::around(const BackgroundSolution& bg) {
  BoundaryData d;
  d.G0 = bg.params().G0;
  d.S0 = bg.params().S0;
  d.p_bar_L = bg.p().back();
  d.Phi0_L = bg.Phi0().back();
  return d;
}

double BoundaryData::G_en(double x2) const {
  return G0 + sigma * G_en_mode.shape(x2) * corner_weight(x2);
}

double BoundaryData::S_en(double x2) const { return S0 + sigma * S_en_mode.shape(x2); }

double BoundaryData::S_en_derivative(double x2) const {
  return sigma * S_en_mode.shape_derivative(x2);
}

double BoundaryData::p_ex(double x2) const {
  return p_bar_L + sigma * p_ex_mode.shape(x2) * corner_weight(x2);
}

double BoundaryData::Phi_bd(double x2) const { return Phi0_L + sigma * Phi_bd_mode.shape(x2); }

double BoundaryData::Phi_bd_derivative(double x2) const {
  return sigma * Phi_bd_mode.shape_derivative(x2);
}

double BoundaryData::K_en(double x2) const {
  return general_k ? sigma * B_en_mode.shape(x2) : 0.0;
}

double BoundaryData::K_en_derivative(double x2) const {
  return general_k ? sigma * B_en_mode.shape_derivative(x2) : 0.0;
}

void BoundaryData::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("boundary: sigma must be >= 0");
  if (!general_k && B_en_mode.amplitude != 0.0) {
    throw DomainError("boundary: a B_en perturbation breaks B_en + Phi_bd = 0 on the inlet; "
                      "enable general_k to transport a nonzero pseudo-Bernoulli function");
  }
  // |cos| w <= 1, so the extreme exit pressure is pbar(L) - sigma |a_p|.
  if (!(p_bar_L - sigma * std::abs(p_ex_mode.amplitude) > 0.0)) {
    throw DomainError("boundary: p_ex must stay positive on the exit");
  }
}

}  // namespace gravduct
