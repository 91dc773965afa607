#pragma once

#include "gravduct/background.hpp"

namespace gravduct {

/// One term sigma a cos(k pi (x2 + 1)/2) of a boundary perturbation.
struct Mode {
  double amplitude = 0.0;
  int k = 1;

  double shape(double x2) const;
  double shape_derivative(double x2) const;
};

/// Corner-flattening weight (1 - x2^2)^2 and its derivative.
double corner_weight(double x2);
double corner_weight_derivative(double x2);

/// Closed-form boundary data around a background:
///   G_en  = G0      + sigma a_G cos(.) w     on the inlet,
///   S_en  = S0      + sigma a_S cos(.)       on the inlet,
///   p_ex  = pbar(L) + sigma a_p cos(.) w     on the exit,
///   Phi_bd = Phi0(L) + sigma a_Phi cos(.)    on the exit,
/// with integer mode numbers so that d2 Phi_bd vanishes at the corners.
/// The inlet pseudo-Bernoulli trace K_en = B_en + Phi_bd is zero unless
/// general_k is set, in which case K_en = sigma a_B cos(.).
struct BoundaryData {
  double sigma = 0.0;
  Mode G_en_mode, S_en_mode, p_ex_mode, Phi_bd_mode, B_en_mode;
  bool general_k = false;

  // background reference values
  double G0 = 0.0;
  double S0 = 0.0;
  double p_bar_L = 0.0;
  double Phi0_L = 0.0;

  /// Unperturbed data (sigma = 0) for the given background.
  static BoundaryData around(const BackgroundSolution& bg);

  double G_en(double x2) const;
  double S_en(double x2) const;
  double S_en_derivative(double x2) const;
  double p_ex(double x2) const;
  double Phi_bd(double x2) const;
  double Phi_bd_derivative(double x2) const;
  double K_en(double x2) const;
  double K_en_derivative(double x2) const;

  /// Throws DomainError if p_ex is not positive on the exit or if a nonzero
  /// B_en perturbation is requested without general_k.
  void validate() const;
};

}  // namespace gravduct
