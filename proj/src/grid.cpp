#include "gravduct/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gravduct/errors.hpp"

namespace gravduct {

Grid::Grid(double length, int cells1, int cells2) : L(length), n1(cells1), n2(cells2) {
  if (!(length > 0.0) || !std::isfinite(length)) throw DomainError("grid: L must be > 0");
  if (cells1 < 4 || cells2 < 4) throw DomainError("grid: n1 and n2 must be >= 4");
}

ScalarField::ScalarField(const Grid& grid, std::string name, double fill)
    : grid_(grid), name_(std::move(name)), values_(grid.nodes(), fill) {}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

namespace {

// Derivative along one axis given accessor v(k) on 0..n with spacing h.
template <class V>
double stencil(V&& v, int k, int n, double h) {
  if (k == 0) return (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
  if (k == n) return (3.0 * v(n) - 4.0 * v(n - 1) + v(n - 2)) / (2.0 * h);
  return (v(k + 1) - v(k - 1)) / (2.0 * h);
}

}  // namespace

double d1(const ScalarField& f, int i, int j) {
  const Grid& g = f.grid();
  return stencil([&](int k) { return f(k, j); }, i, g.n1, g.h1());
}

double d2(const ScalarField& f, int i, int j) {
  const Grid& g = f.grid();
  return stencil([&](int k) { return f(i, k); }, j, g.n2, g.h2());
}

ScalarField d1(const ScalarField& f) {
  ScalarField out(f.grid(), "d1_" + f.name());
  for (int i = 0; i <= f.grid().n1; ++i)
    for (int j = 0; j <= f.grid().n2; ++j) out(i, j) = d1(f, i, j);
  return out;
}

ScalarField d2(const ScalarField& f) {
  ScalarField out(f.grid(), "d2_" + f.name());
  for (int i = 0; i <= f.grid().n1; ++i)
    for (int j = 0; j <= f.grid().n2; ++j) out(i, j) = d2(f, i, j);
  return out;
}

double c1_norm(const ScalarField& f) {
  double m = f.max_abs();
  for (int i = 0; i <= f.grid().n1; ++i) {
    for (int j = 0; j <= f.grid().n2; ++j) {
      m = std::max({m, std::abs(d1(f, i, j)), std::abs(d2(f, i, j))});
    }
  }
  return m;
}

}  // namespace gravduct
