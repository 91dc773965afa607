#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gravduct {

/// Uniform tensor grid on [0, L] x [-1, 1]. Node (i, j) sits at
/// (i h1, -1 + j h2) with 0 <= i <= n1, 0 <= j <= n2.
struct Grid {
  double L = 1.0;
  int n1 = 4;
  int n2 = 4;

  Grid() = default;
  Grid(double length, int cells1, int cells2);

  double h1() const { return L / n1; }
  double h2() const { return 2.0 / n2; }
  double x1(int i) const { return i == n1 ? L : i * h1(); }
  double x2(int j) const { return j == n2 ? 1.0 : -1.0 + j * h2(); }
  std::size_t nodes() const { return static_cast<std::size_t>(n1 + 1) * (n2 + 1); }
  /// Row-major index, i outer.
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * (n2 + 1) + static_cast<std::size_t>(j);
  }
  bool operator==(const Grid& other) const {
    return L == other.L && n1 == other.n1 && n2 == other.n2;
  }
};

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(const Grid& grid, std::string name, double fill = 0.0);

  template <class F>
  static ScalarField sample(const Grid& grid, std::string name, F&& fn) {
    ScalarField out(grid, std::move(name));
    for (int i = 0; i <= grid.n1; ++i)
      for (int j = 0; j <= grid.n2; ++j) out(i, j) = fn(grid.x1(i), grid.x2(j));
    return out;
  }

  const Grid& grid() const { return grid_; }
  const std::string& name() const { return name_; }
  void rename(std::string name) { name_ = std::move(name); }

  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double max_abs() const;
  double min() const;
  double max() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);

 private:
  Grid grid_;
  std::string name_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Second-order derivative stencils: centered inside, three-point one-sided on
/// the boundary.
double d1(const ScalarField& f, int i, int j);
double d2(const ScalarField& f, int i, int j);
ScalarField d1(const ScalarField& f);
ScalarField d2(const ScalarField& f);

/// Sup norm of the field and of its two first derivatives.
double c1_norm(const ScalarField& f);

}  // namespace gravduct
