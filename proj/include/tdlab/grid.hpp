#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "tdlab/errors.hpp"

namespace tdlab {

/// Values on the interior nodes of a Grid. Boundary (ghost) values are
/// implicitly zero.
using Field = Eigen::VectorXd;
using ComplexField = Eigen::VectorXcd;

inline constexpr double kDefaultDensityFloor = 1e-8;

/// Uniform 1D grid on [a, b] with M interior nodes x_i = a + (i+1) h,
/// i = 0..M-1 (zero-based), and Dirichlet ghost nodes at a and b.
struct Grid {
  double a = 0.0;
  double b = 1.0;
  int M = 3;

  double h() const { return (b - a) / (M + 1); }
  double x(int i) const { return a + (i + 1) * h(); }
  double length() const { return b - a; }
  Field nodes() const;
  /// Integral approximation sum_i f_i h (ghost values vanish).
  double integrate(const Field& f) const { return f.sum() * h(); }
  double l2_norm(const Field& f) const;

  bool operator==(const Grid& o) const { return a == o.a && b == o.b && M == o.M; }
};

Grid build_grid(double a, double b, int M);

/// Taylor coefficients f^(k) = d^k f / dt^k at t0 (not divided by k!).
struct TaylorField {
  std::vector<Field> coeffs;
  double t0 = 0.0;

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  const Field& operator[](int k) const { return coeffs.at(static_cast<std::size_t>(k)); }
  /// sum_k f^(k) (t - t0)^k / k!
  Field evaluate(double t) const;
  /// Coefficients re-expanded about t (derivatives of the truncated series).
  TaylorField shifted(double t) const;
  TaylorField truncated(int K) const;
};

bool all_finite(const Field& f);
void require_finite(const Field& f, const char* what);

/// Second-order central difference with zero ghost values.
Field gradient(const Grid& g, const Field& f);
/// In 1D the divergence is the derivative; identical stencil to gradient.
Field divergence(const Grid& g, const Field& f);

/// Symmetric flux-form operator
///   (A v)_i = [c_{i+1/2}(v_{i+1}-v_i) - c_{i-1/2}(v_i - v_{i-1})] / h^2
/// with face coefficients c (M+1 entries; face f sits between node f-1 and
/// node f, the outer two faces touch the ghost nodes where v = 0).
class FluxOperator {
 public:
  FluxOperator(Grid grid, Eigen::VectorXd faces);

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& faces() const { return faces_; }
  int size() const { return grid_.M; }

  Field apply(const Field& v) const;
  Eigen::SparseMatrix<double> matrix() const;
  Eigen::MatrixXd dense() const;
  /// Diagonal of A (non-positive).
  Field diagonal() const;
  /// Q(u, w) = <grad u, c grad w> on faces, the discrete bilinear form.
  double bilinear(const Field& u, const Field& w) const;

 private:
  Grid grid_;
  Eigen::VectorXd faces_;
};

/// Face coefficients from nodal values: arithmetic mean of neighbours on
/// interior faces, the adjacent nodal value on the two boundary faces.
Eigen::VectorXd faces_from_nodes(const Field& n);

/// div(n grad .) in flux form; rejects any n_i below `floor`.
FluxOperator weighted_divgrad_matrix(const Grid& g, const Field& n,
                                     double floor = kDefaultDensityFloor);

/// g / sqrt((x - x')^2 + eps)
double softcore(double x, double xp, double eps, double g);
/// d/dx of softcore(x, x', eps, g).
double softcore_dx(double x, double xp, double eps, double g);

}  // namespace tdlab
