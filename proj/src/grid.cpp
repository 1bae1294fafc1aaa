#include "tdlab/grid.hpp"

#include <cmath>
#include <sstream>

namespace tdlab {

Field Grid::nodes() const {
  Field x(M);
  for (int i = 0; i < M; ++i) x[i] = this->x(i);
  return x;
}

double Grid::l2_norm(const Field& f) const { return std::sqrt(f.squaredNorm() * h()); }

Grid build_grid(double a, double b, int M) {
  if (!(std::isfinite(a) && std::isfinite(b)) || !(b > a)) {
    std::ostringstream os;
    os << "grid: require b > a (got a=" << a << ", b=" << b << ")";
    throw ConfigError(os.str());
  }
  if (M < 3) {
    std::ostringstream os;
    os << "grid.M: at least 3 interior points are required (got M=" << M << ")";
    throw ConfigError(os.str());
  }
  return Grid{a, b, M};
}

Field TaylorField::evaluate(double t) const {
  if (coeffs.empty()) throw ConfigError("TaylorField: no coefficients");
  const double dt = t - t0;
  Field out = Field::Zero(coeffs.front().size());
  double w = 1.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (k > 0) w *= dt / static_cast<double>(k);
    out += w * coeffs[k];
  }
  return out;
}

TaylorField TaylorField::shifted(double t) const {
  TaylorField out;
  out.t0 = t;
  const double dt = t - t0;
  const int K = order();
  out.coeffs.reserve(coeffs.size());
  for (int l = 0; l <= K; ++l) {
    Field c = Field::Zero(coeffs[l].size());
    double w = 1.0;
    for (int m = l; m <= K; ++m) {
      if (m > l) w *= dt / static_cast<double>(m - l);
      c += w * coeffs[m];
    }
    out.coeffs.push_back(std::move(c));
  }
  return out;
}

TaylorField TaylorField::truncated(int K) const {
  TaylorField out;
  out.t0 = t0;
  for (int k = 0; k <= K && k <= order(); ++k) out.coeffs.push_back(coeffs[k]);
  return out;
}

bool all_finite(const Field& f) { return f.allFinite(); }

void require_finite(const Field& f, const char* what) {
  if (!f.allFinite()) throw NumericalError("finite-check", std::string(what) + " contains NaN/Inf");
}

Field gradient(const Grid& g, const Field& f) {
  const int M = g.M;
  if (f.size() != M) throw ConfigError("gradient: field size does not match grid");
  Field out(M);
  const double inv2h = 0.5 / g.h();
  for (int i = 0; i < M; ++i) {
    const double left = i > 0 ? f[i - 1] : 0.0;
    const double right = i + 1 < M ? f[i + 1] : 0.0;
    out[i] = (right - left) * inv2h;
  }
  return out;
}

Field divergence(const Grid& g, const Field& f) { return gradient(g, f); }

FluxOperator::FluxOperator(Grid grid, Eigen::VectorXd faces)
    : grid_(grid), faces_(std::move(faces)) {
  if (faces_.size() != grid_.M + 1)
    throw ConfigError("FluxOperator: expected M+1 face coefficients");
}

Field FluxOperator::apply(const Field& v) const {
  const int M = grid_.M;
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  Field out(M);
  for (int i = 0; i < M; ++i) {
    const double left = i > 0 ? v[i - 1] : 0.0;
    const double right = i + 1 < M ? v[i + 1] : 0.0;
    out[i] = (faces_[i + 1] * (right - v[i]) - faces_[i] * (v[i] - left)) * inv_h2;
  }
  return out;
}

Eigen::SparseMatrix<double> FluxOperator::matrix() const {
  const int M = grid_.M;
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * M);
  for (int i = 0; i < M; ++i) {
    t.emplace_back(i, i, -(faces_[i] + faces_[i + 1]) * inv_h2);
    if (i > 0) t.emplace_back(i, i - 1, faces_[i] * inv_h2);
    if (i + 1 < M) t.emplace_back(i, i + 1, faces_[i + 1] * inv_h2);
  }
  Eigen::SparseMatrix<double> A(M, M);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Eigen::MatrixXd FluxOperator::dense() const { return Eigen::MatrixXd(matrix()); }

Field FluxOperator::diagonal() const {
  const int M = grid_.M;
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  Field d(M);
  for (int i = 0; i < M; ++i) d[i] = -(faces_[i] + faces_[i + 1]) * inv_h2;
  return d;
}

double FluxOperator::bilinear(const Field& u, const Field& w) const {
  const int M = grid_.M;
  const double h = grid_.h();
  double acc = 0.0;
  for (int f = 0; f <= M; ++f) {
    const double du = (f < M ? u[f] : 0.0) - (f > 0 ? u[f - 1] : 0.0);
    const double dw = (f < M ? w[f] : 0.0) - (f > 0 ? w[f - 1] : 0.0);
    acc += faces_[f] * du * dw;
  }
  return acc / h;
}

Eigen::VectorXd faces_from_nodes(const Field& n) {
  const Eigen::Index M = n.size();
  Eigen::VectorXd c(M + 1);
  c[0] = n[0];
  c[M] = n[M - 1];
  for (Eigen::Index f = 1; f < M; ++f) c[f] = 0.5 * (n[f - 1] + n[f]);
  return c;
}

FluxOperator weighted_divgrad_matrix(const Grid& g, const Field& n, double floor) {
  if (n.size() != g.M) throw ConfigError("weighted_divgrad_matrix: field size does not match grid");
  require_finite(n, "density coefficient");
  Eigen::Index imin = 0;
  const double m = n.minCoeff(&imin);
  if (m < floor) {
    std::ostringstream os;
    os << "density floor violated: n[" << imin << "] = " << m << " < m_floor = " << floor;
    throw NumericalError("density-floor", os.str());
  }
  return FluxOperator(g, faces_from_nodes(n));
}

double softcore(double x, double xp, double eps, double g) {
  if (!(eps > 0.0)) throw ConfigError("softcore: epsilon must be > 0 (bare Coulomb is not smooth)");
  const double r = x - xp;
  return g / std::sqrt(r * r + eps);
}

double softcore_dx(double x, double xp, double eps, double g) {
  if (!(eps > 0.0)) throw ConfigError("softcore: epsilon must be > 0 (bare Coulomb is not smooth)");
  const double r = x - xp;
  const double s = r * r + eps;
  return -g * r / (s * std::sqrt(s));
}

}  // namespace tdlab
