#include "mfnet/linalg.hpp"

#include <cmath>

namespace mfnet::linalg {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix sym_apply(const Matrix& a, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector vals = es.eigenvalues().unaryExpr(f);
  const Matrix& v = es.eigenvectors();
  return symmetrize(v * vals.asDiagonal() * v.transpose());
}

Matrix sym_log(const Matrix& a) {
  return sym_apply(a, [](double x) { return std::log(std::max(x, kEigenFloor)); });
}

Matrix sym_exp(const Matrix& a) {
  return sym_apply(a, [](double x) { return std::exp(x); });
}

Matrix sym_sqrt(const Matrix& a) {
  return sym_apply(a, [](double x) { return std::sqrt(std::max(x, kEigenFloor)); });
}

Matrix sym_pow(const Matrix& a, double t) {
  return sym_apply(a, [t](double x) { return std::pow(std::max(x, kEigenFloor), t); });
}

Matrix clamp_spectrum(const Matrix& a, double floor) {
  return sym_apply(symmetrize(a), [floor](double x) { return std::max(x, floor); });
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

bool polar_orthonormalize(const Matrix& a, Matrix& out, double rel_rank_tol) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0) || s(s.size() - 1) < rel_rank_tol * s(0)) {
    return false;
  }
  out = svd.matrixU() * svd.matrixV().transpose();
  return true;
}

Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  Matrix g = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

Matrix random_rotation(int n, std::mt19937_64& rng) {
  Matrix q = random_orthogonal(n, rng);
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return q;
}

}  // namespace mfnet::linalg
