#pragma once

// Small dense helpers shared by the manifold implementations. Matrix
// functions of symmetric matrices go through a symmetric eigendecomposition.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>

namespace mfnet::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kEigenFloor = 1e-10;

Matrix symmetrize(const Matrix& a);

// V f(Λ) Vᵀ for symmetric a.
Matrix sym_apply(const Matrix& a, const std::function<double(double)>& f);

Matrix sym_log(const Matrix& a);
Matrix sym_exp(const Matrix& a);
Matrix sym_sqrt(const Matrix& a);
Matrix sym_pow(const Matrix& a, double t);

// Clamp eigenvalues of the symmetric part to >= floor.
Matrix clamp_spectrum(const Matrix& a, double floor = kEigenFloor);

double min_eigenvalue(const Matrix& a);
bool all_finite(const Matrix& a);

// Nearest matrix with orthonormal columns (polar factor U Vᵀ of the thin
// SVD). Returns false if the smallest singular value is below
// rel_rank_tol * largest.
bool polar_orthonormalize(const Matrix& a, Matrix& out,
                          double rel_rank_tol = 1e-10);

// Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix).
Matrix random_orthogonal(int n, std::mt19937_64& rng);
// As above, with determinant +1.
Matrix random_rotation(int n, std::mt19937_64& rng);
Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng);

}  // namespace mfnet::linalg
