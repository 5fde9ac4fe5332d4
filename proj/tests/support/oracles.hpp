#pragma once

// Reference computations for the tests. Everything here is written from the
// defining formulas with dense linear algebra and never calls the library's
// own solvers, retractions or gradients.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

// Left singular vectors of a full-column-rank matrix span its range.
inline Matrix range_basis(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  return svd.matrixU();
}

inline Matrix projector(const Matrix& basis) { return basis * basis.transpose(); }

// Principal angles between two orthonormal bases, ascending.
inline Vector principal_angles(const Matrix& a, const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(a.transpose() * b);
  Vector s = svd.singularValues().cwiseMin(1.0);
  Vector out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) out(i) = std::acos(s(i));
  return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector colvec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

// Symmetric inverse square root through the eigendecomposition.
inline Matrix inv_sqrt_sym(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

// Least squares by normal equations.
inline Vector normal_solve(const Matrix& a, const Vector& b) {
  return (a.transpose() * a).ldlt().solve(a.transpose() * b);
}

// Fourth-order central difference of a scalar function at 0.
inline double derivative(const std::function<double(double)>& f, double h = 1e-4) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

// BN network output straight from its definition.
inline double bn_forward(const Matrix& theta, const Vector& a, const Matrix& v, const Vector& mu,
                         const Vector& x) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < theta.rows(); ++j) {
    const Vector t = theta.row(j).transpose();
    s += a(j) * relu(t.dot(x - mu) / std::sqrt(t.dot(v * t)));
  }
  return s / std::sqrt(static_cast<double>(theta.rows()));
}

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rngd_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace oracle
