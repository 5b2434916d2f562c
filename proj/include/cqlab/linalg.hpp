#pragma once

#include <vector>

#include "cqlab/common.hpp"

namespace cqlab {

/// Dense row-major complex matrix. Sizes in this project are tiny (the
/// Runge-Kutta stage count, m <= 3), so everything below is written for
/// robustness rather than scale.
class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols) {}

  static Mat identity(int n);
  static Mat diag(const std::vector<cplx>& d);
  static Mat outer(const std::vector<cplx>& u, const std::vector<cplx>& v);  // u v^T

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  cplx& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  const cplx& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(cplx s);

  Mat adjoint() const;
  Mat transpose() const;

  double frobenius_norm() const;
  double max_abs() const;

  const cplx* data() const { return a_.data(); }
  cplx* data() { return a_.data(); }

 private:
  int rows_, cols_;
  std::vector<cplx> a_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(cplx s, Mat a);
std::vector<cplx> operator*(const Mat& a, const std::vector<cplx>& x);

/// Solves A X = B by LU with partial pivoting. Throws numerical_error on a
/// (numerically) singular pivot.
Mat lu_solve(Mat a, Mat b);
std::vector<cplx> lu_solve(const Mat& a, const std::vector<cplx>& b);
Mat inverse(const Mat& a);

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic complex Jacobi.
/// The input is symmetrised as (A + A^H)/2 first.
std::vector<double> hermitian_eigenvalues(const Mat& a);

struct SchurResult {
  Mat q;  // unitary
  Mat t;  // upper triangular, A = Q T Q^H
};

/// Complex Schur decomposition (Householder Hessenberg reduction followed by
/// shifted QR with deflation).
SchurResult schur_decompose(const Mat& a);

struct EigResult {
  std::vector<cplx> values;
  Mat vectors;           // columns are right eigenvectors
  double vector_cond;    // Frobenius condition estimate of the eigenvector matrix
};

EigResult eig_decompose(const Mat& a);

struct MatFunctionOptions {
  double cond_limit = 1e6;  // diagonalisation accepted below this eigenvector condition
  // Largest radius around a point at which scalar derivatives of f may be
  // sampled (analyticity margin). Negative return refuses the point.
  std::function<double(cplx)> safe_radius;
};

/// f(A) for scalar analytic f: diagonalisation when the eigenvector basis is
/// well conditioned, otherwise Schur form with a block Parlett substitution
/// (Taylor expansion on clustered diagonal blocks).
Mat matrix_function(const Mat& a, const std::function<cplx(cplx)>& f,
                    const MatFunctionOptions& opts = {});

}  // namespace cqlab
