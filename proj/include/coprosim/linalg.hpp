#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "coprosim/errors.hpp"

namespace coprosim {

using Vec = std::vector<double>;

/// Dense row-major matrix. Sized for the models in this toolkit (state
/// dimensions in the tens, layer widths in the hundreds); everything is
/// value-semantic and allocation is not hidden.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  static Mat identity(std::size_t n);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> r);
};

namespace linalg {

Vec matvec(const Mat& a, const Vec& x);
Vec matvec_t(const Mat& a, const Vec& x);  // A^T x
Mat matmul(const Mat& a, const Mat& b);
Mat matmul_tn(const Mat& a, const Mat& b);  // A^T B
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scaled(const Mat& a, double s);
void add_inplace(Mat& a, const Mat& b, double s = 1.0);  // a += s*b
Mat outer(const Vec& u, const Vec& v);
Mat symmetrized(const Mat& a);  // (A + A^T) / 2

double frob_norm(const Mat& a);
double inf_norm(const Mat& a);  // max row sum of |a_ij|
double max_abs_diff(const Mat& a, const Mat& b);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
void axpy(double alpha, const Vec& x, Vec& y);

/// Cholesky factor L (lower), A = L L^T. Throws SingularMatrixError when A
/// is not numerically positive definite.
Mat cholesky(const Mat& a);
Vec solve_spd(const Mat& a, const Vec& b);
Mat solve_spd(const Mat& a, const Mat& b);

/// LU with partial pivoting for general square systems.
struct Lu {
  Mat lu;
  std::vector<std::size_t> piv;
};
Lu lu_factor(const Mat& a);  // throws SingularMatrixError on exact breakdown
Vec lu_solve(const Lu& f, const Vec& b);
Mat inverse(const Mat& a);

/// inf-norm condition estimate |A| * |A^-1|; +inf is never returned (a
/// singular A throws from the factorization instead).
double condition_inf(const Mat& a);

/// Solves A x = b but refuses ill-conditioned systems (cond > cap) with
/// SingularMatrixError; used where a silent garbage solve would corrupt a
/// filter (e.g. Kalman innovation covariance).
Vec solve_checked(const Mat& a, const Vec& b, double cond_cap = 1e12);
Mat solve_checked(const Mat& a, const Mat& b, double cond_cap = 1e12);

/// Least squares X = argmin |A X - B|_F via normal equations; throws
/// DataError when A^T A is ill-conditioned (rank-deficient regressors).
Mat least_squares(const Mat& a, const Mat& b, double cond_cap = 1e12);

/// Spectral radius estimate by power iteration with Gelfand smoothing; used
/// as a stability guard, not as a precise eigensolve.
double spectral_radius_estimate(const Mat& a, int iters = 192);

}  // namespace linalg
}  // namespace coprosim
