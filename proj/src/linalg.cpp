#include "coprosim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coprosim/kernels.hpp"
#include "coprosim/rng.hpp"

namespace coprosim {

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> r) {
  Mat m(r.size(), r.size() ? r.begin()->size() : 0);
  std::size_t i = 0;
  for (const auto& row : r) {
    if (row.size() != m.cols)
      throw DimensionError("from_rows: ragged initializer");
    std::copy(row.begin(), row.end(), m.row(i++));
  }
  return m;
}

namespace linalg {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}
}  // namespace

Vec matvec(const Mat& a, const Vec& x) {
  require(a.cols == x.size(), "matvec: cols != x.size");
  Vec y(a.rows);
  kernels::matvec(a.a.data(), a.rows, a.cols, x.data(), y.data());
  return y;
}

Vec matvec_t(const Mat& a, const Vec& x) {
  require(a.rows == x.size(), "matvec_t: rows != x.size");
  Vec y(a.cols);
  kernels::matvec_t(a.a.data(), a.rows, a.cols, x.data(), y.data());
  return y;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols == b.rows, "matmul: inner dims differ");
  Mat c(a.rows, b.cols);
  // C[i,:] += A[i,k] * B[k,:] keeps the inner loop on contiguous rows.
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k)
      kernels::axpy(a(i, k), b.row(k), c.row(i), b.cols);
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  require(a.rows == b.rows, "matmul_tn: row counts differ");
  Mat c(a.cols, b.cols);
  // A^T B = sum_r outer(a_row_r, b_row_r): one rank-1 accumulation per sample.
  for (std::size_t r = 0; r < a.rows; ++r)
    kernels::outer_acc(1.0, a.row(r), a.cols, b.row(r), b.cols, c.a.data());
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Mat add(const Mat& a, const Mat& b) {
  require(a.same_shape(b), "add: shape mismatch");
  Mat c = a;
  kernels::axpy(1.0, b.a.data(), c.a.data(), c.a.size());
  return c;
}

Mat sub(const Mat& a, const Mat& b) {
  require(a.same_shape(b), "sub: shape mismatch");
  Mat c = a;
  kernels::axpy(-1.0, b.a.data(), c.a.data(), c.a.size());
  return c;
}

Mat scaled(const Mat& a, double s) {
  Mat c(a.rows, a.cols);
  kernels::axpy(s, a.a.data(), c.a.data(), c.a.size());
  return c;
}

void add_inplace(Mat& a, const Mat& b, double s) {
  require(a.same_shape(b), "add_inplace: shape mismatch");
  kernels::axpy(s, b.a.data(), a.a.data(), a.a.size());
}

Mat outer(const Vec& u, const Vec& v) {
  Mat c(u.size(), v.size());
  kernels::outer_acc(1.0, u.data(), u.size(), v.data(), v.size(), c.a.data());
  return c;
}

Mat symmetrized(const Mat& a) {
  require(a.rows == a.cols, "symmetrized: not square");
  Mat s(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

double frob_norm(const Mat& a) {
  return std::sqrt(kernels::dot(a.a.data(), a.a.data(), a.a.size()));
}

double inf_norm(const Mat& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += std::fabs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i)
    best = std::max(best, std::fabs(a.a[i] - b.a[i]));
  return best;
}

double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  return kernels::dot(a.data(), b.data(), a.size());
}

double norm2(const Vec& a) {
  return std::sqrt(kernels::dot(a.data(), a.data(), a.size()));
}

void axpy(double alpha, const Vec& x, Vec& y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  kernels::axpy(alpha, x.data(), y.data(), x.size());
}

Mat cholesky(const Mat& a) {
  require(a.rows == a.cols, "cholesky: not square");
  const std::size_t n = a.rows;
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - kernels::dot(l.row(j), l.row(j), j);
    if (!(d > 0.0))  // also rejects NaN
      throw SingularMatrixError("cholesky: matrix not positive definite at pivot " +
                                std::to_string(j));
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - kernels::dot(l.row(i), l.row(j), j)) / l(j, j);
  }
  return l;
}

namespace {

Vec chol_solve(const Mat& l, const Vec& b) {
  const std::size_t n = l.rows;
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (b[i] - kernels::dot(l.row(i), y.data(), i)) / l(i, i);
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

}  // namespace

Vec solve_spd(const Mat& a, const Vec& b) {
  require(a.rows == b.size(), "solve_spd: rhs length mismatch");
  return chol_solve(cholesky(a), b);
}

Mat solve_spd(const Mat& a, const Mat& b) {
  require(a.rows == b.rows, "solve_spd: rhs row mismatch");
  const Mat l = cholesky(a);
  Mat x(b.rows, b.cols);
  Vec col(b.rows);
  for (std::size_t j = 0; j < b.cols; ++j) {
    for (std::size_t i = 0; i < b.rows; ++i) col[i] = b(i, j);
    Vec xc = chol_solve(l, col);
    for (std::size_t i = 0; i < b.rows; ++i) x(i, j) = xc[i];
  }
  return x;
}

Lu lu_factor(const Mat& a) {
  require(a.rows == a.cols, "lu_factor: not square");
  const std::size_t n = a.rows;
  Lu f{a, std::vector<std::size_t>(n)};
  Mat& m = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(m(i, k)) > std::fabs(m(p, k))) p = i;
    if (m(p, k) == 0.0)
      throw SingularMatrixError("lu_factor: singular at column " +
                                std::to_string(k));
    f.piv[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
    for (std::size_t i = k + 1; i < n; ++i) {
      m(i, k) /= m(k, k);
      kernels::axpy(-m(i, k), m.row(k) + k + 1, m.row(i) + k + 1, n - k - 1);
    }
  }
  return f;
}

Vec lu_solve(const Lu& f, const Vec& b) {
  const std::size_t n = f.lu.rows;
  require(b.size() == n, "lu_solve: rhs length mismatch");
  Vec x = b;
  for (std::size_t k = 0; k < n; ++k) std::swap(x[k], x[f.piv[k]]);
  for (std::size_t i = 1; i < n; ++i)
    x[i] -= kernels::dot(f.lu.row(i), x.data(), i);
  for (std::size_t ii = n; ii-- > 0;) {
    x[ii] -= kernels::dot(f.lu.row(ii) + ii + 1, x.data() + ii + 1, n - ii - 1);
    x[ii] /= f.lu(ii, ii);
  }
  return x;
}

Mat inverse(const Mat& a) {
  const Lu f = lu_factor(a);
  const std::size_t n = a.rows;
  Mat inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vec col = lu_solve(f, e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

double condition_inf(const Mat& a) { return inf_norm(a) * inf_norm(inverse(a)); }

Vec solve_checked(const Mat& a, const Vec& b, double cond_cap) {
  const Lu f = lu_factor(a);
  // Reuse the factorization for the inverse-norm estimate.
  const std::size_t n = a.rows;
  Mat inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vec col = lu_solve(f, e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  const double cond = inf_norm(a) * inf_norm(inv);
  if (!(cond <= cond_cap))
    throw SingularMatrixError("solve_checked: condition estimate " +
                              std::to_string(cond) + " exceeds cap");
  return lu_solve(f, b);
}

Mat solve_checked(const Mat& a, const Mat& b, double cond_cap) {
  const double cond = condition_inf(a);
  if (!(cond <= cond_cap))
    throw SingularMatrixError("solve_checked: condition estimate " +
                              std::to_string(cond) + " exceeds cap");
  const Lu f = lu_factor(a);
  Mat x(b.rows, b.cols);
  Vec col(b.rows);
  for (std::size_t j = 0; j < b.cols; ++j) {
    for (std::size_t i = 0; i < b.rows; ++i) col[i] = b(i, j);
    Vec xc = lu_solve(f, col);
    for (std::size_t i = 0; i < b.rows; ++i) x(i, j) = xc[i];
  }
  return x;
}

Mat least_squares(const Mat& a, const Mat& b, double cond_cap) {
  require(a.rows == b.rows, "least_squares: sample counts differ");
  if (a.rows < a.cols)
    throw DataError("least_squares: fewer samples than regressors");
  const Mat gram = matmul_tn(a, a);
  try {
    const double cond = condition_inf(gram);
    if (!(cond <= cond_cap))
      throw SingularMatrixError("ill-conditioned");
    return solve_spd(gram, matmul_tn(a, b));
  } catch (const SingularMatrixError&) {
    throw DataError("least_squares: regressors are rank-deficient or nearly so");
  }
}

double spectral_radius_estimate(const Mat& a, int iters) {
  require(a.rows == a.cols, "spectral_radius_estimate: not square");
  if (a.rows == 0) return 0.0;
  Rng rng(0x5eedULL ^ (a.rows << 16) ^ a.cols);
  Vec v(a.rows);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  double nv = norm2(v);
  if (nv == 0.0) v[0] = nv = 1.0;
  for (auto& x : v) x /= nv;
  // Gelfand: |A^k v|^(1/k) -> rho; averaging log growth over the tail of the
  // iteration smooths the oscillation from complex eigenvalue pairs.
  double log_sum = 0.0;
  int tail = 0;
  const int burn = iters / 3;
  for (int k = 0; k < iters; ++k) {
    Vec w = matvec(a, v);
    double nw = norm2(w);
    if (nw == 0.0) return 0.0;  // v landed in the kernel; radius est. moot
    if (k >= burn) {
      log_sum += std::log(nw);
      ++tail;
    }
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / nw;
  }
  return std::exp(log_sum / std::max(tail, 1));
}

}  // namespace linalg
}  // namespace coprosim
