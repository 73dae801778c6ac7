// Scalar reference kernels. These are the semantic ground truth: the AVX2
// variants are tested for agreement against these loops, and any future
// backend must match them to rounding.

#include "kernel_table.hpp"

namespace coprosim::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot_rev_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[n - 1 - i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot_scalar(a + i * cols, x, cols);
}

void matvec_t_scalar(const double* a, std::size_t rows, std::size_t cols,
                     const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) axpy_scalar(x[i], a + i * cols, y, cols);
}

void outer_acc_scalar(double alpha, const double* u, std::size_t m,
                      const double* v, std::size_t n, double* a) {
  for (std::size_t i = 0; i < m; ++i) axpy_scalar(alpha * u[i], v, a + i * n, n);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {dot_scalar,    dot_rev_scalar,
                                    axpy_scalar,   matvec_scalar,
                                    matvec_t_scalar, outer_acc_scalar};
  return table;
}

}  // namespace coprosim::kernels
