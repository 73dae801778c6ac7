#pragma once

#include <cstddef>

/// Inner-loop kernels shared by the whole toolkit.
///
/// Everything numeric in the library (network forward/backward passes, Kalman
/// algebra, Volterra convolutions, band-power projections, plant updates)
/// bottoms out in the six primitives below. Each primitive has a scalar
/// reference implementation and, on x86-64, an AVX2/FMA variant; the active
/// backend is chosen once at startup (CPU detection, overridable via the
/// COPROSIM_KERNELS environment variable or set_backend) and dispatched
/// through a function table. Vector variants may reassociate additions, so
/// they agree with the scalar reference to rounding, not bit-for-bit; the
/// equivalence tests pin the tolerance.
namespace coprosim::kernels {

enum class Backend { scalar = 0, avx2 = 1 };

/// Backend currently routing the primitives.
Backend active_backend();

/// True if `b` can run on this machine (scalar always can).
bool backend_supported(Backend b);

/// Routes all primitives through `b`; throws std::invalid_argument when the
/// backend is unsupported on this CPU.
void set_backend(Backend b);

const char* backend_name(Backend b);

/// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

/// sum_i a[i] * b[n - 1 - i]  (dot against a reversed window; discrete
/// convolution of a kernel with the most recent history bins)
double dot_rev(const double* a, const double* b, std::size_t n);

/// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// y = A x with A row-major (rows x cols), y length rows.
void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y);

/// y = A^T x with A row-major (rows x cols), x length rows, y length cols.
void matvec_t(const double* a, std::size_t rows, std::size_t cols,
              const double* x, double* y);

/// A += alpha * u v^T with A row-major (m x n).
void outer_acc(double alpha, const double* u, std::size_t m, const double* v,
               std::size_t n, double* a);

}  // namespace coprosim::kernels
