#pragma once

#include <cstddef>

namespace coprosim::kernels {

/// Dispatch table: one entry per primitive. Each backend fills a complete
/// table (composite primitives call their own backend's dot/axpy so a table
/// is internally consistent).
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*dot_rev)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*,
                 double*);
  void (*matvec_t)(const double*, std::size_t, std::size_t, const double*,
                   double*);
  void (*outer_acc)(double, const double*, std::size_t, const double*,
                    std::size_t, double*);
};

const KernelTable& scalar_table();

/// nullptr when the binary was built without AVX2 support (non-x86 targets);
/// runtime CPU capability is checked separately by the dispatcher.
const KernelTable* avx2_table();

}  // namespace coprosim::kernels
