// Backend selection. Runs once on first use: prefer AVX2 when the CPU has it
// (and the build produced the table), honor a COPROSIM_KERNELS=scalar|avx2
// override, fall back to scalar otherwise.

#include "coprosim/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "kernel_table.hpp"

namespace coprosim::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &scalar_table();
    case Backend::avx2:
      return cpu_has_avx2() ? avx2_table() : nullptr;
  }
  return nullptr;
}

Backend pick_default() {
  if (const char* env = std::getenv("COPROSIM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && table_for(Backend::avx2))
      return Backend::avx2;
    // Unknown or unsupported request: fall through to detection rather than
    // abort; scenario runs record the backend actually used.
  }
  return table_for(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

struct Dispatch {
  std::atomic<const KernelTable*> table;
  std::atomic<Backend> backend;
  Dispatch() {
    Backend b = pick_default();
    backend.store(b);
    table.store(table_for(b));
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

const KernelTable& active() { return *dispatch().table.load(); }

}  // namespace

Backend active_backend() { return dispatch().backend.load(); }

bool backend_supported(Backend b) { return table_for(b) != nullptr; }

void set_backend(Backend b) {
  const KernelTable* t = table_for(b);
  if (!t)
    throw std::invalid_argument(std::string("kernel backend unsupported: ") +
                                backend_name(b));
  dispatch().backend.store(b);
  dispatch().table.store(t);
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "?";
}

double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}

double dot_rev(const double* a, const double* b, std::size_t n) {
  return active().dot_rev(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}

void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y) {
  active().matvec(a, rows, cols, x, y);
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols,
              const double* x, double* y) {
  active().matvec_t(a, rows, cols, x, y);
}

void outer_acc(double alpha, const double* u, std::size_t m, const double* v,
               std::size_t n, double* a) {
  active().outer_acc(alpha, u, m, v, n, a);
}

}  // namespace coprosim::kernels
