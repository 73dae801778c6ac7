// Kernel correctness: every primitive against a naive loop written here (the
// oracle never calls into the library), plus scalar/AVX2 cross-backend
// agreement. Vector backends may reassociate sums, so agreement is checked to
// a rounding tolerance rather than bit-for-bit.

#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "coprosim/kernels.hpp"
#include "coprosim/rng.hpp"

namespace k = coprosim::kernels;
using coprosim::Rng;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// Independent reference implementations.
double ref_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double ref_dot_rev(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[n - 1 - i];
  return s;
}

bool close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * (1.0 + std::fabs(a) + std::fabs(b));
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 13, 16, 31, 32, 33, 64, 100, 257};

struct BackendGuard {
  k::Backend saved = k::active_backend();
  ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("dot and dot_rev match naive loops on the active backend") {
  Rng rng(101);
  for (std::size_t n : kSizes) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    CHECK(close(k::dot(a.data(), b.data(), n), ref_dot(a, b), 1e-11));
    CHECK(close(k::dot_rev(a.data(), b.data(), n), ref_dot_rev(a, b), 1e-11));
  }
}

TEST_CASE("dot_rev equals dot against the explicitly reversed vector") {
  Rng rng(102);
  for (std::size_t n : {1u, 5u, 64u, 129u}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    std::vector<double> br(b.rbegin(), b.rend());
    CHECK(close(k::dot_rev(a.data(), b.data(), n), k::dot(a.data(), br.data(), n),
                1e-12));
  }
}

TEST_CASE("axpy accumulates in place") {
  Rng rng(103);
  for (std::size_t n : kSizes) {
    auto x = random_vec(rng, n);
    auto y = random_vec(rng, n);
    auto expect = y;
    const double alpha = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) expect[i] += alpha * x[i];
    k::axpy(alpha, x.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(y[i], expect[i], 1e-13));
  }
}

TEST_CASE("matvec and matvec_t match triple loops") {
  Rng rng(104);
  for (std::size_t rows : {1u, 3u, 8u, 17u}) {
    for (std::size_t cols : {1u, 4u, 9u, 33u}) {
      auto a = random_vec(rng, rows * cols);
      auto x = random_vec(rng, cols);
      auto xt = random_vec(rng, rows);

      std::vector<double> y(rows), yt(cols, 0.0);
      k::matvec(a.data(), rows, cols, x.data(), y.data());
      k::matvec_t(a.data(), rows, cols, xt.data(), yt.data());

      for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
        CHECK(close(y[i], s, 1e-12));
      }
      for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += a[i * cols + j] * xt[i];
        CHECK(close(yt[j], s, 1e-12));
      }
    }
  }
}

TEST_CASE("outer_acc accumulates a rank-1 update") {
  Rng rng(105);
  const std::size_t m = 7, n = 11;
  auto u = random_vec(rng, m);
  auto v = random_vec(rng, n);
  auto a = random_vec(rng, m * n);
  auto expect = a;
  const double alpha = -1.25;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) expect[i * n + j] += alpha * u[i] * v[j];
  k::outer_acc(alpha, u.data(), m, v.data(), n, a.data());
  for (std::size_t i = 0; i < m * n; ++i) CHECK(close(a[i], expect[i], 1e-13));
}

TEST_CASE("scalar and avx2 backends agree to rounding") {
  if (!k::backend_supported(k::Backend::avx2)) {
    MESSAGE("avx2 unavailable on this machine; cross-backend check skipped");
    return;
  }
  BackendGuard guard;
  Rng rng(106);
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 64u, 255u, 1000u}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    auto y0 = random_vec(rng, n);

    k::set_backend(k::Backend::scalar);
    const double ds = k::dot(a.data(), b.data(), n);
    const double rs = k::dot_rev(a.data(), b.data(), n);
    auto ys = y0;
    k::axpy(0.75, a.data(), ys.data(), n);

    k::set_backend(k::Backend::avx2);
    const double dv = k::dot(a.data(), b.data(), n);
    const double rv = k::dot_rev(a.data(), b.data(), n);
    auto yv = y0;
    k::axpy(0.75, a.data(), yv.data(), n);

    CHECK(close(ds, dv, 1e-11));
    CHECK(close(rs, rv, 1e-11));
    // axpy does not reassociate, but the FMA fuses mul+add into one rounding:
    // agreement to the last ulp, not bit-for-bit.
    for (std::size_t i = 0; i < n; ++i) CHECK(close(yv[i], ys[i], 1e-15));
  }

  // Matrix forms, both backends, one mid-sized shape.
  const std::size_t rows = 23, cols = 41;
  auto a = random_vec(rng, rows * cols);
  auto x = random_vec(rng, cols);
  std::vector<double> ys(rows), yv(rows);
  k::set_backend(k::Backend::scalar);
  k::matvec(a.data(), rows, cols, x.data(), ys.data());
  k::set_backend(k::Backend::avx2);
  k::matvec(a.data(), rows, cols, x.data(), yv.data());
  for (std::size_t i = 0; i < rows; ++i) CHECK(close(ys[i], yv[i], 1e-11));
}

TEST_CASE("backend selection API") {
  BackendGuard guard;
  CHECK(k::backend_supported(k::Backend::scalar));
  k::set_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  CHECK(std::string(k::backend_name(k::Backend::scalar)) == "scalar");
  CHECK(std::string(k::backend_name(k::Backend::avx2)) == "avx2");
  if (k::backend_supported(k::Backend::avx2)) {
    k::set_backend(k::Backend::avx2);
    CHECK(k::active_backend() == k::Backend::avx2);
  } else {
    CHECK_THROWS_AS(k::set_backend(k::Backend::avx2), std::invalid_argument);
  }
}

}  // TEST_SUITE
