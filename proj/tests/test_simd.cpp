#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfhpo/rng.hpp"
#include "mfhpo/simd.hpp"

using namespace mfhpo;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!simd::avx2::supported()) return;
    Rng rng(7);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 33u, 100u}) {
      const auto a = random_vec(rng, n), b = random_vec(rng, n);
      auto s = random_vec(rng, n);
      for (double& x : s) x = std::abs(x);
      CHECK(close(simd::scalar::dot(a, b), simd::avx2::dot(a, b)));
      CHECK(close(simd::scalar::weighted_sqdist(a, b, s), simd::avx2::weighted_sqdist(a, b, s)));
      auto y1 = random_vec(rng, n);
      auto y2 = y1;
      simd::scalar::axpy(0.37, a, y1);
      simd::avx2::axpy(0.37, a, y2);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));
    }
    for (std::size_t rows : {1u, 3u, 8u, 13u}) {
      for (std::size_t cols : {1u, 4u, 6u, 17u}) {
        const auto w = random_vec(rng, rows * cols), x = random_vec(rng, cols);
        std::vector<double> y1(rows), y2(rows);
        simd::scalar::gemv(w, rows, cols, x, y1);
        simd::avx2::gemv(w, rows, cols, x, y2);
        for (std::size_t i = 0; i < rows; ++i) CHECK(close(y1[i], y2[i]));
      }
    }
  }

  TEST_CASE("dispatch honours the override") {
    const auto before = simd::active_isa();
    CHECK(simd::set_active_isa(simd::Isa::scalar) == simd::Isa::scalar);
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    CHECK(simd::dot(a, b) == 32.0);
    simd::set_active_isa(before);
    CHECK(simd::dot(a, b) == 32.0);
  }

  TEST_CASE("scalar gemv matches a hand product") {
    const std::vector<double> w{1, 2, 3, 4, 5, 6}, x{1, 0, -1};
    std::vector<double> y(2);
    simd::gemv(w, 2, 3, x, y);
    CHECK(y[0] == -2.0);
    CHECK(y[1] == -2.0);
  }
}
