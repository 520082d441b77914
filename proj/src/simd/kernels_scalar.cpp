#include "mfhpo/simd.hpp"

namespace mfhpo::simd::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot(w.subspan(r * cols, cols), x);
  }
}

double weighted_sqdist(std::span<const double> a, std::span<const double> b,
                       std::span<const double> scale) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += scale[i] * d * d;
  }
  return s;
}

}  // namespace mfhpo::simd::scalar
