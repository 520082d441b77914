#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels used by the model code. Every kernel has a
// scalar reference in mfhpo::simd::scalar and, on x86-64, an AVX2+FMA variant
// in mfhpo::simd::avx2. The unqualified entry points dispatch once at startup.
namespace mfhpo::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// Best ISA supported by this CPU. MFHPO_SIMD=scalar in the environment pins the
// scalar path.
Isa detected_isa();
Isa active_isa();
// Overrides dispatch for the whole process. Requesting avx2 on a CPU without it
// falls back to scalar; the return value is the ISA actually selected.
Isa set_active_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y = W x where W is row-major rows x cols; y.size() == rows, x.size() == cols.
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
// sum_j scale_j * (a_j - b_j)^2
double weighted_sqdist(std::span<const double> a, std::span<const double> b,
                       std::span<const double> scale);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
double weighted_sqdist(std::span<const double> a, std::span<const double> b,
                       std::span<const double> scale);
}  // namespace scalar

namespace avx2 {
bool supported();
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
double weighted_sqdist(std::span<const double> a, std::span<const double> b,
                       std::span<const double> scale);
}  // namespace avx2

}  // namespace mfhpo::simd
