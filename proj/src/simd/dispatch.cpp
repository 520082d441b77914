#include <atomic>
#include <cstdlib>
#include <string>

#include "mfhpo/simd.hpp"

namespace mfhpo::simd {

namespace {

struct KernelTable {
  double (*dot)(std::span<const double>, std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  void (*gemv)(std::span<const double>, std::size_t, std::size_t, std::span<const double>,
               std::span<double>);
  double (*wsq)(std::span<const double>, std::span<const double>, std::span<const double>);
};

constexpr KernelTable kScalar{&scalar::dot, &scalar::axpy, &scalar::gemv,
                              &scalar::weighted_sqdist};
constexpr KernelTable kAvx2{&avx2::dot, &avx2::axpy, &avx2::gemv, &avx2::weighted_sqdist};

Isa initial_isa() {
  if (const char* env = std::getenv("MFHPO_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  return detected_isa();
}

std::atomic<const KernelTable*>& table() {
  static std::atomic<const KernelTable*> t{initial_isa() == Isa::avx2 ? &kAvx2 : &kScalar};
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() { return avx2::supported() ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return table().load() == &kAvx2 ? Isa::avx2 : Isa::scalar; }

Isa set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2::supported()) isa = Isa::scalar;
  table().store(isa == Isa::avx2 ? &kAvx2 : &kScalar);
  return isa;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return table().load(std::memory_order_relaxed)->dot(a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  table().load(std::memory_order_relaxed)->axpy(alpha, x, y);
}

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  table().load(std::memory_order_relaxed)->gemv(w, rows, cols, x, y);
}

double weighted_sqdist(std::span<const double> a, std::span<const double> b,
                       std::span<const double> scale) {
  return table().load(std::memory_order_relaxed)->wsq(a, b, scale);
}

}  // namespace mfhpo::simd
