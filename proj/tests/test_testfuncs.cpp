#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "mfhpo/rng.hpp"
#include "mfhpo/testfuncs.hpp"

using namespace mfhpo;

namespace {

// Textbook single-fidelity forms, written independently of the library.
double branin_ref(const std::vector<double>& x) {
  const double pi = std::numbers::pi;
  const double b = 5.1 / (4 * pi * pi), c = 5 / pi, t = 1 / (8 * pi);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6;
  return u * u + 10 * (1 - t) * std::cos(x[0]) + 10;
}

double currin_ref(const std::vector<double>& x) {
  const double a = x[1] > 0 ? 1 - std::exp(-1 / (2 * x[1])) : 1.0;
  const double x1 = x[0];
  return a * (2300 * x1 * x1 * x1 + 1900 * x1 * x1 + 2092 * x1 + 60) /
         (100 * x1 * x1 * x1 + 500 * x1 * x1 + 4 * x1 + 20);
}

double hartmann_ref(const std::vector<double>& x) {
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  if (x.size() == 3) {
    static const double A[4][3] = {{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}};
    static const double P[4][3] = {{3689, 1170, 2673}, {4699, 4387, 7470}, {1091, 8732, 5547}, {381, 5743, 8828}};
    double s = 0;
    for (int i = 0; i < 4; ++i) {
      double e = 0;
      for (int j = 0; j < 3; ++j) e += A[i][j] * std::pow(x[j] - 1e-4 * P[i][j], 2);
      s += alpha[i] * std::exp(-e);
    }
    return -s;
  }
  static const double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                 {0.05, 10, 17, 0.1, 8, 14},
                                 {3, 3.5, 1.7, 10, 17, 8},
                                 {17, 8, 0.05, 10, 0.1, 14}};
  static const double P[4][6] = {{1312, 1696, 5569, 124, 8283, 5886},
                                 {2329, 4135, 8307, 3736, 1004, 9991},
                                 {2348, 1451, 3522, 2883, 3047, 6650},
                                 {4047, 8828, 8732, 5743, 1091, 381}};
  double s = 0;
  for (int i = 0; i < 4; ++i) {
    double e = 0;
    for (int j = 0; j < 6; ++j) e += A[i][j] * std::pow(x[j] - 1e-4 * P[i][j], 2);
    s += alpha[i] * std::exp(-e);
  }
  return -s;
}

double borehole_ref(const std::vector<double>& x) {
  const double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6], Kw = x[7];
  const double lr = std::log(r / rw);
  return 2 * std::numbers::pi * Tu * (Hu - Hl) / (lr * (1 + 2 * L * Tu / (lr * rw * rw * Kw) + Tu / Tl));
}

// Minimized orientation used by the library.
double reference(SyntheticId id, const std::vector<double>& x) {
  switch (id) {
    case SyntheticId::branin2: return branin_ref(x);
    case SyntheticId::currin2: return -currin_ref(x);
    case SyntheticId::hartmann3:
    case SyntheticId::hartmann6: return hartmann_ref(x);
    case SyntheticId::borehole8: return -borehole_ref(x);
  }
  return 0;
}

std::vector<double> random_point(const Box& box, Rng& rng) {
  std::vector<double> x(box.lower.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = box.lower[j] + (box.upper[j] - box.lower[j]) * uniform01(rng);
  return x;
}

// Coordinate pattern search inside the box.
double polish(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x, const Box& box) {
  double fx = f(x);
  std::vector<double> step(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) step[j] = 0.1 * (box.upper[j] - box.lower[j]);
  for (int round = 0; round < 60; ++round) {
    bool improved = false;
    for (std::size_t j = 0; j < x.size(); ++j) {
      for (const double sgn : {1.0, -1.0}) {
        auto y = x;
        y[j] = std::clamp(y[j] + sgn * step[j], box.lower[j], box.upper[j]);
        const double fy = f(y);
        if (fy < fx) {
          x = y;
          fx = fy;
          improved = true;
        }
      }
    }
    if (!improved) {
      for (double& s : step) s *= 0.5;
    }
  }
  return fx;
}

}  // namespace

TEST_CASE("full fidelity equals the textbook functions") {
  Rng rng(1);
  for (const auto id : kAllSynthetic) {
    const SyntheticFunction f(id);
    for (int i = 0; i < 200; ++i) {
      const auto x = random_point(f.box(), rng);
      const double ref = reference(id, x);
      CHECK(f(x, 1.0) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(f(x, 1.0) == f(x, 1.0));
    }
  }
}

TEST_CASE("low fidelities are finite and differ from the exact function") {
  Rng rng(2);
  for (const auto id : kAllSynthetic) {
    const SyntheticFunction f(id);
    std::size_t differ = 0;
    for (int i = 0; i < 50; ++i) {
      const auto x = random_point(f.box(), rng);
      for (const double z : {kMinFidelity, 0.1, 0.5}) {
        const double v = f(x, z);
        CHECK(std::isfinite(v));
        differ += v != f(x, 1.0);
      }
    }
    CHECK(differ > 100);
  }
}

TEST_CASE("inputs outside the box or fidelity range throw") {
  const SyntheticFunction f(SyntheticId::branin2);
  CHECK_THROWS_AS(f(std::vector<double>{11.0, 1.0}, 1.0), std::out_of_range);
  CHECK_THROWS_AS(f(std::vector<double>{1.0, 1.0}, 1e-4), std::out_of_range);
  CHECK_THROWS_AS(f(std::vector<double>{1.0}, 1.0), std::out_of_range);
}

TEST_CASE("stored optima are attained at their argmins") {
  for (const auto id : kAllSynthetic) {
    const SyntheticFunction f(id);
    const auto opt = f.known_optimum();
    for (const auto& x : opt.argmins) CHECK(f(x, 1.0) == doctest::Approx(opt.value).epsilon(1e-9));
  }
  const auto br = SyntheticFunction(SyntheticId::branin2).known_optimum();
  CHECK(br.value == doctest::Approx(0.397887).epsilon(1e-5 / 0.397887));
  CHECK(br.argmins.size() == 3);
  const auto h6 = SyntheticFunction(SyntheticId::hartmann6).known_optimum();
  CHECK(h6.value == doctest::Approx(-3.32237).epsilon(1e-4 / 3.32237));
}

TEST_CASE("small perturbations never improve on a stored optimum") {
  Rng rng(3);
  for (const auto id : kAllSynthetic) {
    const SyntheticFunction f(id);
    const auto opt = f.known_optimum();
    for (const auto& x : opt.argmins) {
      for (int i = 0; i < 2000; ++i) {
        auto y = x;
        for (std::size_t j = 0; j < y.size(); ++j) {
          const double w = f.box().upper[j] - f.box().lower[j];
          y[j] = std::clamp(y[j] + 1e-3 * w * (2 * uniform01(rng) - 1), f.box().lower[j], f.box().upper[j]);
        }
        CHECK(f(y, 1.0) >= opt.value - 1e-12);
      }
    }
  }
}

TEST_CASE("random search with polishing cannot beat the stored optima") {
  Rng rng(4);
  for (const auto id : kAllSynthetic) {
    const SyntheticFunction f(id);
    const auto fn = [&](const std::vector<double>& x) { return reference(id, x); };
    std::vector<std::pair<double, std::vector<double>>> best;
    for (int i = 0; i < 20000; ++i) {
      auto x = random_point(f.box(), rng);
      best.emplace_back(fn(x), std::move(x));
    }
    std::partial_sort(best.begin(), best.begin() + 10, best.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
    double found = INFINITY;
    for (int k = 0; k < 10; ++k) found = std::min(found, polish(fn, best[k].second, f.box()));
    const double opt = f.known_optimum().value;
    CHECK(found >= opt - 1e-9);
    CHECK(std::abs(found - opt) <= 1e-3 * std::abs(opt));
  }
}

TEST_CASE("names resolve with and without prefix") {
  CHECK(synthetic_from_name("synth:hartmann6") == SyntheticId::hartmann6);
  CHECK(synthetic_from_name("borehole8") == SyntheticId::borehole8);
  CHECK_THROWS(synthetic_from_name("rosenbrock"));
}
