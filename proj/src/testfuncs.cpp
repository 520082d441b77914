#include "mfhpo/testfuncs.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mfhpo {

namespace {

constexpr double kPi = std::numbers::pi;

double branin(std::span<const double> x, double z) {
  const double b = 5.1 / (4.0 * kPi * kPi) - 0.1 * (1.0 - z);
  const double c = 5.0 / kPi - 0.1 * (1.0 - z);
  const double t = 1.0 / (8.0 * kPi) + 0.05 * (1.0 - z);
  const double q = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double currin_exact(double x1, double x2) {
  const double damp = x2 <= 0.0 ? 1.0 : 1.0 - std::exp(-1.0 / (2.0 * x2));
  const double num = 2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0;
  const double den = 100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0;
  return damp * num / den;
}

// Xiong et al. low-fidelity Currin: average of four shifted exact evaluations.
double currin_low(double x1, double x2) {
  const double down = std::max(0.0, x2 - 0.05);
  return 0.25 * (currin_exact(x1 + 0.05, x2 + 0.05) + currin_exact(x1 + 0.05, down) +
                 currin_exact(x1 - 0.05, x2 + 0.05) + currin_exact(x1 - 0.05, down));
}

double currin(std::span<const double> x, double z) {
  return -(z * currin_exact(x[0], x[1]) + (1.0 - z) * currin_low(x[0], x[1]));
}

constexpr double kHartmannAlpha[4] = {1.0, 1.2, 3.0, 3.2};

constexpr double kHartmann3A[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0},
                                      {0.1, 10.0, 35.0}};
constexpr double kHartmann3P[4][3] = {{0.3689, 0.1170, 0.2673},
                                      {0.4699, 0.4387, 0.7470},
                                      {0.1091, 0.8732, 0.5547},
                                      {0.0381, 0.5743, 0.8828}};

constexpr double kHartmann6A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                      {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                      {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                      {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
constexpr double kHartmann6P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

template <std::size_t D>
double hartmann(const double (&a)[4][D], const double (&p)[4][D], std::span<const double> x,
                double z) {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      const double d = x[j] - p[i][j];
      inner += a[i][j] * d * d;
    }
    s += (kHartmannAlpha[i] - 0.1 * (1.0 - z)) * std::exp(-inner);
  }
  return -s;
}

// Inputs: rw, r, Tu, Hu, Tl, Hl, L, Kw.
double borehole(std::span<const double> x, double z) {
  const double rw = x[0], r = x[1], tu = x[2], hu = x[3], tl = x[4], hl = x[5], len = x[6], kw = x[7];
  const double lr = std::log(r / rw);
  const double leak = 2.0 * len * tu / (lr * rw * rw * kw) + tu / tl;
  const double high = 2.0 * kPi * tu * (hu - hl) / (lr * (1.0 + leak));
  const double low = 5.0 * tu * (hu - hl) / (lr * (1.5 + leak));
  return -(z * high + (1.0 - z) * low);
}

}  // namespace

SyntheticFunction::SyntheticFunction(SyntheticId id) : id_(id) {
  switch (id) {
    case SyntheticId::branin2:
      box_ = {{-5.0, 0.0}, {10.0, 15.0}};
      input_names_ = {"x1", "x2"};
      break;
    case SyntheticId::currin2:
      box_ = {{0.0, 0.0}, {1.0, 1.0}};
      input_names_ = {"x1", "x2"};
      break;
    case SyntheticId::hartmann3:
      box_ = {std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)};
      input_names_ = {"x1", "x2", "x3"};
      break;
    case SyntheticId::hartmann6:
      box_ = {std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)};
      input_names_ = {"x1", "x2", "x3", "x4", "x5", "x6"};
      break;
    case SyntheticId::borehole8:
      box_ = {{0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0},
              {0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0}};
      input_names_ = {"rw", "r", "Tu", "Hu", "Tl", "Hl", "L", "Kw"};
      break;
  }
}

std::string_view SyntheticFunction::name() const {
  switch (id_) {
    case SyntheticId::branin2: return "branin2";
    case SyntheticId::currin2: return "currin2";
    case SyntheticId::hartmann3: return "hartmann3";
    case SyntheticId::hartmann6: return "hartmann6";
    case SyntheticId::borehole8: return "borehole8";
  }
  return "?";
}

double SyntheticFunction::operator()(std::span<const double> x, double z) const {
  if (x.size() != dim()) throw std::out_of_range(std::string(name()) + ": wrong input dimension");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= box_.lower[i] && x[i] <= box_.upper[i])) {
      throw std::out_of_range(std::string(name()) + ": input " + input_names_[i] + " outside box");
    }
  }
  if (!(z >= kMinFidelity && z <= 1.0)) {
    throw std::out_of_range(std::string(name()) + ": fidelity outside [2^-9, 1]");
  }
  switch (id_) {
    case SyntheticId::branin2: return branin(x, z);
    case SyntheticId::currin2: return currin(x, z);
    case SyntheticId::hartmann3: return hartmann(kHartmann3A, kHartmann3P, x, z);
    case SyntheticId::hartmann6: return hartmann(kHartmann6A, kHartmann6P, x, z);
    case SyntheticId::borehole8: return borehole(x, z);
  }
  return 0.0;
}

KnownOptimum SyntheticFunction::known_optimum() const {
  switch (id_) {
    case SyntheticId::branin2:
      return {{{-kPi, 12.275}, {kPi, 2.275}, {3.0 * kPi, 2.475}}, 0.39788735772973816};
    case SyntheticId::currin2:
      return {{{13.0 / 60.0, 0.0}}, -13.798722044728434};
    case SyntheticId::hartmann3:
      return {{{0.11458886859137944, 0.5556488945947685, 0.8525469839923088}}, -3.862779787332663};
    case SyntheticId::hartmann6:
      return {{{0.20168951284088166, 0.15001069121573468, 0.47687397552004734, 0.2753324309510746,
                0.31165161746271286, 0.6573005329659732}},
              -3.322368011415515};
    case SyntheticId::borehole8:
      return {{{0.15, 100.0, 115600.0, 1110.0, 116.0, 700.0, 1120.0, 12045.0}}, -309.5755876604079};
  }
  return {};
}

double eval_synthetic(const SyntheticFunction& fn, std::span<const double> x, double z) {
  return fn(x, z);
}

KnownOptimum known_optimum(const SyntheticFunction& fn) { return fn.known_optimum(); }

SyntheticId synthetic_from_name(std::string_view name) {
  if (name.starts_with("synth:")) name.remove_prefix(6);
  for (const SyntheticId id : kAllSynthetic) {
    if (SyntheticFunction(id).name() == name) return id;
  }
  throw std::invalid_argument("unknown synthetic function '" + std::string(name) + "'");
}

}  // namespace mfhpo
