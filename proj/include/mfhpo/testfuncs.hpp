#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfhpo {

enum class SyntheticId { branin2, currin2, hartmann3, hartmann6, borehole8 };

inline constexpr std::array<SyntheticId, 5> kAllSynthetic{
    SyntheticId::branin2, SyntheticId::currin2, SyntheticId::hartmann3, SyntheticId::hartmann6,
    SyntheticId::borehole8};

// Lowest fidelity on the continuous fidelity axis, 2^-9.
inline constexpr double kMinFidelity = 1.0 / 512.0;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct KnownOptimum {
  std::vector<std::vector<double>> argmins;
  double value;
};

// A minimized multi-fidelity test function; z = 1 is the exact function.
class SyntheticFunction {
 public:
  explicit SyntheticFunction(SyntheticId id);

  SyntheticId id() const { return id_; }
  std::string_view name() const;
  std::size_t dim() const { return box_.lower.size(); }
  const Box& box() const { return box_; }
  std::span<const std::string> input_names() const { return input_names_; }

  // Throws std::out_of_range outside the box or the fidelity range.
  double operator()(std::span<const double> x, double z = 1.0) const;
  KnownOptimum known_optimum() const;

 private:
  SyntheticId id_;
  Box box_;
  std::vector<std::string> input_names_;
};

double eval_synthetic(const SyntheticFunction& fn, std::span<const double> x, double z);
KnownOptimum known_optimum(const SyntheticFunction& fn);

// Parses "branin2" or "synth:branin2".
SyntheticId synthetic_from_name(std::string_view name);

}  // namespace mfhpo
