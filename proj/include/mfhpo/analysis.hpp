#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfhpo/matrix.hpp"
#include "mfhpo/optim_mo.hpp"

namespace mfhpo {

// One optimizer run on one instance: target-0 values oriented to minimize.
struct RunTrace {
  std::string optimizer;
  std::size_t replication = 0;
  std::vector<double> cumulative_budget;
  std::vector<double> value;
  // Whether the evaluation ran at full fidelity; empty means all did.
  std::vector<char> full_fidelity;

  bool is_full(std::size_t i) const { return full_fidelity.empty() || full_fidelity[i]; }
};

// Step function on the cumulative-budget axis; 1 before the first point.
struct RegretCurve {
  std::vector<double> budget;
  std::vector<double> regret;

  double at(double b) const;
  double final_regret() const { return regret.empty() ? 1.0 : regret.back(); }
};

struct RegretResult {
  std::vector<RegretCurve> curves;  // aligned with the input runs
  double best = 0.0;
  double worst = 0.0;
  // Fewer than two distinct full-fidelity values; all curves are then 0.
  bool degenerate = false;
};

// Regret of the full-fidelity best-so-far, scaled by the range of all
// full-fidelity values over every run.
RegretResult normalized_regret(std::span<const RunTrace> runs);

// 0.10, 0.15, ..., 1.00.
std::vector<double> budget_fractions();

struct BenchmarkCurves {
  std::string benchmark;
  double budget = 0.0;
  // optimizers x replications; all optimizers share the replication count.
  std::vector<std::vector<RegretCurve>> by_optimizer;
};

struct RankMatrix {
  std::vector<std::string> benchmarks;
  std::vector<std::string> optimizers;
  Matrix ranks;  // benchmarks x optimizers
};

// Ranks optimizers per benchmark and replication by regret at
// fraction * budget (ties averaged) and averages over replications.
RankMatrix mean_ranks(std::span<const BenchmarkCurves> data, std::span<const std::string> optimizers,
                      double fraction);
// Mean of mean_ranks over every budget fraction.
RankMatrix anytime_ranks(std::span<const BenchmarkCurves> data, std::span<const std::string> optimizers);

using Ordering = std::vector<std::string>;

// Optimizers of one benchmark row sorted by rank; ties by id.
Ordering ordering_from_ranks(std::span<const std::string> optimizers, std::span<const double> ranks);

// Number of discordant pairs. Throws std::invalid_argument on item-set mismatch.
std::size_t kendall_distance(const Ordering& a, const Ordering& b);

inline constexpr std::size_t kMaxConsensusItems = 10;

struct ConsensusResult {
  Ordering order;
  std::size_t total_distance = 0;
  std::optional<std::size_t> distance_to_reference;
};

// Exhaustive search over all linear orders; ties go to the lexicographically
// smallest order of ids.
ConsensusResult kemeny_consensus(std::span<const Ordering> rankings);

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// ranks: N benchmarks x k optimizers of average ranks.
FriedmanResult friedman_test(const Matrix& ranks);

// Critical difference at alpha = 0.05 (the only tabulated level), k <= 10.
double nemenyi_cd(std::size_t k, std::size_t n, double alpha = 0.05);

class ECDF {
 public:
  explicit ECDF(std::span<const double> values);
  // Fraction of values <= t.
  double operator()(double t) const;
  std::vector<double> evaluate(std::span<const double> grid) const;

 private:
  std::vector<double> sorted_;
};

std::vector<double> ecdf(std::span<const double> values, std::span<const double> grid);

struct HVTrace {
  std::vector<double> budget;
  std::vector<double> hv;
  bool clipped = false;
};

// Hypervolume of the running archive of normalized, minimize-oriented
// objective vectors against the nadir (1, ..., 1).
HVTrace hv_trajectory(std::span<const double> cumulative_budget, std::span<const Point> objectives,
                      const HVContext& context);

}  // namespace mfhpo
