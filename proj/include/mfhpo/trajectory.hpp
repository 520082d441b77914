#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mfhpo/instances.hpp"

namespace mfhpo {

// Value of target j oriented so that smaller is better.
inline double oriented(const Instance& instance, std::size_t j, double v) {
  return instance.directions()[j] == Direction::minimize ? v : -v;
}

struct Trajectory {
  std::vector<EvalRecord> records;
  // Best-so-far of target 0 in its own units over full-fidelity evaluations;
  // +-inf (per direction) until the first one.
  std::vector<double> incumbent;
  // Fidelity fraction of each evaluation (1 = full fidelity).
  std::vector<double> fidelity;
  std::size_t fallbacks = 0;
  std::vector<std::string> log;

  double budget_used() const { return records.empty() ? 0.0 : records.back().cumulative_budget; }
};

// Evaluates configurations against an instance while keeping the cumulative
// cost ledger of a single optimizer run.
class EvalSession {
 public:
  EvalSession(const Instance& instance, double budget, std::uint64_t seed);

  const Instance& instance() const { return instance_; }
  double budget() const { return budget_; }
  double used() const { return used_; }
  double remaining() const { return budget_ - used_; }
  bool affordable(double cost) const { return used_ + cost <= budget_ * (1.0 + 1e-12) + 1e-12; }

  // Appends the evaluation to the trajectory; the caller checks affordability.
  const EvalRecord& evaluate(const Configuration& config);
  bool is_full_fidelity(const Configuration& config) const;

  Trajectory& trajectory() { return traj_; }
  Trajectory take() { return std::move(traj_); }

 private:
  const Instance& instance_;
  double budget_;
  std::uint64_t seed_;
  double used_ = 0.0;
  Trajectory traj_;
};

// Uniform configuration with the budget parameter at its upper bound.
Configuration sample_full_fidelity(const SearchSpace& space, Rng& rng);

}  // namespace mfhpo
