#include "mfhpo/trajectory.hpp"

#include <cmath>

namespace mfhpo {

EvalSession::EvalSession(const Instance& instance, double budget, std::uint64_t seed)
    : instance_(instance), budget_(budget), seed_(seed) {}

bool EvalSession::is_full_fidelity(const Configuration& config) const {
  const auto b = instance_.space().budget_index();
  if (!b) return true;
  const double upper = instance_.space().param(*b).upper;
  if (const TabularTable* t = instance_.table()) {
    return t->config(t->nearest(config)).values[*b] >= upper;
  }
  return config.values[*b] >= upper;
}

const EvalRecord& EvalSession::evaluate(const Configuration& config) {
  const std::size_t iteration = traj_.records.size();
  EvalRecord rec;
  rec.iteration = iteration;
  rec.config = config;
  rec.objectives = instance_.evaluate(config, mix_seed(seed_, iteration));
  used_ += rec.objectives.cost;
  rec.cumulative_budget = used_;

  const bool minimize = instance_.directions()[0] == Direction::minimize;
  double inc = traj_.incumbent.empty()
                   ? (minimize ? INFINITY : -INFINITY)
                   : traj_.incumbent.back();
  if (is_full_fidelity(config)) {
    const double v = rec.objectives.values[0];
    inc = minimize ? std::min(inc, v) : std::max(inc, v);
  }
  traj_.incumbent.push_back(inc);
  traj_.fidelity.push_back(rec.objectives.cost);
  traj_.records.push_back(std::move(rec));
  return traj_.records.back();
}

Configuration sample_full_fidelity(const SearchSpace& space, Rng& rng) {
  Configuration c = sample_one(space, rng);
  if (const auto b = space.budget_index()) c.values[*b] = space.param(*b).upper;
  return c;
}

}  // namespace mfhpo
