#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfhpo/instances.hpp"
#include "mfhpo/models.hpp"
#include "mfhpo/trajectory.hpp"

namespace mfhpo {

// Expected improvement below `best` for a minimized objective.
double expected_improvement(double mean, double sd, double best);

Trajectory run_random_search(const Instance& instance, double budget, std::uint64_t seed);

enum class SurrogateKind { gp, rf, nn };
enum class AcqOptimizer { random, nelder_mead, exhaustive };

struct BOConfig {
  SurrogateKind surrogate = SurrogateKind::gp;
  AcqOptimizer acq_optimizer = AcqOptimizer::random;
  std::size_t random_probes = 10000;
  std::size_t nm_probes = 100;
  double nm_rel_tol = 1e-4;
  std::size_t nm_max_evals = 500;
  // 0 = 5 * D.
  std::size_t init_design_size = 0;
  GPConfig gp;
  RFConfig rf;
  MLPConfig nn;

  BOConfig();
};

// Throws std::invalid_argument if the budget does not exceed the initial design
// or exhaustive search is requested on a non-tabular instance.
Trajectory run_bo(const Instance& instance, const BOConfig& cfg, double budget, std::uint64_t seed);

struct HyperbandSchedule {
  struct Rung {
    std::size_t n;
    double fidelity;
  };
  struct Bracket {
    std::size_t s;
    std::vector<Rung> rungs;
  };
  std::size_t s_max = 0;
  std::vector<Bracket> brackets;  // s = s_max first
};

HyperbandSchedule hyperband_schedule(double r_min, double r_max, double eta);
// Indices of the floor(n / eta) best (smallest) values; ties by position.
std::vector<std::size_t> successive_halving_survivors(std::span<const double> values, double eta);

Trajectory run_hyperband(const Instance& instance, double budget, double eta, std::uint64_t seed);

}  // namespace mfhpo
