#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfhpo/instances.hpp"
#include "mfhpo/models.hpp"
#include "mfhpo/trajectory.hpp"

namespace mfhpo {

using Point = std::vector<double>;

// a weakly better in every coordinate and strictly better in one (minimize).
bool dominates(std::span<const double> a, std::span<const double> b);

// Rank per point: 0 for the nondominated set, k for the set left after
// removing ranks < k.
std::vector<std::size_t> nondominated_sort(std::span<const Point> points);
// Positions of the rank-0 points, in input order.
std::vector<std::size_t> nondominated_indices(std::span<const Point> points);

inline constexpr std::size_t kHVMonteCarloSamples = 100000;

// Lebesgue measure of the region dominated by `front` and bounded by `ref`.
// Exact for m = 2 and 3, seeded Monte Carlo for m >= 4. Dominated points are
// allowed. Throws std::invalid_argument if a point does not weakly dominate ref.
double hypervolume(std::span<const Point> front, std::span<const double> ref,
                   std::size_t mc_samples = kHVMonteCarloSamples, std::uint64_t seed = 0);
// Sorted-sweep closed form for m = 2.
double hypervolume_2d(std::span<const Point> front, std::span<const double> ref);
double hypervolume_3d(std::span<const Point> front, std::span<const double> ref);
double hypervolume_mc(std::span<const Point> front, std::span<const double> ref, std::size_t samples,
                      std::uint64_t seed);
// hv(front + p) - hv(front).
double hypervolume_improvement(std::span<const Point> front, const Point& p, std::span<const double> ref);
// Exclusive contribution of each point of a nondominated set.
std::vector<double> hypervolume_contributions(std::span<const Point> front, std::span<const double> ref);

// Normalization bounds per (minimize-oriented) target; nadir is (1, ..., 1).
struct HVContext {
  Point lower;
  Point upper;

  // Maps into [0, 1]; values beyond the bounds are clipped and `clipped` is
  // set when given.
  Point normalize(std::span<const double> v, bool* clipped = nullptr) const;
  static HVContext from_points(std::span<const Point> points);
};

// Minimize-oriented objective vector of an evaluation.
Point oriented_objectives(const Instance& instance, std::span<const double> values);

class ParetoArchive {
 public:
  struct Entry {
    Configuration config;
    Point objectives;  // minimize-oriented
    std::size_t iteration = 0;
  };

  // Returns false if an existing member dominates the point; otherwise inserts
  // it and drops members it dominates.
  bool insert(Configuration config, Point objectives, std::size_t iteration);
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::vector<Point> front() const;

 private:
  std::vector<Entry> entries_;
};

struct MOResult {
  Trajectory trajectory;
  ParetoArchive archive;
};

MOResult run_random_mo(const Instance& instance, double budget, std::uint64_t seed, std::size_t multiplier = 1);

// Augmented Tchebycheff: max_i w_i y_i + rho * sum_i w_i y_i.
double tchebycheff(std::span<const double> w, std::span<const double> y, double rho = 0.05);
MOResult run_parego(const Instance& instance, double budget, std::uint64_t seed);

// Uniform choice among the rows of `ei` (candidates x objectives, larger is
// better) that no other row dominates.
std::size_t select_ei_nondominated(const Matrix& ei, Rng& rng);
MOResult run_mego(const Instance& instance, double budget, std::uint64_t seed);

inline constexpr std::size_t kEHVIDraws = 100;
// Monte Carlo EHVI from independent normal posteriors using the fixed standard
// normal draws z (draws x objectives).
double ehvi_estimate(std::span<const Point> front, std::span<const double> ref,
                     std::span<const Prediction> posterior, const Matrix& z);
MOResult run_ehvi(const Instance& instance, double budget, std::uint64_t seed);

struct MIESSizes {
  std::size_t mu;
  std::size_t lambda;
};
MIESSizes mies_sizes(double budget);
// Indices of the n survivors ordered by (rank, -hv contribution, index).
std::vector<std::size_t> mies_survivors(std::span<const Point> points, std::size_t n);
MOResult run_mies(const Instance& instance, double budget, std::uint64_t seed);

}  // namespace mfhpo
