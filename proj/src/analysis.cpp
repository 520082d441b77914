#include "mfhpo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "mfhpo/models.hpp"

namespace mfhpo {

double RegretCurve::at(double b) const {
  const auto it = std::upper_bound(budget.begin(), budget.end(), b * (1.0 + 1e-12) + 1e-12);
  if (it == budget.begin()) return 1.0;
  return regret[static_cast<std::size_t>(it - budget.begin()) - 1];
}

RegretResult normalized_regret(std::span<const RunTrace> runs) {
  RegretResult out;
  double best = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.value.size(); ++i) {
      if (!r.is_full(i)) continue;
      best = std::min(best, r.value[i]);
      worst = std::max(worst, r.value[i]);
    }
  }
  out.best = best;
  out.worst = worst;
  const double range = worst - best;
  out.degenerate = !(range > 0.0);
  for (const auto& r : runs) {
    RegretCurve c;
    double inc = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.value.size(); ++i) {
      if (r.is_full(i)) inc = std::min(inc, r.value[i]);
      c.budget.push_back(r.cumulative_budget[i]);
      if (out.degenerate) {
        c.regret.push_back(std::isfinite(inc) ? 0.0 : 1.0);
      } else {
        c.regret.push_back(std::isfinite(inc) ? std::clamp((inc - best) / range, 0.0, 1.0) : 1.0);
      }
    }
    out.curves.push_back(std::move(c));
  }
  return out;
}

std::vector<double> budget_fractions() {
  std::vector<double> out;
  for (int k = 2; k <= 20; ++k) out.push_back(0.05 * k);
  return out;
}

RankMatrix mean_ranks(std::span<const BenchmarkCurves> data, std::span<const std::string> optimizers,
                      double fraction) {
  RankMatrix out;
  out.optimizers.assign(optimizers.begin(), optimizers.end());
  out.ranks = Matrix(data.size(), optimizers.size());
  for (std::size_t b = 0; b < data.size(); ++b) {
    const BenchmarkCurves& bc = data[b];
    out.benchmarks.push_back(bc.benchmark);
    if (bc.by_optimizer.size() != optimizers.size()) {
      throw std::invalid_argument("mean_ranks: benchmark '" + bc.benchmark + "' lacks optimizers");
    }
    const std::size_t reps = bc.by_optimizer.empty() ? 0 : bc.by_optimizer.front().size();
    for (const auto& o : bc.by_optimizer) {
      if (o.size() != reps) throw std::invalid_argument("mean_ranks: unequal replication counts");
    }
    std::vector<double> at(optimizers.size());
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t o = 0; o < optimizers.size(); ++o) at[o] = bc.by_optimizer[o][r].at(fraction * bc.budget);
      const auto rk = fractional_ranks(at);
      for (std::size_t o = 0; o < optimizers.size(); ++o) out.ranks(b, o) += rk[o] / static_cast<double>(reps);
    }
  }
  return out;
}

RankMatrix anytime_ranks(std::span<const BenchmarkCurves> data, std::span<const std::string> optimizers) {
  const auto fractions = budget_fractions();
  RankMatrix out;
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    RankMatrix m = mean_ranks(data, optimizers, fractions[f]);
    if (f == 0) {
      out = std::move(m);
    } else {
      for (std::size_t i = 0; i < out.ranks.data.size(); ++i) out.ranks.data[i] += m.ranks.data[i];
    }
  }
  for (double& v : out.ranks.data) v /= static_cast<double>(fractions.size());
  return out;
}

Ordering ordering_from_ranks(std::span<const std::string> optimizers, std::span<const double> ranks) {
  std::vector<std::size_t> idx(optimizers.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (ranks[a] != ranks[b]) return ranks[a] < ranks[b];
    return optimizers[a] < optimizers[b];
  });
  Ordering out;
  for (const std::size_t i : idx) out.push_back(optimizers[i]);
  return out;
}

std::size_t kendall_distance(const Ordering& a, const Ordering& b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall_distance: orders differ in length");
  std::vector<std::size_t> pos_b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto it = std::find(b.begin(), b.end(), a[i]);
    if (it == b.end()) throw std::invalid_argument("kendall_distance: item '" + a[i] + "' missing");
    pos_b[i] = static_cast<std::size_t>(it - b.begin());
  }
  if (std::set<std::string>(a.begin(), a.end()).size() != a.size()) {
    throw std::invalid_argument("kendall_distance: repeated item");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = i + 1; k < a.size(); ++k) d += pos_b[i] > pos_b[k];
  }
  return d;
}

ConsensusResult kemeny_consensus(std::span<const Ordering> rankings) {
  if (rankings.empty()) throw std::invalid_argument("kemeny_consensus: no rankings");
  Ordering items = rankings.front();
  std::sort(items.begin(), items.end());
  const std::size_t k = items.size();
  if (k > kMaxConsensusItems) {
    throw std::invalid_argument("kemeny_consensus: " + std::to_string(k) + " items exceed the limit of " +
                                std::to_string(kMaxConsensusItems));
  }
  // before[a][b]: number of rankings placing a ahead of b.
  std::vector<std::size_t> before(k * k, 0);
  for (const auto& r : rankings) {
    Ordering sorted = r;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != items) throw std::invalid_argument("kemeny_consensus: rankings cover different items");
    std::vector<std::size_t> pos(k);
    for (std::size_t i = 0; i < k; ++i) {
      pos[static_cast<std::size_t>(std::lower_bound(items.begin(), items.end(), r[i]) - items.begin())] = i;
    }
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b && pos[a] < pos[b]) ++before[a * k + b];
      }
    }
  }
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best_perm = perm;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  do {
    std::size_t cost = 0;
    for (std::size_t i = 0; i < k && cost < best; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) cost += before[perm[j] * k + perm[i]];
    }
    if (cost < best) {
      best = cost;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  ConsensusResult out;
  for (const std::size_t i : best_perm) out.order.push_back(items[i]);
  out.total_distance = best;
  return out;
}

FriedmanResult friedman_test(const Matrix& ranks) {
  const std::size_t n = ranks.rows;
  const std::size_t k = ranks.cols;
  if (n < 2 || k < 2) throw std::invalid_argument("friedman_test: need N >= 2 and k >= 2");
  std::vector<double> sq(k);
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ranks(i, j);
    mean /= static_cast<double>(n);
    sq[j] = mean * mean;
  }
  // summed in sorted order so the statistic ignores column order
  std::sort(sq.begin(), sq.end());
  const double sum_sq = std::accumulate(sq.begin(), sq.end(), 0.0);
  const double kd = static_cast<double>(k);
  const double stat = 12.0 * static_cast<double>(n) / (kd * (kd + 1.0)) *
                      (sum_sq - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
  FriedmanResult out;
  out.statistic = std::max(stat, 0.0);
  if (out.statistic <= 0.0) {
    out.p_value = 1.0;
  } else {
    const boost::math::chi_squared dist(kd - 1.0);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  }
  return out;
}

double nemenyi_cd(std::size_t k, std::size_t n, double alpha) {
  static constexpr double q05[] = {1.960, 2.344, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  if (std::abs(alpha - 0.05) > 1e-12) throw std::invalid_argument("nemenyi_cd: only alpha = 0.05 is tabulated");
  if (k < 2 || k > 10) throw std::invalid_argument("nemenyi_cd: k must be in [2, 10]");
  if (n < 2) throw std::invalid_argument("nemenyi_cd: need N >= 2");
  const double kd = static_cast<double>(k);
  return q05[k - 2] * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n)));
}

ECDF::ECDF(std::span<const double> values) : sorted_(values.begin(), values.end()) {
  if (sorted_.empty()) throw std::invalid_argument("ecdf: no values");
  std::sort(sorted_.begin(), sorted_.end());
}

double ECDF::operator()(double t) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

std::vector<double> ECDF::evaluate(std::span<const double> grid) const {
  std::vector<double> out;
  out.reserve(grid.size());
  for (const double t : grid) out.push_back((*this)(t));
  return out;
}

std::vector<double> ecdf(std::span<const double> values, std::span<const double> grid) {
  return ECDF(values).evaluate(grid);
}

HVTrace hv_trajectory(std::span<const double> cumulative_budget, std::span<const Point> objectives,
                      const HVContext& context) {
  HVTrace out;
  if (objectives.empty()) return out;
  const std::size_t m = objectives.front().size();
  const std::vector<double> ref(m, 1.0);
  // For m >= 4 a fixed sample set of the unit box keeps the estimate monotone.
  std::vector<double> samples;
  std::vector<char> covered;
  std::size_t hits = 0;
  if (m >= 4) {
    Rng rng(0);
    samples.resize(kHVMonteCarloSamples * m);
    for (double& v : samples) v = uniform01(rng);
    covered.assign(kHVMonteCarloSamples, 0);
  }
  ParetoArchive archive;
  double hv = 0.0;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    Point p = context.normalize(objectives[i], &out.clipped);
    if (m >= 4) {
      for (std::size_t t = 0; t < kHVMonteCarloSamples; ++t) {
        if (covered[t]) continue;
        bool in = true;
        for (std::size_t j = 0; j < m && in; ++j) in = p[j] <= samples[t * m + j];
        if (in) {
          covered[t] = 1;
          ++hits;
        }
      }
      hv = static_cast<double>(hits) / static_cast<double>(kHVMonteCarloSamples);
    } else if (archive.insert(Configuration{}, p, i)) {
      hv = hypervolume(archive.front(), ref);
    }
    out.budget.push_back(cumulative_budget[i]);
    out.hv.push_back(hv);
  }
  return out;
}

}  // namespace mfhpo
