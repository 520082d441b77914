#include "mfhpo/optim_mo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mfhpo/optim_so.hpp"

namespace mfhpo {

bool dominates(std::span<const double> a, std::span<const double> b) {
  bool strict = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > b[j]) return false;
    if (a[j] < b[j]) strict = true;
  }
  return strict;
}

std::vector<std::size_t> nondominated_sort(std::span<const Point> points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> rank(n, 0);
  std::vector<std::size_t> dominated_by(n, 0);
  std::vector<std::vector<std::size_t>> dominates_list(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      if (dominates(points[i], points[k])) {
        dominates_list[i].push_back(k);
        ++dominated_by[k];
      } else if (dominates(points[k], points[i])) {
        dominates_list[k].push_back(i);
        ++dominated_by[i];
      }
    }
  }
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    if (dominated_by[i] == 0) current.push_back(i);
  }
  std::size_t r = 0;
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (const std::size_t i : current) {
      rank[i] = r;
      for (const std::size_t k : dominates_list[i]) {
        if (--dominated_by[k] == 0) next.push_back(k);
      }
    }
    current = std::move(next);
    ++r;
  }
  return rank;
}

std::vector<std::size_t> nondominated_indices(std::span<const Point> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a] != points[b]) return points[a] < points[b];
    return a < b;
  });
  // A point can only be dominated by one that sorts before it, and then by a
  // front member.
  std::vector<std::size_t> front;
  for (const std::size_t i : order) {
    bool dominated = false;
    for (const std::size_t f : front) {
      if (dominates(points[f], points[i])) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(i);
  }
  std::sort(front.begin(), front.end());
  return front;
}

namespace {

void check_ref(std::span<const Point> front, std::span<const double> ref) {
  for (const auto& p : front) {
    if (p.size() != ref.size()) throw std::invalid_argument("hypervolume: dimension mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!(p[j] <= ref[j])) throw std::invalid_argument("hypervolume: point does not dominate the reference");
    }
  }
}

// Area dominated by xy points (already within the reference box).
double area_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> stair;
  for (const auto& p : pts) {
    if (stair.empty() || p.second < stair.back().second) stair.push_back(p);
  }
  double area = 0.0;
  for (std::size_t i = 0; i < stair.size(); ++i) {
    const double next_x = i + 1 < stair.size() ? stair[i + 1].first : rx;
    area += (next_x - stair[i].first) * (ry - stair[i].second);
  }
  return area;
}

// Sorted staircase of a 2-D set for repeated improvement queries.
class Staircase2D {
 public:
  Staircase2D(std::span<const Point> front, std::span<const double> ref) : rx_(ref[0]), ry_(ref[1]) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : front) pts.emplace_back(p[0], p[1]);
    std::sort(pts.begin(), pts.end());
    for (const auto& p : pts) {
      if (stair_.empty() || p.second < stair_.back().second) stair_.push_back(p);
    }
  }

  double improvement(double px, double py) const {
    if (!(px < rx_) || !(py < ry_)) return 0.0;
    const double box = (rx_ - px) * (ry_ - py);
    // Area of the staircase clipped to [px, rx] x [py, ry].
    double covered = 0.0;
    double prev_y = ry_;
    std::size_t i = 0;
    double cur_x = px;
    // Points left of px still shadow the strip starting at px.
    double shadow_y = ry_;
    while (i < stair_.size() && stair_[i].first <= px) {
      shadow_y = std::min(shadow_y, stair_[i].second);
      ++i;
    }
    prev_y = std::max(shadow_y, py);
    for (; i < stair_.size(); ++i) {
      const double x = stair_[i].first;
      covered += (x - cur_x) * (ry_ - prev_y);
      cur_x = x;
      prev_y = std::max(std::min(prev_y, stair_[i].second), py);
    }
    covered += (rx_ - cur_x) * (ry_ - prev_y);
    return std::max(box - covered, 0.0);
  }

 private:
  double rx_, ry_;
  std::vector<std::pair<double, double>> stair_;
};

}  // namespace

double hypervolume_2d(std::span<const Point> front, std::span<const double> ref) {
  check_ref(front, ref);
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : front) pts.emplace_back(p[0], p[1]);
  return area_2d(std::move(pts), ref[0], ref[1]);
}

double hypervolume_3d(std::span<const Point> front, std::span<const double> ref) {
  check_ref(front, ref);
  std::vector<std::size_t> order(front.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return front[a][2] < front[b][2]; });
  double vol = 0.0;
  std::vector<std::pair<double, double>> slice;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Point& p = front[order[k]];
    slice.emplace_back(p[0], p[1]);
    const double z_next = k + 1 < order.size() ? front[order[k + 1]][2] : ref[2];
    if (z_next > p[2]) vol += (z_next - p[2]) * area_2d(slice, ref[0], ref[1]);
  }
  return vol;
}

double hypervolume_mc(std::span<const Point> front, std::span<const double> ref, std::size_t samples,
                      std::uint64_t seed) {
  check_ref(front, ref);
  if (front.empty() || samples == 0) return 0.0;
  const std::size_t m = ref.size();
  Point lo(ref.begin(), ref.end());
  for (const auto& p : front) {
    for (std::size_t j = 0; j < m; ++j) lo[j] = std::min(lo[j], p[j]);
  }
  double box = 1.0;
  for (std::size_t j = 0; j < m; ++j) box *= ref[j] - lo[j];
  if (box <= 0.0) return 0.0;
  Rng rng(seed);
  Point s(m);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t j = 0; j < m; ++j) s[j] = lo[j] + (ref[j] - lo[j]) * uniform01(rng);
    for (const auto& p : front) {
      bool covered = true;
      for (std::size_t j = 0; j < m && covered; ++j) covered = p[j] <= s[j];
      if (covered) {
        ++hits;
        break;
      }
    }
  }
  return box * static_cast<double>(hits) / static_cast<double>(samples);
}

double hypervolume(std::span<const Point> front, std::span<const double> ref, std::size_t mc_samples,
                   std::uint64_t seed) {
  if (ref.size() < 2) throw std::invalid_argument("hypervolume: need at least two objectives");
  if (ref.size() == 2) return hypervolume_2d(front, ref);
  if (ref.size() == 3) return hypervolume_3d(front, ref);
  return hypervolume_mc(front, ref, mc_samples, seed);
}

double hypervolume_improvement(std::span<const Point> front, const Point& p, std::span<const double> ref) {
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (!(p[j] < ref[j])) return 0.0;
  }
  for (const auto& q : front) {
    bool covers = true;
    for (std::size_t j = 0; j < ref.size() && covers; ++j) covers = q[j] <= p[j];
    if (covers) return 0.0;
  }
  if (ref.size() == 2) return Staircase2D(front, ref).improvement(p[0], p[1]);
  std::vector<Point> with(front.begin(), front.end());
  with.push_back(p);
  return std::max(hypervolume(with, ref) - hypervolume(front, ref), 0.0);
}

std::vector<double> hypervolume_contributions(std::span<const Point> front, std::span<const double> ref) {
  const double total = hypervolume(front, ref);
  std::vector<double> out(front.size());
  std::vector<Point> rest;
  for (std::size_t i = 0; i < front.size(); ++i) {
    rest.clear();
    for (std::size_t k = 0; k < front.size(); ++k) {
      if (k != i) rest.push_back(front[k]);
    }
    out[i] = std::max(total - hypervolume(rest, ref), 0.0);
  }
  return out;
}

Point HVContext::normalize(std::span<const double> v, bool* clipped) const {
  Point out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double span = upper[j] - lower[j];
    double u = span > 0.0 ? (v[j] - lower[j]) / span : 0.0;
    if (u < 0.0 || u > 1.0) {
      if (clipped) *clipped = true;
      u = std::clamp(u, 0.0, 1.0);
    }
    out[j] = u;
  }
  return out;
}

HVContext HVContext::from_points(std::span<const Point> points) {
  if (points.empty()) throw std::invalid_argument("HVContext::from_points: no points");
  HVContext ctx;
  ctx.lower = points.front();
  ctx.upper = points.front();
  for (const auto& p : points) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      ctx.lower[j] = std::min(ctx.lower[j], p[j]);
      ctx.upper[j] = std::max(ctx.upper[j], p[j]);
    }
  }
  return ctx;
}

Point oriented_objectives(const Instance& instance, std::span<const double> values) {
  Point out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out[j] = oriented(instance, j, values[j]);
  return out;
}

bool ParetoArchive::insert(Configuration config, Point objectives, std::size_t iteration) {
  for (const auto& e : entries_) {
    if (dominates(e.objectives, objectives)) return false;
  }
  std::erase_if(entries_, [&](const Entry& e) { return dominates(objectives, e.objectives); });
  entries_.push_back({std::move(config), std::move(objectives), iteration});
  return true;
}

std::vector<Point> ParetoArchive::front() const {
  std::vector<Point> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.objectives);
  return out;
}

double tchebycheff(std::span<const double> w, std::span<const double> y, double rho) {
  double mx = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    mx = std::max(mx, w[j] * y[j]);
    sum += w[j] * y[j];
  }
  return mx + rho * sum;
}

std::size_t select_ei_nondominated(const Matrix& ei, Rng& rng) {
  std::vector<Point> neg(ei.rows, Point(ei.cols));
  for (std::size_t i = 0; i < ei.rows; ++i) {
    for (std::size_t j = 0; j < ei.cols; ++j) neg[i][j] = -ei(i, j);
  }
  const auto front = nondominated_indices(neg);
  return front[uniform_index(rng, front.size())];
}

double ehvi_estimate(std::span<const Point> front, std::span<const double> ref,
                     std::span<const Prediction> posterior, const Matrix& z) {
  const std::size_t m = ref.size();
  double total = 0.0;
  Point draw(m);
  if (m == 2) {
    const Staircase2D stair(front, ref);
    for (std::size_t d = 0; d < z.rows; ++d) {
      for (std::size_t j = 0; j < m; ++j) draw[j] = posterior[j].mean + posterior[j].sd * z(d, j);
      total += stair.improvement(draw[0], draw[1]);
    }
  } else {
    for (std::size_t d = 0; d < z.rows; ++d) {
      for (std::size_t j = 0; j < m; ++j) draw[j] = posterior[j].mean + posterior[j].sd * z(d, j);
      total += hypervolume_improvement(front, draw, ref);
    }
  }
  return z.rows ? total / static_cast<double>(z.rows) : 0.0;
}

MIESSizes mies_sizes(double budget) {
  const auto mu = static_cast<std::size_t>(std::floor(budget / 6.0));
  return {mu, mu / 4};
}

namespace {

constexpr double kInternalRef = 1.1;
constexpr std::size_t kProbes = 10000;

// Shared bookkeeping of a multi-objective run. Internal hypervolumes use the
// bounds observed so far and a reference of 1.1 per normalized target.
class MOSession {
 public:
  MOSession(const Instance& instance, double budget, std::uint64_t seed)
      : instance_(instance), session_(instance, budget, seed), encoder_(instance.space(), false) {
    if (instance.targets() < 2) throw std::invalid_argument("multi-objective optimizer needs m >= 2 targets");
  }

  const Instance& instance() const { return instance_; }
  const Encoder& encoder() const { return encoder_; }
  std::size_t m() const { return instance_.targets(); }
  std::size_t count() const { return ys_.size(); }
  const std::vector<Point>& ys() const { return ys_; }
  const std::vector<Configuration>& configs() const { return configs_; }

  bool evaluate(const Configuration& c) {
    if (!session_.affordable(instance_.cost_of(c))) return false;
    const EvalRecord& rec = session_.evaluate(c);
    Point y = oriented_objectives(instance_, rec.objectives.values);
    archive_.insert(c, y, rec.iteration);
    configs_.push_back(c);
    ys_.push_back(std::move(y));
    return true;
  }

  Matrix features() const {
    Matrix x(configs_.size(), encoder_.width());
    for (std::size_t i = 0; i < configs_.size(); ++i) encoder_.encode(configs_[i], x.row(i));
    return x;
  }

  HVContext context() const { return HVContext::from_points(ys_); }

  std::vector<Point> normalized(const HVContext& ctx) const {
    std::vector<Point> out;
    out.reserve(ys_.size());
    for (const auto& y : ys_) out.push_back(ctx.normalize(y));
    return out;
  }

  void fallback(const std::string& why) {
    Trajectory& t = session_.trajectory();
    ++t.fallbacks;
    t.log.push_back("iteration " + std::to_string(t.records.size()) + ": " + why + ", random proposal");
  }

  MOResult finish() { return {session_.take(), std::move(archive_)}; }

 private:
  const Instance& instance_;
  EvalSession session_;
  Encoder encoder_;
  ParetoArchive archive_;
  std::vector<Configuration> configs_;
  std::vector<Point> ys_;
};

std::size_t init_size(const Instance& instance) { return 5 * instance.space().dim(); }

bool initial_design(MOSession& s, Rng& rng) {
  for (std::size_t i = 0; i < init_size(s.instance()); ++i) {
    if (!s.evaluate(sample_full_fidelity(s.instance().space(), rng))) return false;
  }
  return true;
}

std::vector<RFModel> fit_objective_forests(const MOSession& s, const Matrix& x, const HVContext& ctx,
                                           std::uint64_t seed) {
  std::vector<RFModel> out;
  std::vector<double> y(s.count());
  for (std::size_t j = 0; j < s.m(); ++j) {
    for (std::size_t i = 0; i < s.count(); ++i) y[i] = ctx.normalize(s.ys()[i])[j];
    RFConfig cfg;
    cfg.seed = mix_seed(seed, j);
    out.push_back(fit_rf(x, y, cfg));
  }
  return out;
}

}  // namespace

MOResult run_random_mo(const Instance& instance, double budget, std::uint64_t seed, std::size_t multiplier) {
  MOSession s(instance, budget * static_cast<double>(std::max<std::size_t>(multiplier, 1)), seed);
  Rng rng(seed);
  while (s.evaluate(sample_full_fidelity(instance.space(), rng))) {
  }
  return s.finish();
}

MOResult run_parego(const Instance& instance, double budget, std::uint64_t seed) {
  MOSession s(instance, budget, seed);
  Rng rng(seed);
  if (!initial_design(s, rng)) return s.finish();
  for (std::size_t it = 0;; ++it) {
    const std::uint64_t it_seed = mix_seed(seed, 0x1000 + it);
    Rng acq(it_seed);
    const std::vector<double> w = dirichlet_weights(s.m(), it_seed);
    Configuration proposal;
    try {
      const HVContext ctx = s.context();
      std::vector<double> scal(s.count());
      for (std::size_t i = 0; i < s.count(); ++i) scal[i] = tchebycheff(w, ctx.normalize(s.ys()[i]));
      RFConfig cfg;
      cfg.seed = it_seed;
      const RFModel rf = fit_rf(s.features(), scal, cfg);
      const double best = *std::min_element(scal.begin(), scal.end());
      double best_ei = -1.0;
      std::vector<double> feat(s.encoder().width());
      for (std::size_t p = 0; p < kProbes; ++p) {
        Configuration c = sample_full_fidelity(instance.space(), acq);
        s.encoder().encode(c, feat);
        const Prediction pr = rf.predict(feat);
        const double ei = expected_improvement(pr.mean, pr.sd, best);
        if (ei > best_ei) {
          best_ei = ei;
          proposal = std::move(c);
        }
      }
    } catch (const ModelFitError& e) {
      s.fallback(e.what());
      proposal = sample_full_fidelity(instance.space(), acq);
    }
    if (!s.evaluate(proposal)) break;
  }
  return s.finish();
}

MOResult run_mego(const Instance& instance, double budget, std::uint64_t seed) {
  MOSession s(instance, budget, seed);
  Rng rng(seed);
  if (!initial_design(s, rng)) return s.finish();
  for (std::size_t it = 0;; ++it) {
    const std::uint64_t it_seed = mix_seed(seed, 0x1000 + it);
    Rng acq(it_seed);
    Configuration proposal;
    try {
      const HVContext ctx = s.context();
      const auto forests = fit_objective_forests(s, s.features(), ctx, it_seed);
      const auto norm = s.normalized(ctx);
      std::vector<double> best(s.m(), std::numeric_limits<double>::infinity());
      for (const auto& y : norm) {
        for (std::size_t j = 0; j < s.m(); ++j) best[j] = std::min(best[j], y[j]);
      }
      std::vector<Configuration> cands;
      cands.reserve(kProbes);
      Matrix ei(kProbes, s.m());
      std::vector<double> feat(s.encoder().width());
      for (std::size_t p = 0; p < kProbes; ++p) {
        cands.push_back(sample_full_fidelity(instance.space(), acq));
        s.encoder().encode(cands.back(), feat);
        for (std::size_t j = 0; j < s.m(); ++j) {
          const Prediction pr = forests[j].predict(feat);
          ei(p, j) = expected_improvement(pr.mean, pr.sd, best[j]);
        }
      }
      proposal = cands[select_ei_nondominated(ei, acq)];
    } catch (const ModelFitError& e) {
      s.fallback(e.what());
      proposal = sample_full_fidelity(instance.space(), acq);
    }
    if (!s.evaluate(proposal)) break;
  }
  return s.finish();
}

MOResult run_ehvi(const Instance& instance, double budget, std::uint64_t seed) {
  MOSession s(instance, budget, seed);
  Rng rng(seed);
  if (!initial_design(s, rng)) return s.finish();
  const std::vector<double> ref(s.m(), kInternalRef);
  for (std::size_t it = 0;; ++it) {
    const std::uint64_t it_seed = mix_seed(seed, 0x1000 + it);
    Rng acq(it_seed);
    Configuration proposal;
    try {
      const HVContext ctx = s.context();
      const auto forests = fit_objective_forests(s, s.features(), ctx, it_seed);
      const auto norm = s.normalized(ctx);
      std::vector<Point> front;
      for (const std::size_t i : nondominated_indices(norm)) front.push_back(norm[i]);
      Matrix z(kEHVIDraws, s.m());
      std::normal_distribution<double> normal;
      for (double& v : z.data) v = normal(acq);
      std::vector<Prediction> post(s.m());
      std::vector<double> feat(s.encoder().width());
      double best = -1.0;
      for (std::size_t p = 0; p < kProbes; ++p) {
        Configuration c = sample_full_fidelity(instance.space(), acq);
        s.encoder().encode(c, feat);
        for (std::size_t j = 0; j < s.m(); ++j) post[j] = forests[j].predict(feat);
        const double v = ehvi_estimate(front, ref, post, z);
        if (v > best) {
          best = v;
          proposal = std::move(c);
        }
      }
    } catch (const ModelFitError& e) {
      s.fallback(e.what());
      proposal = sample_full_fidelity(instance.space(), acq);
    }
    if (!s.evaluate(proposal)) break;
  }
  return s.finish();
}

std::vector<std::size_t> mies_survivors(std::span<const Point> points, std::size_t n) {
  const auto rank = nondominated_sort(points);
  std::vector<double> contrib(points.size(), 0.0);
  if (!points.empty()) {
    const HVContext ctx = HVContext::from_points(points);
    const std::vector<double> ref(points.front().size(), kInternalRef);
    const std::size_t max_rank = *std::max_element(rank.begin(), rank.end());
    for (std::size_t r = 0; r <= max_rank; ++r) {
      std::vector<std::size_t> members;
      std::vector<Point> front;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (rank[i] == r) {
          members.push_back(i);
          front.push_back(ctx.normalize(points[i]));
        }
      }
      const auto c = hypervolume_contributions(front, ref);
      for (std::size_t k = 0; k < members.size(); ++k) contrib[members[k]] = c[k];
    }
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rank[a] != rank[b]) return rank[a] < rank[b];
    return contrib[a] > contrib[b];
  });
  order.resize(std::min(n, order.size()));
  return order;
}

namespace {

constexpr double kMIESCrossover = 0.2;
constexpr double kMIESMutation = 0.2;
constexpr double kMIESSigma = 0.1;

// Fills newly active parameters, clears inactive ones and pins the budget.
void repair(const SearchSpace& space, const Encoder& enc, Configuration& c, Rng& rng) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamDef& p = space.param(i);
    if (!space.is_active(c, i)) {
      c.values[i] = std::numeric_limits<double>::quiet_NaN();
    } else if (std::isnan(c.values[i])) {
      c.values[i] = p.numeric() ? enc.from_unit(i, uniform01(rng))
                                : static_cast<double>(uniform_index(rng, p.levels.size()));
    }
  }
  if (const auto b = space.budget_index()) c.values[*b] = space.param(*b).upper;
}

}  // namespace

MOResult run_mies(const Instance& instance, double budget, std::uint64_t seed) {
  const MIESSizes sz = mies_sizes(budget);
  if (sz.mu < 4 || sz.lambda < 1) throw std::invalid_argument("run_mies: budget must be at least 24");
  MOSession s(instance, budget, seed);
  const SearchSpace& space = instance.space();
  const Encoder& enc = s.encoder();
  Rng rng(seed);

  std::vector<std::size_t> pop;
  for (std::size_t i = 0; i < sz.mu; ++i) {
    if (!s.evaluate(sample_full_fidelity(space, rng))) return s.finish();
    pop.push_back(s.count() - 1);
  }

  std::normal_distribution<double> normal(0.0, kMIESSigma);
  while (true) {
    std::vector<Point> pop_y;
    for (const std::size_t i : pop) pop_y.push_back(s.ys()[i]);
    const auto rank = nondominated_sort(pop_y);
    auto tournament = [&]() {
      const std::size_t a = uniform_index(rng, pop.size());
      const std::size_t b = uniform_index(rng, pop.size());
      return rank[b] < rank[a] ? b : a;
    };

    std::vector<std::size_t> pool = pop;
    bool exhausted = false;
    for (std::size_t k = 0; k < sz.lambda; ++k) {
      const Configuration& p1 = s.configs()[pop[tournament()]];
      const Configuration& p2 = s.configs()[pop[tournament()]];
      Configuration child = p1;
      if (uniform01(rng) < kMIESCrossover) {
        for (std::size_t i = 0; i < space.size(); ++i) {
          if (uniform01(rng) < 0.5) child.values[i] = p2.values[i];
        }
      }
      for (std::size_t i = 0; i < space.size(); ++i) {
        const ParamDef& p = space.param(i);
        if (p.is_budget || std::isnan(child.values[i]) || uniform01(rng) >= kMIESMutation) continue;
        if (p.numeric()) {
          const double u = std::clamp(enc.unit(i, child.values[i]) + normal(rng), 0.0, 1.0);
          child.values[i] = enc.from_unit(i, u);
        } else {
          child.values[i] = static_cast<double>(uniform_index(rng, p.levels.size()));
        }
      }
      repair(space, enc, child, rng);
      if (!s.evaluate(child)) {
        exhausted = true;
        break;
      }
      pool.push_back(s.count() - 1);
    }

    std::vector<Point> pool_y;
    for (const std::size_t i : pool) pool_y.push_back(s.ys()[i]);
    std::vector<std::size_t> next;
    for (const std::size_t k : mies_survivors(pool_y, sz.mu)) next.push_back(pool[k]);
    pop = std::move(next);
    if (exhausted) break;
  }
  return s.finish();
}

}  // namespace mfhpo
