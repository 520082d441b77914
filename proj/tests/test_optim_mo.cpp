#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfhpo/optim_mo.hpp"

using namespace mfhpo;

namespace {

std::vector<Point> random_points(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<Point> pts(n, Point(m));
  for (auto& p : pts) {
    for (double& v : p) v = uniform01(rng);
  }
  return pts;
}

// Points on the simplex face sum = 1, mutually nondominated.
std::vector<Point> simplex_front(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<Point> pts(n, Point(m));
  for (auto& p : pts) {
    double s = 0;
    for (double& v : p) s += (v = -std::log(1 - uniform01(rng)));
    for (double& v : p) v /= s;
  }
  return pts;
}

std::vector<std::size_t> brute_ranks(const std::vector<Point>& pts) {
  std::vector<std::size_t> rank(pts.size(), SIZE_MAX);
  std::size_t assigned = 0;
  for (std::size_t k = 0; assigned < pts.size(); ++k) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (rank[i] != SIZE_MAX) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j != i && rank[j] == SIZE_MAX && dominates(pts[j], pts[i])) dominated = true;
      }
      if (!dominated) layer.push_back(i);
    }
    for (const auto i : layer) rank[i] = k;
    assigned += layer.size();
  }
  return rank;
}

// Inclusion-exclusion over subsets; exact for small fronts in any dimension.
double hv_inclusion_exclusion(const std::vector<Point>& front, const std::vector<double>& ref) {
  const std::size_t n = front.size();
  double total = 0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    Point corner(ref.size(), -INFINITY);
    int bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      ++bits;
      for (std::size_t j = 0; j < ref.size(); ++j) corner[j] = std::max(corner[j], front[i][j]);
    }
    double vol = 1;
    for (std::size_t j = 0; j < ref.size(); ++j) vol *= std::max(ref[j] - corner[j], 0.0);
    total += (bits % 2 ? 1 : -1) * vol;
  }
  return total;
}

}  // namespace

TEST_CASE("dominance") {
  CHECK(dominates(Point{1, 2}, Point{1, 3}));
  CHECK_FALSE(dominates(Point{1, 2}, Point{1, 2}));
  CHECK_FALSE(dominates(Point{1, 3}, Point{2, 2}));
}

TEST_CASE("nondominated sort matches brute force") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 2 + t % 3;
    auto pts = random_points(1 + uniform_index(rng, 40), m, rng);
    for (auto& p : pts) {
      for (double& v : p) v = std::floor(v * 5);
    }
    const auto ranks = nondominated_sort(pts);
    CHECK(ranks == brute_ranks(pts));
    std::vector<std::size_t> zero;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (ranks[i] == 0) zero.push_back(i);
    }
    CHECK(nondominated_indices(pts) == zero);
  }
}

TEST_CASE("hypervolume small examples") {
  const std::vector<double> ref{1, 1};
  CHECK(hypervolume(std::vector<Point>{{0.5, 0.5}}, ref) == doctest::Approx(0.25));
  CHECK(hypervolume(std::vector<Point>{{0, 0.5}, {0.5, 0}}, ref) == doctest::Approx(0.75));
  CHECK(hypervolume(std::vector<Point>{}, ref) == 0.0);
  CHECK(hypervolume(std::vector<Point>{{0.5, 0.5}, {0.6, 0.6}}, ref) == doctest::Approx(0.25));
  CHECK(hypervolume(std::vector<Point>{{0.5, 0.5, 0.5}}, std::vector<double>{1, 1, 1}) == doctest::Approx(0.125));
  CHECK_THROWS_AS(hypervolume(std::vector<Point>{{1.5, 0.5}}, ref), std::invalid_argument);
}

TEST_CASE("2-d hypervolume equals the staircase sum") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    auto f = simplex_front(1 + uniform_index(rng, 30), 2, rng);
    std::sort(f.begin(), f.end());
    double area = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double next = i + 1 < f.size() ? f[i + 1][0] : 1.0;
      area += (next - f[i][0]) * (1.0 - f[i][1]);
    }
    CHECK(std::abs(hypervolume(f, std::vector<double>{1, 1}) - area) <= 1e-12);
  }
}

TEST_CASE("exact hypervolumes agree with inclusion-exclusion") {
  Rng rng(3);
  for (int t = 0; t < 60; ++t) {
    const std::size_t m = 2 + t % 3;
    const auto pts = random_points(1 + uniform_index(rng, 8), m, rng);
    const std::vector<double> ref(m, 1.1);
    const double exact = hv_inclusion_exclusion(pts, ref);
    const double hv = hypervolume(pts, ref, 400000, t);
    if (m == 4) CHECK(std::abs(hv - exact) < 5e-3);
    else CHECK(hv == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("3-d hypervolume agrees with Monte Carlo") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto f = simplex_front(20, 3, rng);
    const std::vector<double> ref{1, 1, 1};
    CHECK(std::abs(hypervolume_3d(f, ref) - hypervolume_mc(f, ref, 200000, t)) < 1e-2);
  }
}

TEST_CASE("hypervolume scales with the box") {
  Rng rng(5);
  const auto f = random_points(10, 3, rng);
  std::vector<Point> g = f;
  const double s[3] = {2, 0.5, 3};
  for (auto& p : g) {
    for (int j = 0; j < 3; ++j) p[j] *= s[j];
  }
  CHECK(hypervolume(g, std::vector<double>{2, 0.5, 3}) ==
        doctest::Approx(3 * hypervolume(f, std::vector<double>{1, 1, 1})));
}

TEST_CASE("hypervolume improvement and contributions match differences") {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 2 + t % 2;
    const auto front = simplex_front(1 + uniform_index(rng, 15), m, rng);
    const std::vector<double> ref(m, 1.0);
    Point p(m);
    for (double& v : p) v = uniform01(rng);
    auto with = front;
    with.push_back(p);
    const double diff = hypervolume(with, ref) - hypervolume(front, ref);
    CHECK(hypervolume_improvement(front, p, ref) == doctest::Approx(diff).epsilon(1e-9).scale(1.0));
    const auto c = hypervolume_contributions(front, ref);
    for (std::size_t i = 0; i < front.size(); ++i) {
      auto without = front;
      without.erase(without.begin() + i);
      CHECK(c[i] == doctest::Approx(hypervolume(front, ref) - hypervolume(without, ref)).scale(1.0));
    }
  }
}

TEST_CASE("archive keeps exactly the nondominated points") {
  Rng rng(7);
  ParetoArchive a;
  std::vector<Point> all;
  for (std::size_t i = 0; i < 300; ++i) {
    Point p{uniform01(rng), uniform01(rng)};
    all.push_back(p);
    a.insert(Configuration{{double(i)}}, p, i);
    for (const auto& x : a.entries()) {
      for (const auto& y : a.entries()) CHECK_FALSE(dominates(x.objectives, y.objectives));
    }
  }
  CHECK(a.size() == nondominated_indices(all).size());
  CHECK_FALSE(a.insert(Configuration{{0.0}}, Point{2, 2}, 0));
}

TEST_CASE("normalization and clipping") {
  const HVContext ctx{{0, 10}, {2, 20}};
  bool clipped = false;
  CHECK(ctx.normalize(std::vector<double>{1, 15}, &clipped) == Point{0.5, 0.5});
  CHECK_FALSE(clipped);
  CHECK(ctx.normalize(std::vector<double>{3, 5}, &clipped) == Point{1, 0});
  CHECK(clipped);
  const auto fit = HVContext::from_points(std::vector<Point>{{1, 4}, {3, 2}});
  CHECK(fit.lower == Point{1, 2});
  CHECK(fit.upper == Point{3, 4});
}

TEST_CASE("tchebycheff scalarization") {
  CHECK(tchebycheff(std::vector<double>{0.5, 0.5}, std::vector<double>{0.2, 0.8}) ==
        doctest::Approx(0.4 + 0.05 * 0.5));
}

TEST_CASE("EI-nondominated selection is uniform over the nondominated rows") {
  Matrix ei(5, 2);
  const double rows[5][2] = {{1, 0}, {0, 1}, {0.5, 0.5}, {0.2, 0.2}, {0.9, 0}};
  for (std::size_t i = 0; i < 5; ++i) {
    ei(i, 0) = rows[i][0];
    ei(i, 1) = rows[i][1];
  }
  Rng rng(8);
  std::vector<std::size_t> count(5);
  for (int i = 0; i < 3000; ++i) ++count[select_ei_nondominated(ei, rng)];
  CHECK(count[3] == 0);
  CHECK(count[4] == 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(count[i] > 850);
    CHECK(count[i] < 1150);
  }
}

TEST_CASE("EHVI estimate is nonnegative, zero for dominated certainties, exact for certain points") {
  Rng rng(9);
  Matrix z(kEHVIDraws, 2);
  std::normal_distribution<double> nd;
  for (double& v : z.data) v = nd(rng);
  const std::vector<Point> front{{0.2, 0.6}, {0.6, 0.2}};
  const std::vector<double> ref{1, 1};
  const std::vector<Prediction> dominated{{0.8, 0}, {0.8, 0}};
  CHECK(ehvi_estimate(front, ref, dominated, z) == 0.0);
  const std::vector<Prediction> certain{{0.1, 0}, {0.1, 0}};
  CHECK(ehvi_estimate(front, ref, certain, z) ==
        doctest::Approx(hypervolume_improvement(front, Point{0.1, 0.1}, ref)));
  const std::vector<Prediction> unsure{{0.5, 0.3}, {0.5, 0.3}};
  CHECK(ehvi_estimate(front, ref, unsure, z) > 0.0);
}

TEST_CASE("MIES population sizes") {
  CHECK(mies_sizes(60).mu == 10);
  CHECK(mies_sizes(60).lambda == 2);
  CHECK(mies_sizes(100).mu == 16);
  CHECK(mies_sizes(100).lambda == 4);
  CHECK(mies_sizes(24).mu == 4);
  CHECK(mies_sizes(24).lambda == 1);
}

TEST_CASE("MIES survivors follow rank then contribution") {
  const std::vector<Point> pts{{0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1}, {0.6, 0.6}, {0.95, 0.95}, {0.45, 0.55}};
  const auto s = mies_survivors(pts, 4);
  REQUIRE(s.size() == 4);
  std::vector<std::size_t> front(s.begin(), s.end());
  const auto ranks = nondominated_sort(pts);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(ranks[s[i]] <= ranks[s[i + 1]]);
  std::sort(front.begin(), front.end());
  CHECK(front == std::vector<std::size_t>{0, 1, 2, 5});
  CHECK(mies_survivors(pts, 5).back() == 3);
}

TEST_CASE("multi-objective optimizers respect the budget and are deterministic") {
  const Instance inst = make_real_instance("mo:branin2+currin2");
  using Runner = MOResult (*)(const Instance&, double, std::uint64_t);
  for (const Runner run : {Runner{&run_parego}, Runner{&run_mego}, Runner{&run_ehvi}, Runner{&run_mies}}) {
    const auto a = run(inst, 24, 3), b = run(inst, 24, 3);
    CHECK(a.trajectory.records.size() == 24);
    CHECK(a.trajectory.budget_used() <= 24 + 1e-9);
    REQUIRE(b.trajectory.records.size() == a.trajectory.records.size());
    for (std::size_t i = 0; i < a.trajectory.records.size(); ++i) {
      CHECK(a.trajectory.records[i].config == b.trajectory.records[i].config);
    }
    CHECK(a.archive.size() >= 1);
    std::vector<Point> all;
    for (const auto& r : a.trajectory.records) all.push_back(oriented_objectives(inst, r.objectives.values));
    CHECK(a.archive.size() == nondominated_indices(all).size());
  }
  const auto rs4 = run_random_mo(inst, 10, 1, 4);
  CHECK(rs4.trajectory.records.size() == 40);
  CHECK_THROWS(run_mies(inst, 20, 1));
}
