#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "mfhpo/analysis.hpp"
#include "mfhpo/rng.hpp"

using namespace mfhpo;

namespace {

RunTrace trace(std::string opt, std::vector<double> values, std::vector<char> full = {}) {
  RunTrace r;
  r.optimizer = std::move(opt);
  r.value = std::move(values);
  for (std::size_t i = 0; i < r.value.size(); ++i) r.cumulative_budget.push_back(i + 1.0);
  r.full_fidelity = std::move(full);
  return r;
}

RegretCurve constant_curve(double v) { return RegretCurve{{0.0}, {v}}; }

std::size_t kendall_oracle(const Ordering& a, const Ordering& b) {
  std::map<std::string, std::size_t> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) pa[a[i]] = i;
  for (std::size_t i = 0; i < b.size(); ++i) pb[b[i]] = i;
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) d += (pb[a[i]] > pb[a[j]]);
  }
  return d;
}

}  // namespace

TEST_CASE("normalized regret worked example") {
  const std::vector<RunTrace> runs{trace("a", {5, 3, 4, 1}), trace("b", {9, 7, 8, 6})};
  const auto r = normalized_regret(runs);
  CHECK(r.best == 1.0);
  CHECK(r.worst == 9.0);
  CHECK(r.curves[0].regret == std::vector<double>{0.5, 0.25, 0.25, 0.0});
  CHECK(r.curves[1].regret == std::vector<double>{1.0, 0.75, 0.75, 0.625});
  CHECK(r.curves[0].at(0.5) == 1.0);
  CHECK(r.curves[0].at(2.5) == 0.25);
  CHECK(r.curves[1].final_regret() == 0.625);
}

TEST_CASE("regret ignores low-fidelity evaluations") {
  const std::vector<RunTrace> runs{trace("a", {-100, 3, 4}, {0, 1, 1}), trace("b", {9, 7, 8})};
  const auto r = normalized_regret(runs);
  CHECK(r.best == 3.0);
  CHECK(r.curves[0].regret[0] == 1.0);
  CHECK(r.curves[0].regret[1] == 0.0);
}

TEST_CASE("regret is invariant to positive affine maps") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<RunTrace> a, b;
    const double scale = 0.1 + 10 * uniform01(rng), shift = 100 * uniform01(rng) - 50;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> v(10);
      for (double& x : v) x = uniform01(rng);
      auto w = v;
      for (double& x : w) x = scale * x + shift;
      a.push_back(trace("o", v));
      b.push_back(trace("o", w));
    }
    const auto ra = normalized_regret(a), rb = normalized_regret(b);
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < 10; ++i) {
        CHECK(ra.curves[k].regret[i] == doctest::Approx(rb.curves[k].regret[i]).scale(1.0));
      }
    }
  }
}

TEST_CASE("degenerate regret") {
  const std::vector<RunTrace> runs{trace("a", {2, 2}), trace("b", {2})};
  const auto r = normalized_regret(runs);
  CHECK(r.degenerate);
  CHECK(r.curves[0].regret == std::vector<double>{0, 0});
}

TEST_CASE("budget fractions") {
  const auto f = budget_fractions();
  REQUIRE(f.size() == 19);
  CHECK(f.front() == doctest::Approx(0.10));
  CHECK(f.back() == doctest::Approx(1.00));
}

TEST_CASE("mean ranks average ties and replications") {
  BenchmarkCurves b{"bench", 10.0, {}};
  b.by_optimizer = {{constant_curve(0.2), constant_curve(0.5)},
                    {constant_curve(0.5), constant_curve(0.5)},
                    {constant_curve(0.9), constant_curve(0.1)}};
  const std::vector<std::string> opts{"x", "y", "z"};
  const std::vector<BenchmarkCurves> data{b};
  const auto r = mean_ranks(data, opts, 0.5);
  CHECK(r.ranks(0, 0) == doctest::Approx((1 + 2.5) / 2));
  CHECK(r.ranks(0, 1) == doctest::Approx((2 + 2.5) / 2));
  CHECK(r.ranks(0, 2) == doctest::Approx((3 + 1) / 2.0));
  const auto any = anytime_ranks(data, opts);
  for (std::size_t j = 0; j < 3; ++j) CHECK(any.ranks(0, j) == doctest::Approx(r.ranks(0, j)));
  CHECK(ordering_from_ranks(opts, std::vector<double>{2, 1, 2}) == Ordering{"y", "x", "z"});
}

TEST_CASE("kendall distance") {
  CHECK(kendall_distance({"a", "b", "c"}, {"a", "b", "c"}) == 0);
  CHECK(kendall_distance({"a", "b", "c"}, {"c", "b", "a"}) == 3);
  CHECK(kendall_distance({"a", "b", "c"}, {"b", "a", "c"}) == 1);
  CHECK_THROWS_AS(kendall_distance({"a", "b"}, {"a", "c"}), std::invalid_argument);
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    Ordering a{"a", "b", "c", "d", "e", "f"}, b = a;
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    CHECK(kendall_distance(a, b) == kendall_oracle(a, b));
    CHECK(kendall_distance(a, b) == kendall_distance(b, a));
  }
}

TEST_CASE("kemeny consensus") {
  const std::vector<Ordering> in{{"a", "b", "c"}, {"a", "b", "c"}, {"c", "b", "a"}};
  const auto r = kemeny_consensus(in);
  CHECK(r.order == Ordering{"a", "b", "c"});
  CHECK(r.total_distance == 3);
  const std::vector<Ordering> tie{{"a", "b"}, {"b", "a"}};
  CHECK(kemeny_consensus(tie).order == Ordering{"a", "b"});
}

TEST_CASE("kemeny consensus matches brute force") {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    Ordering base{"p", "q", "r", "s"};
    std::vector<Ordering> in(1 + uniform_index(rng, 6), base);
    for (auto& o : in) std::shuffle(o.begin(), o.end(), rng);
    Ordering perm = base;
    std::sort(perm.begin(), perm.end());
    std::size_t best = SIZE_MAX;
    Ordering arg;
    do {
      std::size_t d = 0;
      for (const auto& o : in) d += kendall_oracle(perm, o);
      if (d < best) {
        best = d;
        arg = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto r = kemeny_consensus(in);
    CHECK(r.total_distance == best);
    CHECK(r.order == arg);
  }
}

TEST_CASE("friedman statistic and p-value") {
  Matrix perfect(10, 3);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 3; ++j) perfect(i, j) = j + 1.0;
  }
  const auto f = friedman_test(perfect);
  CHECK(f.statistic == doctest::Approx(20.0));
  // Two degrees of freedom: survival function exp(-x / 2).
  CHECK(f.p_value == doctest::Approx(std::exp(-10.0)).epsilon(1e-8));

  Matrix ties(6, 3, 2.0);
  const auto g = friedman_test(ties);
  CHECK(g.statistic == 0.0);
  CHECK(g.p_value == 1.0);

  Matrix m(4, 3);
  const double rows[4][3] = {{1, 2, 3}, {1, 3, 2}, {2, 1, 3}, {1, 2, 3}};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = rows[i][j];
  }
  // Column means 1.25, 2, 2.75.
  const double chi = 12.0 * 4 / (3 * 4) * (1.25 * 1.25 + 4 + 2.75 * 2.75) - 3.0 * 4 * 4;
  const auto h = friedman_test(m);
  CHECK(h.statistic == doctest::Approx(chi));
  CHECK(h.p_value == doctest::Approx(std::exp(-chi / 2)));

  Matrix swapped(4, 3);
  const std::size_t order[4] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) swapped(i, j) = m(order[i], 2 - j);
  }
  CHECK(friedman_test(swapped).statistic == h.statistic);
}

TEST_CASE("nemenyi critical difference") {
  CHECK(nemenyi_cd(3, 10) == doctest::Approx(2.344 * std::sqrt(12.0 / 60.0)));
  CHECK(nemenyi_cd(2, 5) == doctest::Approx(1.960 * std::sqrt(6.0 / 30.0)));
  CHECK_THROWS(nemenyi_cd(11, 5));
  CHECK_THROWS(nemenyi_cd(3, 5, 0.1));
}

TEST_CASE("ecdf") {
  const std::vector<double> v{3, 1, 2, 2};
  const ECDF f(v);
  CHECK(f(0.5) == 0.0);
  CHECK(f(1.0) == 0.25);
  CHECK(f(2.0) == 0.75);
  CHECK(f(10.0) == 1.0);
  CHECK(ecdf(v, std::vector<double>{1.5, 3}) == std::vector<double>{0.25, 1.0});
}

TEST_CASE("hypervolume trajectory is monotone and ends at the archive hypervolume") {
  Rng rng(4);
  for (const std::size_t m : {2u, 3u, 4u}) {
    std::vector<Point> pts(30, Point(m));
    std::vector<double> budget(30);
    for (std::size_t i = 0; i < 30; ++i) {
      budget[i] = i + 1.0;
      for (double& v : pts[i]) v = 10 * uniform01(rng);
    }
    const auto ctx = HVContext::from_points(pts);
    const auto tr = hv_trajectory(budget, pts, ctx);
    REQUIRE(tr.hv.size() == 30);
    CHECK_FALSE(tr.clipped);
    for (std::size_t i = 1; i < 30; ++i) CHECK(tr.hv[i] >= tr.hv[i - 1]);
    std::vector<Point> norm;
    for (const auto& p : pts) norm.push_back(ctx.normalize(p));
    const std::vector<double> nadir(m, 1.0);
    if (m < 4) CHECK(tr.hv.back() == doctest::Approx(hypervolume(norm, nadir)));
    else CHECK(std::abs(tr.hv.back() - hypervolume(norm, nadir)) < 1e-2);
  }
}
