#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mfhpo/optim_so.hpp"

using namespace mfhpo;

namespace {

double ei_oracle(double mean, double sd, double best) {
  if (sd == 0.0) return std::max(best - mean, 0.0);
  const double z = (best - mean) / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * std::acos(-1.0));
  return (best - mean) * cdf + sd * pdf;
}

BOConfig bo(SurrogateKind s, AcqOptimizer a) {
  BOConfig c;
  c.surrogate = s;
  c.acq_optimizer = a;
  c.random_probes = 500;
  return c;
}

void check_incumbent(const Instance& inst, const Trajectory& t) {
  REQUIRE(t.incumbent.size() == t.records.size());
  REQUIRE(t.fidelity.size() == t.records.size());
  double best = INFINITY;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    if (t.fidelity[i] == 1.0) best = std::min(best, t.records[i].objectives.values[0]);
    CHECK(t.incumbent[i] == best);
    CHECK(t.records[i].iteration == i);
  }
  (void)inst;
}

}  // namespace

TEST_CASE("expected improvement matches the closed form") {
  for (const double mean : {-1.0, 0.0, 0.3, 2.0}) {
    for (const double sd : {0.0, 0.01, 0.5, 3.0}) {
      CHECK(expected_improvement(mean, sd, 0.5) == doctest::Approx(ei_oracle(mean, sd, 0.5)).epsilon(1e-12));
    }
  }
  CHECK(expected_improvement(1.0, 0.0, 0.5) == 0.0);
  CHECK(expected_improvement(0.0, 0.0, 0.5) == 0.5);
}

TEST_CASE("expected improvement is monotone in mean and sd") {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const double m = 4 * uniform01(rng) - 2, s = 2 * uniform01(rng), b = 4 * uniform01(rng) - 2;
    const double d = 0.01 + uniform01(rng);
    CHECK(expected_improvement(m + d, s, b) <= expected_improvement(m, s, b));
    CHECK(expected_improvement(m, s + d, b) >= expected_improvement(m, s, b));
    CHECK(expected_improvement(m, s, b) >= 0.0);
  }
}

TEST_CASE("random search spends the budget on full-fidelity samples") {
  const Instance inst = make_real_instance("synth:branin2");
  const auto t = run_random_search(inst, 10, 3);
  REQUIRE(t.records.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(t.records[i].cumulative_budget == doctest::Approx(i + 1.0));
  for (const double f : t.fidelity) CHECK(f == 1.0);
  check_incumbent(inst, t);
  const auto u = run_random_search(inst, 10, 3);
  for (std::size_t i = 0; i < 10; ++i) CHECK(t.records[i].config == u.records[i].config);
  CHECK(run_random_search(inst, 10, 4).records[0].config != t.records[0].config);
}

TEST_CASE("budget of 5D+1 yields one model-based proposal") {
  const Instance inst = make_real_instance("synth:branin2");
  for (const auto s : {SurrogateKind::gp, SurrogateKind::rf, SurrogateKind::nn}) {
    const auto t = run_bo(inst, bo(s, AcqOptimizer::random), 11, 2);
    CHECK(t.records.size() == 11);
    CHECK(t.budget_used() == doctest::Approx(11.0));
    check_incumbent(inst, t);
  }
  CHECK_THROWS_AS(run_bo(inst, bo(SurrogateKind::gp, AcqOptimizer::random), 10, 2), std::invalid_argument);
  CHECK_THROWS_AS(run_bo(inst, bo(SurrogateKind::gp, AcqOptimizer::exhaustive), 20, 2), std::invalid_argument);
}

TEST_CASE("bo is deterministic per seed") {
  const Instance inst = make_real_instance("synth:currin2");
  for (const auto a : {AcqOptimizer::random, AcqOptimizer::nelder_mead}) {
    const auto x = run_bo(inst, bo(SurrogateKind::gp, a), 14, 7);
    const auto y = run_bo(inst, bo(SurrogateKind::gp, a), 14, 7);
    REQUIRE(x.records.size() == y.records.size());
    for (std::size_t i = 0; i < x.records.size(); ++i) CHECK(x.records[i].config == y.records[i].config);
  }
}

TEST_CASE("exhaustive acquisition never proposes a seen table row") {
  const Instance real = make_real_instance("synth:branin2");
  const Instance tab = make_tabular_instance(real, 400);
  const auto t = run_bo(tab, bo(SurrogateKind::rf, AcqOptimizer::exhaustive), 40, 5);
  REQUIRE(t.records.size() == 40);
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const std::size_t row = tab.table()->nearest(t.records[i].config);
    if (i >= 10) CHECK(seen.count(row) == 0);
    seen.insert(row);
  }
}

TEST_CASE("hyperband schedule matches an independent computation") {
  for (const double eta : {2.0, 3.0, 4.0}) {
    for (const double ratio : {9.0, 27.0, 81.0, 512.0, 1000.0}) {
      const double r_max = 1.0, r_min = r_max / ratio;
      const auto sch = hyperband_schedule(r_min, r_max, eta);
      std::size_t s_max = 0;
      while (std::pow(eta, s_max + 1) <= ratio * (1 + 1e-12)) ++s_max;
      CHECK(sch.s_max == s_max);
      REQUIRE(sch.brackets.size() == s_max + 1);
      for (std::size_t b = 0; b <= s_max; ++b) {
        const std::size_t s = s_max - b;
        const auto& br = sch.brackets[b];
        CHECK(br.s == s);
        REQUIRE(br.rungs.size() == s + 1);
        const double n0 = std::ceil((s_max + 1.0) / (s + 1.0) * std::pow(eta, s) - 1e-9);
        for (std::size_t i = 0; i <= s; ++i) {
          CHECK(br.rungs[i].n == static_cast<std::size_t>(std::floor(n0 / std::pow(eta, i) + 1e-9)));
          CHECK(br.rungs[i].fidelity == doctest::Approx(r_max * std::pow(eta, double(i) - double(s))));
        }
        CHECK(br.rungs.back().fidelity == r_max);
      }
    }
  }
  const auto sch = hyperband_schedule(1.0 / 512, 1.0, 3.0);
  CHECK(sch.s_max == 5);
  CHECK(sch.brackets[0].rungs[0].n == 243);
  CHECK(sch.brackets[1].rungs[0].n == 98);
  CHECK(sch.brackets[5].rungs[0].n == 6);
}

TEST_CASE("successive halving keeps the floor(n/eta) smallest, stably") {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 30);
    std::vector<double> v(n);
    for (double& x : v) x = std::floor(6 * uniform01(rng));
    const auto got = successive_halving_survivors(v, 3.0);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    idx.resize(n / 3);
    CHECK(got == idx);
  }
}

TEST_CASE("hyperband uses low fidelities and keeps the full-fidelity incumbent") {
  const Instance inst = make_real_instance("synth:hartmann3");
  const auto t = run_hyperband(inst, 30, 3.0, 1);
  CHECK(t.budget_used() <= 30.0 + 1e-9);
  CHECK(std::any_of(t.fidelity.begin(), t.fidelity.end(), [](double f) { return f < 1.0; }));
  CHECK(std::any_of(t.fidelity.begin(), t.fidelity.end(), [](double f) { return f == 1.0; }));
  check_incumbent(inst, t);
  const auto u = run_hyperband(inst, 30, 3.0, 1);
  REQUIRE(u.records.size() == t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) CHECK(t.records[i].config == u.records[i].config);
}

TEST_CASE("cumulative cost never exceeds the budget") {
  Rng rng(9);
  const Instance inst = make_real_instance("synth:branin2");
  const Instance tab = make_tabular_instance(inst, 200);
  for (int k = 0; k < 12; ++k) {
    const double budget = 11 + 30 * uniform01(rng);
    const std::uint64_t seed = rng();
    const Instance& target = k % 2 ? tab : inst;
    for (const auto& t : {run_random_search(target, budget, seed), run_hyperband(target, budget, 3.0, seed),
                          run_bo(target, bo(SurrogateKind::rf, AcqOptimizer::random), budget, seed)}) {
      double sum = 0;
      for (const auto& r : t.records) sum += r.objectives.cost;
      CHECK(sum <= budget + 1e-9);
      CHECK(t.budget_used() == doctest::Approx(sum));
    }
  }
}
