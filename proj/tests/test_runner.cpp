#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "mfhpo/runner.hpp"

using namespace mfhpo;
namespace fs = std::filesystem;

namespace {

SuiteSpec tiny_suite() {
  SuiteSpec s;
  s.name = "tiny";
  s.replications = 3;
  s.master_seed = 11;
  s.budget = 12;
  s.tabular_cap = 100;
  s.cells = {SuiteCell{"synth:branin2", InstanceMode::real, {"rs", "hb"}, {}},
             SuiteCell{"synth:currin2", InstanceMode::tabular, {"rs", "hb"}, {}}};
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mfhpo_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("budget formula") {
  const std::size_t expected[10] = {60, 77, 90, 100, 110, 118, 126, 134, 140, 147};
  for (std::size_t d = 1; d <= 10; ++d) {
    CHECK(budget_for(d) == expected[d - 1]);
    CHECK(budget_for(d) == static_cast<std::size_t>(std::ceil(20 + 40 * std::sqrt(double(d)))));
  }
  CHECK(budget_for(make_real_instance("synth:hartmann6").space()) == 118);
}

TEST_CASE("optimizer registry") {
  for (const char* id : {"rs", "rs-x4", "hb", "bo-gp-rs", "bo-rf-nm", "bo-nn-ex", "parego", "mego", "ehvi", "mies"}) {
    CHECK(is_known_optimizer(id));
  }
  CHECK_FALSE(is_known_optimizer("bo-xx-rs"));
  CHECK(is_mo_optimizer("mies"));
  CHECK_FALSE(is_mo_optimizer("hb"));
  CHECK(budget_multiplier("rs-x4") == 4.0);
  const Instance so = make_real_instance("synth:branin2");
  CHECK_THROWS_AS(run_optimizer(so, "parego", 30, 1), std::invalid_argument);
  CHECK_THROWS_AS(run_optimizer(so, "bo-rf-ex", 30, 1), std::invalid_argument);
  CHECK_THROWS_AS(run_optimizer(so, "nope", 30, 1), std::invalid_argument);
}

TEST_CASE("suite specs round trip through json") {
  for (const auto& s : builtin_suites()) {
    const auto j = suite_to_json(s);
    CHECK(suite_to_json(suite_from_json(j)) == j);
  }
  auto bad = suite_to_json(tiny_suite());
  bad["cells"][0]["optimizers"] = {"nope"};
  CHECK_THROWS_AS(suite_from_json(bad), std::invalid_argument);
  CHECK(find_builtin_suite("tabsur-desk").has_value());
  CHECK_FALSE(find_builtin_suite("none").has_value());
}

TEST_CASE("result rows round trip") {
  ResultRow r{"s", "synth:branin2", "real", "rs", 2, 7, 3.25, {0.1, 1.0 / 3.0}, 0.1, 0.5};
  const auto back = parse_result_row(format_result_row(r));
  CHECK(back.suite == r.suite);
  CHECK(back.optimizer == r.optimizer);
  CHECK(back.replication == 2);
  CHECK(back.iteration == 7);
  CHECK(back.cumulative_budget == 3.25);
  CHECK(back.objectives == r.objectives);
  CHECK(back.incumbent == r.incumbent);
  CHECK(back.fidelity == 0.5);
  r.incumbent.reset();
  CHECK_FALSE(parse_result_row(format_result_row(r)).incumbent.has_value());
  CHECK_THROWS(parse_result_row("a,b,c"));
}

TEST_CASE("seeds are distinct across cells, optimizers and replications") {
  std::set<std::uint64_t> seeds;
  for (const char* cell : {"synth:branin2/real", "synth:branin2/tabular"}) {
    for (const char* opt : {"rs", "hb"}) {
      for (std::size_t r = 0; r < 5; ++r) seeds.insert(run_seed(1, cell, opt, r));
    }
  }
  CHECK(seeds.size() == 20);
  CHECK(run_seed(1, "x/real", "rs", 0) == run_seed(1, "x/real", "rs", 0));
  CHECK(run_seed(1, "x/real", "rs", 0) != run_seed(2, "x/real", "rs", 0));
}

TEST_CASE("two cells, two optimizers and three replications give twelve trajectories") {
  const auto result = run_suite(tiny_suite());
  CHECK(result.failures.empty());
  std::set<std::tuple<std::string, std::string, std::size_t>> runs;
  for (const auto& r : result.rows) {
    runs.emplace(r.instance + "/" + r.mode, r.optimizer, r.replication);
    CHECK(r.cumulative_budget <= 12 + 1e-9);
  }
  CHECK(runs.size() == 12);
  CHECK(result.cells.size() == 2);
}

TEST_CASE("reruns write byte-identical csv files and parallel equals sequential") {
  auto spec = tiny_suite();
  const auto a = temp_dir("run_a"), b = temp_dir("run_b");
  spec.output_dir = a.string();
  run_suite(spec);
  spec.output_dir = b.string();
  RunOptions opts;
  opts.workers = 3;
  run_suite(spec, opts);
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++csvs;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(csvs == 2);
  const auto loaded = load_suite_results(a.string());
  CHECK(loaded.cells.size() == 2);
  CHECK(loaded.rows.size() == run_suite(tiny_suite()).rows.size());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("analysis of a tiny suite") {
  auto spec = tiny_suite();
  spec.cells.push_back(SuiteCell{"synth:branin2", InstanceMode::tabular, {"rs", "hb"}, {}});
  const auto result = run_suite(spec);
  const auto an = analyze_results(result.cells, result.rows, std::string("real"));
  REQUIRE(an.modes.size() == 2);
  for (const auto& m : an.modes) {
    CHECK(m.consensus.order.size() == 2);
    CHECK(m.consensus.distance_to_reference.has_value());
  }
  for (const auto& c : an.curves) {
    CHECK(c.value >= 0.0);
    CHECK(c.value <= 1.0);
  }
  const auto dir = temp_dir("analysis");
  write_analysis(an, dir.string(), true, std::string("real"));
  for (const char* f : {"curves.csv", "ranks.csv", "stats.json", "consensus.json"}) CHECK(fs::exists(dir / f));
  fs::remove_all(dir);
}
