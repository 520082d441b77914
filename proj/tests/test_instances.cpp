#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mfhpo/instances.hpp"

using namespace mfhpo;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mfhpo_test_" + name)).string();
}

}  // namespace

TEST_CASE("real synthetic instances evaluate the function") {
  const Instance inst = make_real_instance("synth:branin2");
  CHECK(inst.targets() == 1);
  CHECK(inst.space().dim() == 2);
  CHECK(inst.directions()[0] == Direction::minimize);
  const SyntheticFunction fn(SyntheticId::branin2);
  Rng rng(1);
  for (const auto& c : sample(inst.space(), rng, 50)) {
    const auto z = fidelity_of(inst.space(), c).value();
    const auto r = inst.evaluate(c);
    CHECK(r.values[0] == fn(std::span(c.values).first(2), z));
    CHECK(r.cost == doctest::Approx(z));
    CHECK(inst.cost_of(c) == r.cost);
  }
  CHECK_THROWS_AS(inst.evaluate(Configuration{{100.0, 1.0, 1.0}}), InvalidConfiguration);
}

TEST_CASE("composite instances report two objectives with their directions") {
  const Instance inst = make_real_instance("mo:branin2+currin2");
  REQUIRE(inst.targets() == 2);
  CHECK(inst.directions()[0] == Direction::minimize);
  CHECK(inst.directions()[1] == Direction::maximize);
  Rng rng(2);
  const auto c = with_fidelity(inst.space(), sample_one(inst.space(), rng), 1.0);
  const auto v = inst.evaluate(c).values;
  const SyntheticFunction br(SyntheticId::branin2), cu(SyntheticId::currin2);
  const std::vector<double> xb{-5 + 15 * c.values[0], 15 * c.values[1]};
  CHECK(v[0] == doctest::Approx(br(xb)));
  CHECK(v[1] == doctest::Approx(-cu(std::span(c.values).first(2))));
  CHECK_THROWS(make_real_instance("mo:branin2+hartmann3"));
}

TEST_CASE("tabular lookup equals brute-force nearest grid point") {
  const Instance real = make_real_instance("synth:hartmann3");
  const Instance tab = make_tabular_instance(real, 300);
  const TabularTable& table = *tab.table();
  std::vector<Configuration> grid;
  for (std::size_t i = 0; i < table.size(); ++i) grid.push_back(table.config(i));
  Rng rng(3);
  for (const auto& c : sample(real.space(), rng, 300)) {
    const std::size_t i = nearest_grid_index(real.space(), grid, c);
    CHECK(table.nearest(c) == i);
    CHECK(tab.evaluate(c).values[0] == table.values(i)[0]);
  }
  for (std::size_t i = 0; i < table.size(); i += 41) {
    CHECK(table.values(i)[0] == real.evaluate(grid[i]).values[0]);
  }
}

TEST_CASE("tabular instances save and load unchanged") {
  const Instance real = make_real_instance("synth:branin2");
  const Instance tab = make_tabular_instance(real, 100);
  const std::string path = temp_file("tab.bin");
  save_instance(tab, path);
  const Instance back = load_instance(path);
  CHECK(back.mode() == InstanceMode::tabular);
  CHECK(back.id() == tab.id());
  REQUIRE(back.table()->size() == tab.table()->size());
  CHECK(back.table()->value_matrix().data == tab.table()->value_matrix().data);
  CHECK(read_instance_header(path).find("tabular") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt instance files are rejected") {
  const std::string path = temp_file("bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not an instance";
  }
  CHECK_THROWS(load_instance(path));
  std::filesystem::remove(path);
}

TEST_CASE("small surrogate is faithful and survives a save and load") {
  const Instance real = make_real_instance("synth:branin2");
  const auto r = make_surrogate_instance(real, 800, SurrogateOptions{}, 5);
  CHECK(r.instance.mode() == InstanceMode::surrogate);
  CHECK(r.quality.n_train + r.quality.n_test == 800);
  REQUIRE(r.quality.rho[0].has_value());
  CHECK(*r.quality.rho[0] > 0.8);
  CHECK(r.quality.faithful);
  const std::string path = temp_file("sur.bin");
  save_instance(r.instance, path, r.quality);
  const Instance back = load_instance(path);
  Rng rng(4);
  for (const auto& c : sample(real.space(), rng, 30)) {
    CHECK(back.evaluate(c).values[0] == r.instance.evaluate(c).values[0]);
  }
  std::filesystem::remove(path);
}
