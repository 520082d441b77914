#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mfhpo/instances.hpp"
#include "mfhpo/runner.hpp"
#include "mfhpo/simd.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

mfhpo::SuiteSpec resolve_suite(const std::string& suite, const std::string& spec_file) {
  if (suite.empty() == spec_file.empty()) throw UsageError("give exactly one of --suite or --spec");
  if (!spec_file.empty()) {
    try {
      return mfhpo::load_suite_file(spec_file);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  auto s = mfhpo::find_builtin_suite(suite);
  if (!s) throw UsageError("unknown suite '" + suite + "' (see 'suite list')");
  return *s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity HPO benchmarking: suites, instances and analysis"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a benchmark suite");
  std::string suite, spec_file, out_dir, mode, optimizers;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<double> budget;
  std::size_t workers = 1;
  bool quiet = false;
  run->add_option("--suite", suite, "Built-in suite name");
  run->add_option("--spec", spec_file, "Suite spec JSON file");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--reps", reps, "Replications per optimizer")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--mode", mode, "Only cells of this mode")->check(CLI::IsMember({"real", "tabular", "surrogate"}));
  run->add_option("--optimizers", optimizers, "Comma-separated optimizer ids replacing each cell's list");
  run->add_option("--budget", budget, "Flat budget in full-fidelity evaluations")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "No progress output");

  // tabulate
  auto* tab = app.add_subcommand("tabulate", "Pre-evaluate a benchmark on a grid and save the table");
  std::string tab_instance, tab_out;
  std::size_t tab_cap = 10000;
  tab->add_option("--instance", tab_instance, "Benchmark id, e.g. synth:branin2")->required();
  tab->add_option("--cap", tab_cap, "Non-budget grid size cap")->check(CLI::PositiveNumber);
  tab->add_option("--out", tab_out, "Instance file to write")->required();

  // fit-surrogate
  auto* fit = app.add_subcommand("fit-surrogate", "Train an MLP-ensemble surrogate and save it");
  std::string fit_instance, fit_out;
  std::size_t n_train = 10000, members = 1;
  std::uint64_t fit_seed = 0;
  bool noisy = false;
  fit->add_option("--instance", fit_instance, "Benchmark id, e.g. synth:hartmann6")->required();
  fit->add_option("--n-train", n_train, "Training sample size")->check(CLI::PositiveNumber);
  fit->add_option("--members", members, "Ensemble members")->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_seed, "Seed");
  fit->add_flag("--noisy", noisy, "Dirichlet-weighted ensemble predictions");
  fit->add_option("--out", fit_out, "Instance file to write")->required();

  // analyze
  auto* ana = app.add_subcommand("analyze", "Regret/HV curves, ranks, tests and consensus rankings");
  std::string ana_in, ana_out, reference;
  bool consensus = false;
  ana->add_option("--in", ana_in, "Result directory written by 'run'")->required();
  ana->add_option("--out", ana_out, "Output directory (default: <in>/analysis)");
  ana->add_flag("--consensus", consensus, "Write consensus.json");
  ana->add_option("--reference", reference, "Mode whose consensus is the reference");

  // suite list
  auto* suite_cmd = app.add_subcommand("suite", "Suite registry");
  suite_cmd->require_subcommand(1);
  auto* suite_list = suite_cmd->add_subcommand("list", "List built-in suites");

  // isa
  auto* isa = app.add_subcommand("isa", "Print the active SIMD kernel set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      mfhpo::SuiteSpec spec = resolve_suite(suite, spec_file);
      if (seed) spec.master_seed = *seed;
      if (reps) spec.replications = *reps;
      if (budget) spec.budget = *budget;
      spec.output_dir = out_dir;
      if (!mode.empty()) {
        std::erase_if(spec.cells, [&](const mfhpo::SuiteCell& c) { return mfhpo::to_string(c.mode) != mode; });
        if (spec.cells.empty()) throw UsageError("suite has no cells in mode '" + mode + "'");
      }
      if (!optimizers.empty()) {
        const auto list = split_list(optimizers);
        for (const auto& o : list) {
          if (!mfhpo::is_known_optimizer(o)) throw UsageError("unknown optimizer '" + o + "'");
        }
        for (auto& c : spec.cells) c.optimizers = list;
      }
      mfhpo::RunOptions opts;
      opts.workers = workers;
      if (!quiet) opts.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
      const auto result = mfhpo::run_suite(spec, opts);
      std::cout << "suite " << spec.name << ": " << result.manifest["runs"].get<std::size_t>() << " runs, "
                << result.failures.size() << " failures, " << result.wall_seconds << " s -> " << out_dir << '\n';
      for (const auto& f : result.failures) {
        std::cerr << "failure: " << f.cell << ' ' << f.optimizer << " #" << f.replication << ": " << f.message << '\n';
      }
      return result.failures.empty() ? 0 : 1;
    }
    if (*tab) {
      const mfhpo::Instance real = mfhpo::make_real_instance(tab_instance);
      const mfhpo::Instance t = mfhpo::make_tabular_instance(real, tab_cap);
      mfhpo::save_instance(t, tab_out);
      std::cout << "tabulated " << tab_instance << ": " << t.table()->size() << " rows -> " << tab_out << '\n';
      return 0;
    }
    if (*fit) {
      const mfhpo::Instance real = mfhpo::make_real_instance(fit_instance);
      mfhpo::SurrogateOptions opts;
      opts.model.members = members;
      opts.noisy = noisy;
      const auto r = mfhpo::make_surrogate_instance(real, n_train, opts, fit_seed);
      mfhpo::save_instance(r.instance, fit_out, r.quality);
      for (std::size_t j = 0; j < r.quality.target_ids.size(); ++j) {
        std::cout << r.quality.target_ids[j] << ": spearman rho = ";
        if (r.quality.rho[j]) std::cout << *r.quality.rho[j];
        else std::cout << "degenerate";
        std::cout << '\n';
      }
      std::cout << (r.quality.faithful ? "faithful" : "UNFAITHFUL") << " -> " << fit_out << '\n';
      return 0;
    }
    if (*ana) {
      const auto results = mfhpo::load_suite_results(ana_in);
      std::optional<std::string> ref;
      if (!reference.empty()) ref = reference;
      const auto analysis = mfhpo::analyze_results(results.cells, results.rows, ref);
      const std::string dir = ana_out.empty() ? (std::filesystem::path(ana_in) / "analysis").string() : ana_out;
      mfhpo::write_analysis(analysis, dir, consensus, ref);
      for (const auto& m : analysis.modes) {
        std::cout << m.mode << ": consensus";
        for (const auto& o : m.consensus.order) std::cout << ' ' << o;
        if (m.consensus.distance_to_reference) std::cout << " (kendall distance to reference " << *m.consensus.distance_to_reference << ')';
        std::cout << '\n';
      }
      for (const auto& f : analysis.flags) std::cerr << "note: " << f << '\n';
      return 0;
    }
    if (*suite_list) {
      for (const auto& s : mfhpo::builtin_suites()) {
        std::vector<std::string> instances;
        for (const auto& c : s.cells) {
          if (std::find(instances.begin(), instances.end(), c.instance) == instances.end()) instances.push_back(c.instance);
        }
        std::cout << s.name << ": " << instances.size() << " instances, " << s.cells.size() << " cells, "
                  << s.replications << " replications\n";
      }
      return 0;
    }
    if (*isa) {
      std::cout << mfhpo::simd::isa_name(mfhpo::simd::active_isa()) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
