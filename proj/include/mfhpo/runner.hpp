#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfhpo/analysis.hpp"
#include "mfhpo/instances.hpp"
#include "mfhpo/optim_mo.hpp"

namespace mfhpo {

inline constexpr std::string_view kVersion = "1.0.0";

// ceil(20 + 40 sqrt(D)) full-fidelity evaluations.
std::size_t budget_for(std::size_t dim);
// D excludes the budget parameter.
std::size_t budget_for(const SearchSpace& space);

bool is_known_optimizer(std::string_view id);
bool is_mo_optimizer(std::string_view id);
// Budget multiplier of an optimizer (4 for rs-x4).
double budget_multiplier(std::string_view id);

struct OptimizerRun {
  Trajectory trajectory;
  bool multi_objective = false;
};

// Throws std::invalid_argument for unknown ids or ids that do not fit the
// instance (multi-objective on one target, exhaustive off-table, hb without a
// budget parameter).
OptimizerRun run_optimizer(const Instance& instance, std::string_view optimizer, double budget,
                           std::uint64_t seed);

struct SuiteCell {
  std::string instance;
  InstanceMode mode = InstanceMode::real;
  std::vector<std::string> optimizers;
  // Empty = every target of the instance.
  std::vector<std::string> targets;

  std::string key() const;
};

struct SuiteSpec {
  std::string name;
  std::string version = "1.0";
  std::vector<SuiteCell> cells;
  std::size_t replications = 30;
  std::uint64_t master_seed = 0;
  // Flat budget for every cell; budget_for(space) when unset.
  std::optional<double> budget;
  std::size_t tabular_cap = 10000;
  std::size_t surrogate_train = 10000;
  std::string output_dir;
};

SuiteSpec suite_from_json(const nlohmann::json& j);
nlohmann::json suite_to_json(const SuiteSpec& spec);
SuiteSpec load_suite_file(const std::string& path);

const std::vector<SuiteSpec>& builtin_suites();
std::optional<SuiteSpec> find_builtin_suite(std::string_view name);

std::uint64_t run_seed(std::uint64_t master_seed, const std::string& cell_key, std::string_view optimizer,
                       std::size_t replication);

struct ResultRow {
  std::string suite;
  std::string instance;
  std::string mode;
  std::string optimizer;
  std::size_t replication = 0;
  std::size_t iteration = 0;
  double cumulative_budget = 0.0;
  std::vector<double> objectives;
  // Best-so-far of target 0 for single-objective runs; unset before the first
  // full-fidelity evaluation and for multi-objective runs.
  std::optional<double> incumbent;
  double fidelity = 1.0;
};

inline constexpr std::string_view kResultHeader =
    "suite,instance,mode,optimizer,replication,iteration,cumulative_budget,objectives,incumbent,fidelity";

std::string format_result_row(const ResultRow& row);
ResultRow parse_result_row(const std::string& line);
// Sorted by (optimizer, replication, iteration).
void write_result_csv(const std::string& path, std::vector<ResultRow> rows);
std::vector<ResultRow> read_result_csv(const std::string& path);

struct CellInfo {
  std::string key;
  std::string instance;
  std::string mode;
  std::string file;
  double budget = 0.0;
  std::vector<std::string> target_ids;
  std::vector<Direction> directions;
  std::optional<SurrogateQuality> quality;
};

struct RunFailure {
  std::string cell;
  std::string optimizer;
  std::size_t replication = 0;
  std::string message;
};

struct SuiteResult {
  std::vector<CellInfo> cells;
  std::vector<ResultRow> rows;
  std::vector<RunFailure> failures;
  double wall_seconds = 0.0;
  nlohmann::json manifest;
};

struct RunOptions {
  std::size_t workers = 1;
  std::function<void(const std::string&)> progress;
};

// Builds each cell's instance once, runs every (cell, optimizer,
// replication), and writes per-cell CSVs plus manifest.json when the spec
// names an output directory.
SuiteResult run_suite(const SuiteSpec& spec, const RunOptions& options = {});

// Instance for a (benchmark, mode) pair under the suite's settings.
Instance build_instance(const std::string& benchmark, InstanceMode mode, const SuiteSpec& spec,
                        std::optional<SurrogateQuality>* quality = nullptr);

// ---------------------------------------------------------------------------
// Analysis over suite results.

struct ModeAnalysis {
  std::string mode;
  std::vector<std::string> optimizers;
  RankMatrix ranks;  // anytime ranks, benchmarks x optimizers
  std::vector<Ordering> orderings;
  ConsensusResult consensus;
  std::optional<FriedmanResult> friedman;
  std::optional<double> critical_difference;
};

struct CurveRow {
  std::string instance;
  std::string mode;
  std::string optimizer;
  std::size_t replication;
  double cumulative_budget;
  // Normalized regret (single-objective) or 1 - normalized hypervolume.
  double value;
};

struct SuiteAnalysis {
  std::vector<CurveRow> curves;
  std::vector<ModeAnalysis> modes;
  std::vector<std::string> flags;
};

SuiteAnalysis analyze_results(std::span<const CellInfo> cells, std::span<const ResultRow> rows,
                              const std::optional<std::string>& reference_mode);

// Reads manifest.json and the per-cell CSVs of a result directory.
SuiteResult load_suite_results(const std::string& dir);

// Writes curves.csv, ranks.csv, stats.json and, when requested, consensus.json.
void write_analysis(const SuiteAnalysis& analysis, const std::string& dir, bool consensus,
                    const std::optional<std::string>& reference_mode);

}  // namespace mfhpo
