#include "mfhpo/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mfhpo/optim_so.hpp"

namespace mfhpo {

using Json = nlohmann::json;
namespace fs = std::filesystem;

std::size_t budget_for(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("budget_for: dimension must be >= 1");
  return static_cast<std::size_t>(std::ceil(20.0 + 40.0 * std::sqrt(static_cast<double>(dim))));
}

std::size_t budget_for(const SearchSpace& space) { return budget_for(space.dim()); }

namespace {

const std::set<std::string, std::less<>> kSingleObjective = {
    "rs",       "bo-gp-rs", "bo-gp-nm", "bo-gp-ex", "bo-rf-rs", "bo-rf-nm",
    "bo-rf-ex", "bo-nn-rs", "bo-nn-nm", "bo-nn-ex", "hb"};
const std::set<std::string, std::less<>> kMultiObjective = {"rs-mo", "rs-x4", "parego", "mego", "ehvi", "mies"};

constexpr double kHyperbandEta = 3.0;

}  // namespace

bool is_known_optimizer(std::string_view id) { return kSingleObjective.count(id) || kMultiObjective.count(id); }
bool is_mo_optimizer(std::string_view id) { return kMultiObjective.count(id) > 0; }
double budget_multiplier(std::string_view id) { return id == "rs-x4" ? 4.0 : 1.0; }

OptimizerRun run_optimizer(const Instance& instance, std::string_view optimizer, double budget,
                           std::uint64_t seed) {
  if (!is_known_optimizer(optimizer)) throw std::invalid_argument("unknown optimizer '" + std::string(optimizer) + "'");
  OptimizerRun out;
  if (is_mo_optimizer(optimizer)) {
    out.multi_objective = true;
    MOResult r;
    if (optimizer == "rs-mo") r = run_random_mo(instance, budget, seed, 1);
    else if (optimizer == "rs-x4") r = run_random_mo(instance, budget, seed, 4);
    else if (optimizer == "parego") r = run_parego(instance, budget, seed);
    else if (optimizer == "mego") r = run_mego(instance, budget, seed);
    else if (optimizer == "ehvi") r = run_ehvi(instance, budget, seed);
    else r = run_mies(instance, budget, seed);
    out.trajectory = std::move(r.trajectory);
    return out;
  }
  if (optimizer == "rs") {
    out.trajectory = run_random_search(instance, budget, seed);
  } else if (optimizer == "hb") {
    out.trajectory = run_hyperband(instance, budget, kHyperbandEta, seed);
  } else {
    BOConfig cfg;
    const std::string_view kind = optimizer.substr(3, 2);
    const std::string_view acq = optimizer.substr(6, 2);
    cfg.surrogate = kind == "gp" ? SurrogateKind::gp : kind == "rf" ? SurrogateKind::rf : SurrogateKind::nn;
    cfg.acq_optimizer = acq == "rs"   ? AcqOptimizer::random
                        : acq == "nm" ? AcqOptimizer::nelder_mead
                                      : AcqOptimizer::exhaustive;
    out.trajectory = run_bo(instance, cfg, budget, seed);
  }
  return out;
}

std::string SuiteCell::key() const { return instance + "/" + std::string(to_string(mode)); }

SuiteSpec suite_from_json(const Json& j) {
  static const std::set<std::string> known = {"name",     "version",     "cells",           "replications",
                                              "master_seed", "budget",   "tabular_cap",     "surrogate_train",
                                              "output_dir"};
  if (!j.is_object()) throw std::invalid_argument("suite spec must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw std::invalid_argument("suite spec: unknown key '" + k + "'");
  }
  SuiteSpec s;
  s.name = j.at("name").get<std::string>();
  s.version = j.value("version", s.version);
  s.replications = j.value("replications", s.replications);
  s.master_seed = j.value("master_seed", s.master_seed);
  if (j.contains("budget") && !j["budget"].is_null()) s.budget = j["budget"].get<double>();
  s.tabular_cap = j.value("tabular_cap", s.tabular_cap);
  s.surrogate_train = j.value("surrogate_train", s.surrogate_train);
  s.output_dir = j.value("output_dir", s.output_dir);
  for (const auto& c : j.at("cells")) {
    SuiteCell cell;
    cell.instance = c.at("instance").get<std::string>();
    cell.mode = mode_from_string(c.value("mode", std::string("real")));
    cell.optimizers = c.at("optimizers").get<std::vector<std::string>>();
    cell.targets = c.value("targets", std::vector<std::string>{});
    s.cells.push_back(std::move(cell));
  }
  if (s.replications < 1) throw std::invalid_argument("suite spec: replications must be >= 1");
  if (s.cells.empty()) throw std::invalid_argument("suite spec: no cells");
  std::set<std::string> keys;
  for (const auto& c : s.cells) {
    if (!keys.insert(c.key()).second) throw std::invalid_argument("suite spec: duplicate cell '" + c.key() + "'");
    if (c.optimizers.empty()) throw std::invalid_argument("suite spec: cell '" + c.key() + "' has no optimizers");
    for (const auto& o : c.optimizers) {
      if (!is_known_optimizer(o)) throw std::invalid_argument("suite spec: unknown optimizer '" + o + "'");
    }
    if (c.instance.find(',') != std::string::npos) {
      throw std::invalid_argument("suite spec: instance ids cannot contain ','");
    }
  }
  return s;
}

Json suite_to_json(const SuiteSpec& s) {
  Json cells = Json::array();
  for (const auto& c : s.cells) {
    Json jc = {{"instance", c.instance}, {"mode", std::string(to_string(c.mode))}, {"optimizers", c.optimizers}};
    if (!c.targets.empty()) jc["targets"] = c.targets;
    cells.push_back(std::move(jc));
  }
  Json j = {{"name", s.name},
            {"version", s.version},
            {"cells", cells},
            {"replications", s.replications},
            {"master_seed", s.master_seed},
            {"budget", s.budget ? Json(*s.budget) : Json(nullptr)},
            {"tabular_cap", s.tabular_cap},
            {"surrogate_train", s.surrogate_train}};
  if (!s.output_dir.empty()) j["output_dir"] = s.output_dir;
  return j;
}

SuiteSpec load_suite_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suite file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("suite file '" + path + "': " + e.what());
  }
  return suite_from_json(j);
}

namespace {

std::vector<SuiteSpec> make_builtins() {
  std::vector<SuiteSpec> out;
  {
    SuiteSpec s;
    s.name = "tabsur-desk";
    s.replications = 10;
    s.budget = 50.0;
    for (const char* fn : {"branin2", "currin2", "hartmann3", "hartmann6", "borehole8"}) {
      for (const InstanceMode m : {InstanceMode::real, InstanceMode::tabular, InstanceMode::surrogate}) {
        s.cells.push_back({std::string("synth:") + fn, m, {"rs", "bo-gp-rs", "bo-rf-rs", "hb"}, {}});
      }
    }
    out.push_back(std::move(s));
  }
  {
    SuiteSpec s;
    s.name = "mo-desk";
    s.replications = 5;
    for (const InstanceMode m : {InstanceMode::real, InstanceMode::tabular}) {
      s.cells.push_back({"mo:branin2+currin2", m, {"rs-mo", "rs-x4", "parego", "mego", "ehvi", "mies"}, {}});
    }
    out.push_back(std::move(s));
  }
  {
    SuiteSpec s;
    s.name = "smoke";
    s.replications = 2;
    s.budget = 20.0;
    s.tabular_cap = 400;
    s.surrogate_train = 500;
    for (const InstanceMode m : {InstanceMode::real, InstanceMode::tabular, InstanceMode::surrogate}) {
      s.cells.push_back({"synth:branin2", m, {"rs", "bo-rf-rs", "hb"}, {}});
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

const std::vector<SuiteSpec>& builtin_suites() {
  static const std::vector<SuiteSpec> suites = make_builtins();
  return suites;
}

std::optional<SuiteSpec> find_builtin_suite(std::string_view name) {
  for (const auto& s : builtin_suites()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

std::uint64_t run_seed(std::uint64_t master_seed, const std::string& cell_key, std::string_view optimizer,
                       std::size_t replication) {
  std::uint64_t s = mix_seed(master_seed, fnv1a64(cell_key));
  s = mix_seed(s, fnv1a64(optimizer));
  return mix_seed(s, replication);
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::string cell_file_name(const std::string& key) {
  std::string out;
  for (const char c : key) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_' ? c : '_');
  }
  return out + ".csv";
}

}  // namespace

std::string format_result_row(const ResultRow& r) {
  std::string obj;
  for (std::size_t j = 0; j < r.objectives.size(); ++j) {
    if (j) obj += ';';
    obj += fmt_double(r.objectives[j]);
  }
  return r.suite + ',' + r.instance + ',' + r.mode + ',' + r.optimizer + ',' + std::to_string(r.replication) + ',' +
         std::to_string(r.iteration) + ',' + fmt_double(r.cumulative_budget) + ',' + obj + ',' +
         (r.incumbent ? fmt_double(*r.incumbent) : std::string()) + ',' + fmt_double(r.fidelity);
}

ResultRow parse_result_row(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != 10) throw std::invalid_argument("result row has " + std::to_string(f.size()) + " fields, expected 10");
  ResultRow r;
  r.suite = f[0];
  r.instance = f[1];
  r.mode = f[2];
  r.optimizer = f[3];
  r.replication = std::stoull(f[4]);
  r.iteration = std::stoull(f[5]);
  r.cumulative_budget = parse_double(f[6]);
  for (const auto& v : split(f[7], ';')) r.objectives.push_back(parse_double(v));
  if (!f[8].empty()) r.incumbent = parse_double(f[8]);
  r.fidelity = parse_double(f[9]);
  return r;
}

void write_result_csv(const std::string& path, std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.optimizer, a.replication, a.iteration) < std::tie(b.optimizer, b.replication, b.iteration);
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << kResultHeader << '\n';
  for (const auto& r : rows) out << format_result_row(r) << '\n';
}

std::vector<ResultRow> read_result_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) {
    throw std::runtime_error("'" + path + "' does not start with the result header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_result_row(line));
  }
  return rows;
}

// ---------------------------------------------------------------------------

Instance build_instance(const std::string& benchmark, InstanceMode mode, const SuiteSpec& spec,
                        std::optional<SurrogateQuality>* quality) {
  if (benchmark.starts_with("file:")) {
    Instance inst = load_instance(benchmark.substr(5));
    if (inst.mode() != mode) {
      throw std::invalid_argument("instance file '" + benchmark.substr(5) + "' holds a " +
                                  std::string(to_string(inst.mode())) + " instance");
    }
    return inst;
  }
  Instance real = make_real_instance(benchmark);
  switch (mode) {
    case InstanceMode::real:
      return real;
    case InstanceMode::tabular:
      return make_tabular_instance(real, spec.tabular_cap);
    case InstanceMode::surrogate: {
      SurrogateResult r = make_surrogate_instance(real, spec.surrogate_train, SurrogateOptions{},
                                                  mix_seed(spec.master_seed, fnv1a64(benchmark)));
      if (quality) *quality = r.quality;
      return std::move(r.instance);
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

Json quality_json(const SurrogateQuality& q) {
  Json rho = Json::array();
  for (const auto& r : q.rho) rho.push_back(r ? Json(*r) : Json(nullptr));
  return {{"target_ids", q.target_ids}, {"rho", rho}, {"n_train", q.n_train}, {"n_test", q.n_test},
          {"faithful", q.faithful}};
}

}  // namespace

SuiteResult run_suite(const SuiteSpec& spec, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult result;
  const std::size_t n_cells = spec.cells.size();

  std::vector<std::optional<Instance>> instances(n_cells);
  std::vector<std::optional<SurrogateQuality>> qualities(n_cells);
  std::vector<std::string> build_errors(n_cells);
  parallel_for(n_cells, options.workers, [&](std::size_t c) {
    try {
      instances[c] = build_instance(spec.cells[c].instance, spec.cells[c].mode, spec, &qualities[c]);
      const auto& targets = spec.cells[c].targets;
      for (const auto& t : targets) {
        const auto ids = instances[c]->target_ids();
        if (std::find(ids.begin(), ids.end(), t) == ids.end()) {
          throw std::invalid_argument("unknown target '" + t + "'");
        }
      }
    } catch (const std::exception& e) {
      instances[c].reset();
      build_errors[c] = e.what();
    }
    if (options.progress) options.progress("built " + spec.cells[c].key());
  });

  struct Task {
    std::size_t cell;
    std::string optimizer;
    std::size_t replication;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < n_cells; ++c) {
    CellInfo info;
    info.key = spec.cells[c].key();
    info.instance = spec.cells[c].instance;
    info.mode = std::string(to_string(spec.cells[c].mode));
    info.file = cell_file_name(info.key);
    if (instances[c]) {
      const Instance& inst = *instances[c];
      info.budget = spec.budget ? *spec.budget : static_cast<double>(budget_for(inst.space()));
      info.target_ids.assign(inst.target_ids().begin(), inst.target_ids().end());
      info.directions.assign(inst.directions().begin(), inst.directions().end());
      info.quality = qualities[c];
      for (const auto& o : spec.cells[c].optimizers) {
        for (std::size_t r = 0; r < spec.replications; ++r) tasks.push_back({c, o, r});
      }
    } else {
      result.failures.push_back({info.key, "", 0, "instance construction failed: " + build_errors[c]});
    }
    result.cells.push_back(std::move(info));
  }

  std::vector<std::vector<ResultRow>> task_rows(tasks.size());
  std::vector<std::string> task_errors(tasks.size());
  std::mutex progress_mutex;
  parallel_for(tasks.size(), options.workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const CellInfo& info = result.cells[task.cell];
    try {
      const std::uint64_t seed = run_seed(spec.master_seed, info.key, task.optimizer, task.replication);
      const OptimizerRun run = run_optimizer(*instances[task.cell], task.optimizer, info.budget, seed);
      const Trajectory& traj = run.trajectory;
      for (std::size_t i = 0; i < traj.records.size(); ++i) {
        ResultRow row;
        row.suite = spec.name;
        row.instance = info.instance;
        row.mode = info.mode;
        row.optimizer = task.optimizer;
        row.replication = task.replication;
        row.iteration = i;
        row.cumulative_budget = traj.records[i].cumulative_budget;
        row.objectives = traj.records[i].objectives.values;
        if (!run.multi_objective && std::isfinite(traj.incumbent[i])) row.incumbent = traj.incumbent[i];
        row.fidelity = traj.fidelity[i];
        task_rows[t].push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      task_errors[t] = e.what();
      task_rows[t].clear();
    }
    if (options.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      options.progress(info.key + " " + task.optimizer + " #" + std::to_string(task.replication));
    }
  });

  std::vector<std::vector<ResultRow>> cell_rows(n_cells);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!task_errors[t].empty()) {
      result.failures.push_back({result.cells[tasks[t].cell].key, tasks[t].optimizer, tasks[t].replication,
                                 task_errors[t]});
    }
    auto& dst = cell_rows[tasks[t].cell];
    std::move(task_rows[t].begin(), task_rows[t].end(), std::back_inserter(dst));
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json cells = Json::array();
  for (std::size_t c = 0; c < n_cells; ++c) {
    const CellInfo& info = result.cells[c];
    Json dirs = Json::array();
    for (const auto d : info.directions) dirs.push_back(std::string(to_string(d)));
    Json jc = {{"key", info.key},       {"instance", info.instance}, {"mode", info.mode},
               {"file", info.file},     {"budget", info.budget},     {"target_ids", info.target_ids},
               {"directions", dirs},    {"ok", instances[c].has_value()}};
    if (info.quality) jc["surrogate_quality"] = quality_json(*info.quality);
    cells.push_back(std::move(jc));
  }
  Json failures = Json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"cell", f.cell}, {"optimizer", f.optimizer}, {"replication", f.replication},
                        {"message", f.message}});
  }
  result.manifest = {{"format", "mfhpo-suite-results"},
                     {"version", std::string(kVersion)},
                     {"suite", suite_to_json(spec)},
                     {"cells", cells},
                     {"runs", tasks.size()},
                     {"failures", failures},
                     {"wall_seconds", result.wall_seconds}};

  if (!spec.output_dir.empty()) {
    fs::create_directories(spec.output_dir);
    for (std::size_t c = 0; c < n_cells; ++c) {
      write_result_csv((fs::path(spec.output_dir) / result.cells[c].file).string(), cell_rows[c]);
    }
    std::ofstream out(fs::path(spec.output_dir) / "manifest.json");
    out << result.manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest in '" + spec.output_dir + "'");
  }
  for (auto& rows : cell_rows) std::move(rows.begin(), rows.end(), std::back_inserter(result.rows));
  return result;
}

SuiteResult load_suite_results(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in '" + dir + "'");
  SuiteResult result;
  try {
    result.manifest = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(std::string("manifest.json: ") + e.what());
  }
  if (result.manifest.value("format", "") != "mfhpo-suite-results") {
    throw std::runtime_error("manifest.json is not a suite result manifest");
  }
  for (const auto& jc : result.manifest.at("cells")) {
    CellInfo info;
    info.key = jc.at("key").get<std::string>();
    info.instance = jc.at("instance").get<std::string>();
    info.mode = jc.at("mode").get<std::string>();
    info.file = jc.at("file").get<std::string>();
    info.budget = jc.at("budget").get<double>();
    info.target_ids = jc.at("target_ids").get<std::vector<std::string>>();
    for (const auto& d : jc.at("directions")) {
      info.directions.push_back(d.get<std::string>() == "maximize" ? Direction::maximize : Direction::minimize);
    }
    if (jc.value("ok", false)) {
      auto rows = read_result_csv((fs::path(dir) / info.file).string());
      std::move(rows.begin(), rows.end(), std::back_inserter(result.rows));
    }
    result.cells.push_back(std::move(info));
  }
  result.wall_seconds = result.manifest.value("wall_seconds", 0.0);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

double orient(Direction d, double v) { return d == Direction::minimize ? v : -v; }

}  // namespace

SuiteAnalysis analyze_results(std::span<const CellInfo> cells, std::span<const ResultRow> rows,
                              const std::optional<std::string>& reference_mode) {
  SuiteAnalysis out;
  // cell key -> optimizer -> replication -> rows in iteration order
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::vector<const ResultRow*>>>> grouped;
  for (const auto& r : rows) grouped[r.instance + "/" + r.mode][r.optimizer][r.replication].push_back(&r);
  for (auto& [k, by_opt] : grouped) {
    for (auto& [o, by_rep] : by_opt) {
      for (auto& [rep, list] : by_rep) {
        std::sort(list.begin(), list.end(), [](const ResultRow* a, const ResultRow* b) { return a->iteration < b->iteration; });
      }
    }
  }

  // mode -> benchmark -> optimizer -> curves by replication
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<RegretCurve>>>> curves;
  std::map<std::string, double> budget_of;
  for (const auto& cell : cells) {
    const auto it = grouped.find(cell.key);
    if (it == grouped.end()) continue;
    budget_of[cell.key] = cell.budget;
    const bool mo = std::all_of(it->second.begin(), it->second.end(),
                                [](const auto& kv) { return is_mo_optimizer(kv.first); }) &&
                    cell.target_ids.size() >= 2;
    std::vector<std::pair<std::string, std::size_t>> ids;
    std::vector<RegretCurve> cell_curves;
    if (!mo) {
      std::vector<RunTrace> traces;
      for (const auto& [o, by_rep] : it->second) {
        for (const auto& [rep, list] : by_rep) {
          RunTrace t;
          t.optimizer = o;
          t.replication = rep;
          for (const ResultRow* r : list) {
            t.cumulative_budget.push_back(r->cumulative_budget / budget_multiplier(o));
            t.value.push_back(orient(cell.directions[0], r->objectives[0]));
            t.full_fidelity.push_back(r->fidelity >= 1.0 - 1e-12);
          }
          traces.push_back(std::move(t));
          ids.emplace_back(o, rep);
        }
      }
      RegretResult reg = normalized_regret(traces);
      if (reg.degenerate) out.flags.push_back(cell.key + ": degenerate objective range");
      cell_curves = std::move(reg.curves);
    } else {
      std::vector<Point> pooled;
      for (const auto& [o, by_rep] : it->second) {
        for (const auto& [rep, list] : by_rep) {
          for (const ResultRow* r : list) {
            Point p(r->objectives.size());
            for (std::size_t j = 0; j < p.size(); ++j) p[j] = orient(cell.directions[j], r->objectives[j]);
            pooled.push_back(std::move(p));
          }
        }
      }
      const HVContext ctx = HVContext::from_points(pooled);
      for (const auto& [o, by_rep] : it->second) {
        for (const auto& [rep, list] : by_rep) {
          std::vector<double> budget;
          std::vector<Point> pts;
          for (const ResultRow* r : list) {
            budget.push_back(r->cumulative_budget / budget_multiplier(o));
            Point p(r->objectives.size());
            for (std::size_t j = 0; j < p.size(); ++j) p[j] = orient(cell.directions[j], r->objectives[j]);
            pts.push_back(std::move(p));
          }
          const HVTrace hv = hv_trajectory(budget, pts, ctx);
          RegretCurve c;
          c.budget = hv.budget;
          for (const double h : hv.hv) c.regret.push_back(1.0 - h);
          cell_curves.push_back(std::move(c));
          ids.emplace_back(o, rep);
        }
      }
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const RegretCurve& c = cell_curves[i];
      for (std::size_t p = 0; p < c.budget.size(); ++p) {
        out.curves.push_back({cell.instance, cell.mode, ids[i].first, ids[i].second, c.budget[p], c.regret[p]});
      }
      curves[cell.mode][cell.instance][ids[i].first].push_back(c);
    }
  }

  std::map<std::string, Ordering> consensus_by_mode;
  for (const auto& [mode, by_bench] : curves) {
    ModeAnalysis ma;
    ma.mode = mode;
    // Optimizers present on every benchmark of the mode.
    std::map<std::string, std::size_t> seen;
    for (const auto& [bench, by_opt] : by_bench) {
      for (const auto& [o, c] : by_opt) ++seen[o];
    }
    for (const auto& [o, count] : seen) {
      if (count == by_bench.size()) ma.optimizers.push_back(o);
      else out.flags.push_back(mode + ": optimizer '" + o + "' missing on some benchmarks, excluded");
    }
    if (ma.optimizers.empty()) continue;
    std::vector<BenchmarkCurves> data;
    for (const auto& [bench, by_opt] : by_bench) {
      BenchmarkCurves bc;
      bc.benchmark = bench;
      bc.budget = budget_of[bench + "/" + mode];
      std::size_t reps = std::numeric_limits<std::size_t>::max();
      for (const auto& o : ma.optimizers) reps = std::min(reps, by_opt.at(o).size());
      for (const auto& o : ma.optimizers) {
        const auto& all = by_opt.at(o);
        if (all.size() != reps) out.flags.push_back(bench + "/" + mode + ": replications truncated to " + std::to_string(reps));
        bc.by_optimizer.emplace_back(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(reps));
      }
      data.push_back(std::move(bc));
    }
    ma.ranks = anytime_ranks(data, ma.optimizers);
    for (std::size_t b = 0; b < ma.ranks.benchmarks.size(); ++b) {
      ma.orderings.push_back(ordering_from_ranks(ma.optimizers, ma.ranks.ranks.row(b)));
    }
    if (ma.optimizers.size() <= kMaxConsensusItems) ma.consensus = kemeny_consensus(ma.orderings);
    if (ma.ranks.ranks.rows >= 2 && ma.optimizers.size() >= 2) ma.friedman = friedman_test(ma.ranks.ranks);
    if (ma.ranks.ranks.rows >= 2 && ma.optimizers.size() >= 2 && ma.optimizers.size() <= 10) {
      ma.critical_difference = nemenyi_cd(ma.optimizers.size(), ma.ranks.ranks.rows);
    }
    consensus_by_mode[mode] = ma.consensus.order;
    out.modes.push_back(std::move(ma));
  }
  if (reference_mode) {
    const auto ref = consensus_by_mode.find(*reference_mode);
    if (ref == consensus_by_mode.end()) {
      out.flags.push_back("reference mode '" + *reference_mode + "' has no results");
    } else {
      for (auto& ma : out.modes) {
        Ordering a = ma.consensus.order, b = ref->second;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b && !a.empty()) {
          ma.consensus.distance_to_reference = kendall_distance(ma.consensus.order, ref->second);
        } else {
          out.flags.push_back(ma.mode + ": optimizer set differs from the reference mode");
        }
      }
    }
  }
  return out;
}

void write_analysis(const SuiteAnalysis& a, const std::string& dir, bool consensus,
                    const std::optional<std::string>& reference_mode) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "curves.csv", std::ios::binary);
    out << "instance,mode,optimizer,replication,cumulative_budget,value\n";
    for (const auto& c : a.curves) {
      out << c.instance << ',' << c.mode << ',' << c.optimizer << ',' << c.replication << ','
          << fmt_double(c.cumulative_budget) << ',' << fmt_double(c.value) << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "ranks.csv", std::ios::binary);
    out << "mode,benchmark,optimizer,rank\n";
    for (const auto& m : a.modes) {
      for (std::size_t b = 0; b < m.ranks.benchmarks.size(); ++b) {
        for (std::size_t o = 0; o < m.optimizers.size(); ++o) {
          out << m.mode << ',' << m.ranks.benchmarks[b] << ',' << m.optimizers[o] << ','
              << fmt_double(m.ranks.ranks(b, o)) << '\n';
        }
      }
    }
  }
  {
    Json stats = Json::object();
    for (const auto& m : a.modes) {
      Json mean_rank = Json::object();
      for (std::size_t o = 0; o < m.optimizers.size(); ++o) {
        double s = 0.0;
        for (std::size_t b = 0; b < m.ranks.ranks.rows; ++b) s += m.ranks.ranks(b, o);
        mean_rank[m.optimizers[o]] = m.ranks.ranks.rows ? s / static_cast<double>(m.ranks.ranks.rows) : 0.0;
      }
      Json jm = {{"benchmarks", m.ranks.ranks.rows}, {"optimizers", m.optimizers}, {"mean_rank", mean_rank}};
      if (m.friedman) jm["friedman"] = {{"statistic", m.friedman->statistic}, {"p_value", m.friedman->p_value}};
      if (m.critical_difference) jm["critical_difference"] = {{"alpha", 0.05}, {"value", *m.critical_difference}};
      stats[m.mode] = std::move(jm);
    }
    std::ofstream out(fs::path(dir) / "stats.json");
    out << Json({{"modes", stats}, {"flags", a.flags}}).dump(2) << '\n';
  }
  if (consensus) {
    Json modes = Json::object();
    for (const auto& m : a.modes) {
      Json jm = {{"ordering", m.consensus.order}, {"total_distance", m.consensus.total_distance},
                 {"rankings", m.orderings}};
      jm["distance_to_reference"] =
          m.consensus.distance_to_reference ? Json(*m.consensus.distance_to_reference) : Json(nullptr);
      modes[m.mode] = std::move(jm);
    }
    Json j = {{"distance_measure", "kendall_discordant_pairs"},
              {"reference", reference_mode ? Json(*reference_mode) : Json(nullptr)},
              {"modes", modes}};
    std::ofstream out(fs::path(dir) / "consensus.json");
    out << j.dump(2) << '\n';
  }
}

}  // namespace mfhpo
