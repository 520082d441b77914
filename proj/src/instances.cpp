#include "mfhpo/instances.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mfhpo {

namespace {

using Json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "instance files assume a little-endian host");

constexpr char kMagic[8] = {'M', 'F', 'H', 'P', 'O', 'I', 'N', 'S'};

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::minimize ? "minimize" : "maximize"; }

std::string_view to_string(InstanceMode mode) {
  switch (mode) {
    case InstanceMode::real: return "real";
    case InstanceMode::tabular: return "tabular";
    case InstanceMode::surrogate: return "surrogate";
  }
  return "?";
}

InstanceMode mode_from_string(std::string_view s) {
  if (s == "real") return InstanceMode::real;
  if (s == "tabular") return InstanceMode::tabular;
  if (s == "surrogate") return InstanceMode::surrogate;
  throw std::invalid_argument("unknown instance mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

TabularTable::TabularTable(SearchSpace space, GridAxes axes, Matrix values)
    : space_(std::move(space)), encoder_(space_), axes_(std::move(axes)), values_(std::move(values)) {
  if (axes_.axes.size() != space_.size()) throw std::invalid_argument("TabularTable: axes do not match space");
  if (axes_.size() != values_.rows) throw std::invalid_argument("TabularTable: one row per grid point");
}

std::size_t TabularTable::nearest(const Configuration& config) const {
  std::size_t index = 0;
  for (std::size_t d = 0; d < axes_.axes.size(); ++d) {
    const auto& axis = axes_.axes[d];
    const ParamDef& p = space_.param(d);
    std::size_t best = 0;
    if (p.numeric()) {
      const double target = encoder_.unit(d, config.values[d]);
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < axis.size(); ++k) {
        const double diff = encoder_.unit(d, axis[k]) - target;
        if (diff * diff < best_d) {
          best_d = diff * diff;
          best = k;
        }
      }
    } else {
      const auto it = std::find(axis.begin(), axis.end(), config.values[d]);
      best = it == axis.end() ? 0 : static_cast<std::size_t>(it - axis.begin());
    }
    index = index * axis.size() + best;
  }
  return index;
}

// ---------------------------------------------------------------------------

double Instance::cost_of(const Configuration& config) const {
  const auto b = space_.budget_index();
  if (!b) return 1.0;
  const double upper = space_.param(*b).upper;
  if (table_) return table_->config(table_->nearest(config)).values[*b] / upper;
  return config.values[*b] / upper;
}

ObjectiveVector Instance::evaluate(const Configuration& config, std::uint64_t /*seed*/) const {
  auto report = validate(space_, config);
  if (!report.empty()) throw InvalidConfiguration(std::move(report));
  ObjectiveVector out;
  switch (mode_) {
    case InstanceMode::real:
      out.values = fn_(config);
      out.cost = cost_of(config);
      break;
    case InstanceMode::tabular: {
      const std::size_t row = table_->nearest(config);
      const auto v = table_->values(row);
      out.values.assign(v.begin(), v.end());
      const auto b = space_.budget_index();
      out.cost = b ? table_->config(row).values[*b] / space_.param(*b).upper : 1.0;
      break;
    }
    case InstanceMode::surrogate: {
      const auto x = surrogate_->encoder.encode(config);
      out.values = surrogate_->ensemble.predict(
          x, surrogate_->noisy ? EnsembleMode::dirichlet : EnsembleMode::mean);
      out.cost = cost_of(config);
      break;
    }
  }
  for (const double v : out.values) {
    if (!std::isfinite(v)) throw std::runtime_error("instance '" + id_ + "' produced a non-finite value");
  }
  return out;
}

Instance Instance::real(std::string id, SearchSpace space, std::vector<std::string> target_ids,
                        std::vector<Direction> directions, ObjectiveFunction fn) {
  if (target_ids.size() != directions.size() || target_ids.empty()) {
    throw std::invalid_argument("instance needs one direction per target");
  }
  Instance i;
  i.id_ = std::move(id);
  i.space_ = std::move(space);
  i.target_ids_ = std::move(target_ids);
  i.directions_ = std::move(directions);
  i.mode_ = InstanceMode::real;
  i.fn_ = std::move(fn);
  return i;
}

Instance Instance::tabular(std::string id, std::vector<std::string> target_ids,
                           std::vector<Direction> directions, std::shared_ptr<const TabularTable> table,
                           SearchSpace space) {
  Instance i;
  i.id_ = std::move(id);
  i.space_ = std::move(space);
  i.target_ids_ = std::move(target_ids);
  i.directions_ = std::move(directions);
  i.mode_ = InstanceMode::tabular;
  i.table_ = std::move(table);
  return i;
}

Instance Instance::surrogate(std::string id, SearchSpace space, std::vector<std::string> target_ids,
                             std::vector<Direction> directions,
                             std::shared_ptr<const SurrogateModel> model) {
  Instance i;
  i.id_ = std::move(id);
  i.space_ = std::move(space);
  i.target_ids_ = std::move(target_ids);
  i.directions_ = std::move(directions);
  i.mode_ = InstanceMode::surrogate;
  i.surrogate_ = std::move(model);
  return i;
}

// ---------------------------------------------------------------------------

namespace {

ParamDef fidelity_param() {
  ParamDef z;
  z.id = "fidelity";
  z.kind = ParamKind::continuous;
  z.lower = kMinFidelity;
  z.upper = 1.0;
  z.log_scale = true;
  z.is_budget = true;
  return z;
}

}  // namespace

SearchSpace synthetic_space(const SyntheticFunction& fn) {
  std::vector<ParamDef> params;
  for (std::size_t i = 0; i < fn.dim(); ++i) {
    ParamDef p;
    p.id = fn.input_names()[i];
    p.lower = fn.box().lower[i];
    p.upper = fn.box().upper[i];
    params.push_back(p);
  }
  params.push_back(fidelity_param());
  return SearchSpace(std::string(fn.name()), std::move(params));
}

Instance make_real_instance(const SyntheticFunction& fn) {
  SearchSpace space = synthetic_space(fn);
  const std::size_t d = fn.dim();
  const std::size_t z = *space.budget_index();
  auto eval = [fn, d, z](const Configuration& c) {
    return std::vector<double>{fn(std::span<const double>(c.values).first(d), c.values[z])};
  };
  return Instance::real("synth:" + std::string(fn.name()), std::move(space), {"y"},
                        {Direction::minimize}, eval);
}

Instance make_real_instance(std::string_view benchmark_id) {
  if (benchmark_id.starts_with("synth:")) {
    return make_real_instance(SyntheticFunction(synthetic_from_name(benchmark_id)));
  }
  if (!benchmark_id.starts_with("mo:")) {
    throw std::invalid_argument("unknown benchmark id '" + std::string(benchmark_id) + "'");
  }
  std::vector<SyntheticFunction> fns;
  std::string_view rest = benchmark_id.substr(3);
  while (!rest.empty()) {
    const auto plus = rest.find('+');
    fns.emplace_back(synthetic_from_name(rest.substr(0, plus)));
    rest = plus == std::string_view::npos ? std::string_view{} : rest.substr(plus + 1);
  }
  if (fns.size() < 2) throw std::invalid_argument("composite benchmark needs at least two functions");
  const std::size_t d = fns.front().dim();
  for (const auto& f : fns) {
    if (f.dim() != d) throw std::invalid_argument("composite benchmark members must share a dimension");
  }
  std::vector<ParamDef> params;
  for (std::size_t i = 0; i < d; ++i) {
    ParamDef p;
    p.id = "u" + std::to_string(i + 1);
    params.push_back(p);
  }
  params.push_back(fidelity_param());
  SearchSpace space(std::string(benchmark_id), std::move(params));
  std::vector<std::string> targets;
  std::vector<Direction> dirs;
  std::vector<bool> flip;
  for (const auto& f : fns) {
    targets.emplace_back(f.name());
    const bool textbook_max = f.id() == SyntheticId::currin2 || f.id() == SyntheticId::borehole8;
    flip.push_back(textbook_max);
    dirs.push_back(textbook_max ? Direction::maximize : Direction::minimize);
  }
  auto eval = [fns, flip, d](const Configuration& c) {
    std::vector<double> out;
    std::vector<double> x(d);
    for (std::size_t k = 0; k < fns.size(); ++k) {
      const auto& box = fns[k].box();
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = std::clamp(box.lower[i] + c.values[i] * (box.upper[i] - box.lower[i]), box.lower[i],
                          box.upper[i]);
      }
      const double v = fns[k](x, c.values[d]);
      out.push_back(flip[k] ? -v : v);
    }
    return out;
  };
  return Instance::real(std::string(benchmark_id), std::move(space), std::move(targets),
                        std::move(dirs), eval);
}

Instance make_tabular_instance(const Instance& real, std::size_t non_budget_cap,
                               std::span<const double> budget_levels) {
  if (real.mode() != InstanceMode::real) {
    throw std::invalid_argument("make_tabular_instance: source must be a real instance");
  }
  GridAxes axes = make_grid_axes(real.space(), non_budget_cap, budget_levels);
  const std::size_t n = axes.size();
  Matrix values(n, real.targets());
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = real.evaluate(axes.at(i)).values;
    std::copy(v.begin(), v.end(), values.row(i).begin());
  }
  auto table = std::make_shared<const TabularTable>(real.space(), std::move(axes), std::move(values));
  return Instance::tabular(real.id(), {real.target_ids().begin(), real.target_ids().end()},
                           {real.directions().begin(), real.directions().end()}, std::move(table),
                           real.space());
}

SurrogateOptions::SurrogateOptions() {
  model.members = 1;
  model.hidden = 64;
  model.max_epochs = 300;
  model.batch_size = 64;
  model.learning_rate = 2e-3;
  model.patience = 30;
  // 0.6 / 0.2 / 0.2 overall once the test split is removed.
  model.validation_fraction = 0.25;
  model.min_samples = 100;
}

SurrogateResult make_surrogate_instance(const Instance& real, std::size_t n_train,
                                        const SurrogateOptions& options, std::uint64_t seed) {
  if (real.mode() != InstanceMode::real) {
    throw std::invalid_argument("make_surrogate_instance: source must be a real instance");
  }
  if (n_train < 100) throw std::invalid_argument("make_surrogate_instance: need at least 100 points");
  Rng rng(mix_seed(seed, 0x5355ULL));
  const auto configs = sample(real.space(), rng, n_train);
  Matrix y(n_train, real.targets());
  for (std::size_t i = 0; i < n_train; ++i) {
    const auto v = real.evaluate(configs[i]).values;
    std::copy(v.begin(), v.end(), y.row(i).begin());
  }
  const Encoder encoder(real.space(), true);
  const EncodedDataset all = make_dataset(encoder, configs, y);

  // Stratify on the first target: consecutive blocks of the sorted order each
  // contribute the same share to the test split.
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y(a, 0) < y(b, 0); });
  const auto block = static_cast<std::size_t>(std::max(2.0, std::round(1.0 / options.test_fraction)));
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t start = 0; start < n_train; start += block) {
    const std::size_t len = std::min(block, n_train - start);
    std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(start),
                 order.begin() + static_cast<std::ptrdiff_t>(start + len), rng);
    for (std::size_t k = 0; k < len; ++k) {
      (k == 0 && len == block ? test_rows : train_rows).push_back(order[start + k]);
    }
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  const EncodedDataset train = subset(all, train_rows);
  auto model = std::make_shared<SurrogateModel>();
  model->ensemble = fit_mlp_ensemble(train, options.model, mix_seed(seed, 0x4d4cULL));
  model->encoder = encoder;
  model->noisy = options.noisy;

  SurrogateQuality q;
  q.target_ids.assign(real.target_ids().begin(), real.target_ids().end());
  q.n_train = train_rows.size();
  q.n_test = test_rows.size();
  for (std::size_t j = 0; j < real.targets(); ++j) {
    std::vector<double> pred, truth;
    for (const std::size_t r : test_rows) {
      pred.push_back(model->ensemble.predict(all.x.row(r))[j]);
      truth.push_back(y(r, j));
    }
    const auto rho = test_rows.size() >= 2 ? spearman_rho(pred, truth) : std::nullopt;
    q.rho.push_back(rho);
    if (!rho || *rho <= kFaithfulnessCutoff) q.faithful = false;
  }
  Instance inst = Instance::surrogate(real.id(), real.space(),
                                      {real.target_ids().begin(), real.target_ids().end()},
                                      {real.directions().begin(), real.directions().end()}, std::move(model));
  return {std::move(inst), std::move(q)};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

void write_payload(std::ofstream& out, const std::string& header, std::span<const double> payload) {
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kInstanceFileVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t hlen = header.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const std::uint64_t count = payload.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
}

struct RawFile {
  Json header;
  std::vector<double> payload;
};

RawFile read_raw(const std::string& path, bool with_payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("'" + path + "' is not an instance file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != kInstanceFileVersion) {
    throw std::runtime_error("unsupported instance file version " + std::to_string(version));
  }
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated instance file header");
  RawFile f;
  f.header = Json::parse(header);
  if (!with_payload) return f;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  f.payload.resize(count);
  in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("truncated instance file payload");
  return f;
}

}  // namespace

void save_instance(const Instance& instance, const std::string& path,
                   const std::optional<SurrogateQuality>& quality) {
  Json h;
  h["format"] = "mfhpo-instance";
  h["version"] = kInstanceFileVersion;
  h["instance_id"] = instance.id();
  h["mode"] = std::string(to_string(instance.mode()));
  h["space_hash"] = hex64(instance.space().hash());
  h["space"] = Json::parse(serialize_space(instance.space()));
  h["target_ids"] = std::vector<std::string>(instance.target_ids().begin(), instance.target_ids().end());
  Json dirs = Json::array();
  for (const Direction d : instance.directions()) dirs.push_back(std::string(to_string(d)));
  h["directions"] = dirs;

  std::vector<double> payload;
  if (const TabularTable* t = instance.table()) {
    Json sizes = Json::array();
    for (const auto& axis : t->axes().axes) {
      sizes.push_back(axis.size());
      payload.insert(payload.end(), axis.begin(), axis.end());
    }
    h["axis_sizes"] = sizes;
    h["rows"] = t->size();
    payload.insert(payload.end(), t->value_matrix().data.begin(), t->value_matrix().data.end());
  } else if (const SurrogateModel* s = instance.surrogate()) {
    const MLPEnsemble& e = s->ensemble;
    h["members"] = e.members();
    h["inputs"] = e.networks().front().inputs();
    h["hidden"] = e.networks().front().hidden();
    h["outputs"] = e.networks().front().outputs();
    h["alpha"] = std::vector<double>(e.weights().begin(), e.weights().end());
    h["noisy"] = s->noisy;
    h["scaler"] = {{"clamp", e.scaler().clamps()}, {"state", e.scaler().state()}};
    for (const auto& net : e.networks()) {
      payload.insert(payload.end(), net.parameters().begin(), net.parameters().end());
    }
  } else {
    throw std::invalid_argument("only tabular and surrogate instances can be saved");
  }
  if (quality) {
    Json q;
    Json rho = Json::array();
    for (const auto& r : quality->rho) rho.push_back(r ? Json(*r) : Json(nullptr));
    q["spearman_rho"] = rho;
    q["n_train"] = quality->n_train;
    q["n_test"] = quality->n_test;
    q["faithful"] = quality->faithful;
    h["quality"] = q;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write instance file '" + path + "'");
  write_payload(out, h.dump(), payload);
  if (!out) throw std::runtime_error("failed writing instance file '" + path + "'");
}

std::string read_instance_header(const std::string& path) { return read_raw(path, false).header.dump(2); }

Instance load_instance(const std::string& path) {
  RawFile f = read_raw(path, true);
  const Json& h = f.header;
  SearchSpace space = parse_space(h.at("space").dump());
  if (hex64(space.hash()) != h.at("space_hash").get<std::string>()) {
    throw std::runtime_error("instance file space hash mismatch");
  }
  const auto id = h.at("instance_id").get<std::string>();
  const auto targets = h.at("target_ids").get<std::vector<std::string>>();
  std::vector<Direction> dirs;
  for (const auto& d : h.at("directions")) dirs.push_back(d.get<std::string>() == "maximize" ? Direction::maximize : Direction::minimize);
  const InstanceMode mode = mode_from_string(h.at("mode").get<std::string>());
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    if (pos + n > f.payload.size()) throw std::runtime_error("instance file payload too short");
    std::vector<double> v(f.payload.begin() + static_cast<std::ptrdiff_t>(pos),
                          f.payload.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return v;
  };
  if (mode == InstanceMode::tabular) {
    GridAxes axes;
    for (const auto& s : h.at("axis_sizes")) axes.axes.push_back(take(s.get<std::size_t>()));
    const auto rows = h.at("rows").get<std::size_t>();
    Matrix values(rows, targets.size());
    values.data = take(rows * targets.size());
    auto table = std::make_shared<const TabularTable>(space, std::move(axes), std::move(values));
    return Instance::tabular(id, targets, dirs, std::move(table), space);
  }
  if (mode == InstanceMode::surrogate) {
    const auto members = h.at("members").get<std::size_t>();
    const auto inputs = h.at("inputs").get<std::size_t>();
    const auto hidden = h.at("hidden").get<std::size_t>();
    const auto outputs = h.at("outputs").get<std::size_t>();
    std::vector<MLPNetwork> nets;
    for (std::size_t k = 0; k < members; ++k) {
      MLPNetwork net(inputs, hidden, outputs);
      const auto params = take(net.parameter_count());
      std::copy(params.begin(), params.end(), net.parameters().begin());
      nets.push_back(std::move(net));
    }
    const auto& sc = h.at("scaler");
    auto scaler = TargetScaler::from_state(sc.at("state").get<std::vector<double>>(), sc.at("clamp").get<bool>());
    auto model = std::make_shared<SurrogateModel>();
    model->ensemble = MLPEnsemble::from_parts(std::move(nets), h.at("alpha").get<std::vector<double>>(),
                                              std::move(scaler));
    model->encoder = Encoder(space, true);
    model->noisy = h.at("noisy").get<bool>();
    if (model->encoder.width() != inputs) throw std::runtime_error("instance file encoder width mismatch");
    return Instance::surrogate(id, space, targets, dirs, std::move(model));
  }
  throw std::runtime_error("instance file has unsupported mode");
}

}  // namespace mfhpo
