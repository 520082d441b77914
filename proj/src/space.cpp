#include "mfhpo/space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mfhpo {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string level_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw SpaceSemanticError("level values must be strings, booleans or numbers");
}

void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SpaceSemanticError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

double number_field(const Json& obj, const char* key, const std::string& id) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw SpaceSemanticError("parameter '" + id + "': '" + key + "' must be a number");
  }
  return obj[key].get<double>();
}

ParamDef parse_param(const Json& p) {
  if (!p.is_object()) throw SpaceSemanticError("each parameter must be an object");
  reject_unknown_keys(p, {"id", "kind", "lower", "upper", "log", "levels", "parent",
                          "parent_values", "budget"},
                      "parameter");
  ParamDef def;
  if (!p.contains("id") || !p["id"].is_string()) {
    throw SpaceSemanticError("parameter 'id' must be a string");
  }
  def.id = p["id"].get<std::string>();
  if (!p.contains("kind") || !p["kind"].is_string()) {
    throw SpaceSemanticError("parameter '" + def.id + "': 'kind' must be a string");
  }
  const auto kind = p["kind"].get<std::string>();
  if (kind == "continuous") {
    def.kind = ParamKind::continuous;
  } else if (kind == "integer") {
    def.kind = ParamKind::integer;
  } else if (kind == "categorical") {
    def.kind = ParamKind::categorical;
  } else {
    throw SpaceSemanticError("parameter '" + def.id + "': unknown kind '" + kind + "'");
  }

  if (def.numeric()) {
    if (p.contains("levels")) {
      throw SpaceSemanticError("parameter '" + def.id + "': numeric parameters take no levels");
    }
    def.lower = number_field(p, "lower", def.id);
    def.upper = number_field(p, "upper", def.id);
    if (p.contains("log")) {
      if (!p["log"].is_boolean()) throw SpaceSemanticError("parameter '" + def.id + "': 'log' must be a boolean");
      def.log_scale = p["log"].get<bool>();
    }
  } else {
    if (p.contains("lower") || p.contains("upper") || p.contains("log")) {
      throw SpaceSemanticError("parameter '" + def.id + "': categorical parameters take no bounds");
    }
    if (!p.contains("levels") || !p["levels"].is_array()) {
      throw SpaceSemanticError("parameter '" + def.id + "': 'levels' must be an array");
    }
    for (const auto& v : p["levels"]) def.levels.push_back(level_text(v));
  }

  if (p.contains("parent") && !p["parent"].is_null()) {
    if (!p["parent"].is_string()) throw SpaceSemanticError("parameter '" + def.id + "': 'parent' must be a string");
    def.parent = p["parent"].get<std::string>();
  }
  if (p.contains("parent_values") && !p["parent_values"].is_null()) {
    if (!p["parent_values"].is_array()) {
      throw SpaceSemanticError("parameter '" + def.id + "': 'parent_values' must be an array");
    }
    for (const auto& v : p["parent_values"]) def.activating_values.push_back(level_text(v));
  }
  if (p.contains("budget")) {
    if (!p["budget"].is_boolean()) throw SpaceSemanticError("parameter '" + def.id + "': 'budget' must be a boolean");
    def.is_budget = p["budget"].get<bool>();
  }
  return def;
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

std::size_t ipow_capped(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

std::vector<double> numeric_axis(const ParamDef& p, std::size_t k) {
  std::vector<double> axis;
  axis.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(k - 1);
    double v;
    if (p.log_scale) {
      v = std::exp(std::log(p.lower) + t * (std::log(p.upper) - std::log(p.lower)));
    } else {
      v = p.lower + t * (p.upper - p.lower);
    }
    if (i == 0) v = p.lower;
    if (i + 1 == k) v = p.upper;
    if (p.kind == ParamKind::integer) v = std::clamp(std::round(v), p.lower, p.upper);
    axis.push_back(v);
  }
  if (p.kind == ParamKind::integer) axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  return axis;
}

}  // namespace

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::continuous: return "continuous";
    case ParamKind::integer: return "integer";
    case ParamKind::categorical: return "categorical";
  }
  return "?";
}

SpaceSyntaxError::SpaceSyntaxError(std::size_t position, const std::string& what)
    : SpaceError("syntax error at byte " + std::to_string(position) + ": " + what),
      position_(position) {}

bool Configuration::operator==(const Configuration& other) const {
  if (values.size() != other.values.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool a = std::isnan(values[i]);
    const bool b = std::isnan(other.values[i]);
    if (a != b || (!a && values[i] != other.values[i])) return false;
  }
  return true;
}

SearchSpace::SearchSpace(std::string name, std::vector<ParamDef> params)
    : name_(std::move(name)), params_(std::move(params)) {
  parent_index_.assign(params_.size(), -1);
  activating_levels_.resize(params_.size());
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const ParamDef& p = params_[i];
    const std::string tag = "parameter '" + p.id + "': ";
    if (p.id.empty()) throw SpaceSemanticError("parameter ids must be nonempty");
    if (!seen.insert(p.id).second) throw SpaceSemanticError("duplicate parameter id '" + p.id + "'");
    if (p.numeric()) {
      if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper)) {
        throw SpaceSemanticError(tag + "bounds require lower < upper");
      }
      if (p.log_scale && !(p.lower > 0.0)) throw SpaceSemanticError(tag + "log scale requires lower > 0");
      if (p.kind == ParamKind::integer && (!is_integral(p.lower) || !is_integral(p.upper))) {
        throw SpaceSemanticError(tag + "integer bounds must be integral");
      }
      if (!p.levels.empty()) throw SpaceSemanticError(tag + "numeric parameters take no levels");
    } else {
      std::set<std::string, std::less<>> distinct(p.levels.begin(), p.levels.end());
      if (distinct.size() != p.levels.size()) throw SpaceSemanticError(tag + "duplicate levels");
      if (distinct.size() < 2) throw SpaceSemanticError(tag + "categorical needs at least 2 levels");
      if (p.log_scale) throw SpaceSemanticError(tag + "categorical parameters cannot be log scaled");
    }
    if (p.is_budget) {
      if (budget_index_) throw SpaceSemanticError("more than one budget parameter");
      if (!p.numeric()) throw SpaceSemanticError(tag + "budget parameter must be numeric");
      if (p.parent) throw SpaceSemanticError(tag + "budget parameter cannot have a parent");
      budget_index_ = i;
    } else {
      ++dim_;
    }
    if (p.parent.has_value() != !p.activating_values.empty()) {
      throw SpaceSemanticError(tag + "parent and parent_values must be given together");
    }
    if (p.parent) {
      std::optional<std::size_t> parent;
      for (std::size_t j = 0; j < i; ++j) {
        if (params_[j].id == *p.parent) parent = j;
      }
      if (!parent) {
        throw SpaceSemanticError(tag + "parent '" + *p.parent +
                                 "' does not exist or is declared after its child");
      }
      const ParamDef& pp = params_[*parent];
      if (pp.kind != ParamKind::categorical) {
        throw SpaceSemanticError(tag + "parent '" + pp.id + "' must be categorical");
      }
      for (const auto& v : p.activating_values) {
        const auto it = std::find(pp.levels.begin(), pp.levels.end(), v);
        if (it == pp.levels.end()) {
          throw SpaceSemanticError(tag + "activating value '" + v + "' is not a level of '" + pp.id + "'");
        }
        activating_levels_[i].push_back(static_cast<std::size_t>(it - pp.levels.begin()));
      }
      std::sort(activating_levels_[i].begin(), activating_levels_[i].end());
      parent_index_[i] = static_cast<int>(*parent);
      ++conditional_count_;
    }
  }
  if (dim_ == 0) throw SpaceSemanticError("a space needs at least one non-budget parameter");
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].id == id) return i;
  }
  return std::nullopt;
}

bool SearchSpace::level_activates(std::size_t child, std::size_t parent_level) const {
  return std::binary_search(activating_levels_[child].begin(), activating_levels_[child].end(),
                            parent_level);
}

bool SearchSpace::is_active(const Configuration& config, std::size_t i) const {
  const int p = parent_index_[i];
  if (p < 0) return true;
  const double v = config.values[static_cast<std::size_t>(p)];
  if (!is_integral(v) || v < 0.0) return false;
  return level_activates(i, static_cast<std::size_t>(v));
}

std::uint64_t SearchSpace::hash() const { return fnv1a64(serialize_space(*this)); }

SearchSpace parse_space(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw SpaceSyntaxError(e.byte, e.what());
  }
  if (!doc.is_object()) throw SpaceSemanticError("space document must be a JSON object");
  reject_unknown_keys(doc, {"name", "params"}, "space document");
  if (!doc.contains("name") || !doc["name"].is_string()) {
    throw SpaceSemanticError("space 'name' must be a string");
  }
  if (!doc.contains("params") || !doc["params"].is_array()) {
    throw SpaceSemanticError("space 'params' must be an array");
  }
  std::vector<ParamDef> params;
  for (const auto& p : doc["params"]) params.push_back(parse_param(p));
  return SearchSpace(doc["name"].get<std::string>(), std::move(params));
}

std::string serialize_space(const SearchSpace& space) {
  Json doc;
  doc["name"] = space.name();
  Json params = Json::array();
  for (const auto& p : space.params()) {
    Json j;
    j["id"] = p.id;
    j["kind"] = std::string(to_string(p.kind));
    if (p.numeric()) {
      j["lower"] = p.lower;
      j["upper"] = p.upper;
      j["log"] = p.log_scale;
    } else {
      j["levels"] = p.levels;
    }
    j["parent"] = p.parent ? Json(*p.parent) : Json(nullptr);
    j["parent_values"] = p.parent ? Json(p.activating_values) : Json(nullptr);
    j["budget"] = p.is_budget;
    params.push_back(std::move(j));
  }
  doc["params"] = std::move(params);
  return doc.dump(2);
}

SearchSpace load_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpaceError("cannot open space file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_space(ss.str());
}

Configuration sample_one(const SearchSpace& space, Rng& rng) {
  Configuration c;
  c.values.assign(space.size(), kNaN);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!space.is_active(c, i)) continue;
    const ParamDef& p = space.param(i);
    switch (p.kind) {
      case ParamKind::continuous:
        if (p.log_scale) {
          const double lo = std::log(p.lower);
          const double hi = std::log(p.upper);
          c.values[i] = std::clamp(std::exp(lo + (hi - lo) * uniform01(rng)), p.lower, p.upper);
        } else {
          c.values[i] = p.lower + (p.upper - p.lower) * uniform01(rng);
        }
        break;
      case ParamKind::integer:
        if (p.log_scale) {
          // log-uniform over [lower - 0.5, upper + 0.5] before rounding
          const double lo = std::log(std::max(p.lower - 0.5, 0.5 * p.lower));
          const double hi = std::log(p.upper + 0.5);
          c.values[i] = std::clamp(std::round(std::exp(lo + (hi - lo) * uniform01(rng))), p.lower, p.upper);
        } else {
          c.values[i] = static_cast<double>(std::uniform_int_distribution<long long>(
              static_cast<long long>(p.lower), static_cast<long long>(p.upper))(rng));
        }
        break;
      case ParamKind::categorical:
        c.values[i] = static_cast<double>(uniform_index(rng, p.levels.size()));
        break;
    }
  }
  return c;
}

std::vector<Configuration> sample(const SearchSpace& space, Rng& rng, std::size_t n) {
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(space, rng));
  return out;
}

ValidityReport validate(const SearchSpace& space, const Configuration& config) {
  ValidityReport report;
  if (config.values.size() != space.size()) {
    report.push_back({ViolationKind::wrong_type, "",
                      "configuration has " + std::to_string(config.values.size()) +
                          " slots, space has " + std::to_string(space.size())});
    return report;
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamDef& p = space.param(i);
    const double v = config.values[i];
    const bool present = !std::isnan(v);
    const bool active = space.is_active(config, i);
    if (active && !present) {
      report.push_back({ViolationKind::missing_active, p.id, "active parameter missing"});
      continue;
    }
    if (!active && present) {
      report.push_back({ViolationKind::inactive_present, p.id, "inactive parameter present"});
      continue;
    }
    if (!present) continue;
    if (p.numeric()) {
      if (!std::isfinite(v) || v < p.lower || v > p.upper) {
        std::ostringstream os;
        os << "value " << v << " outside [" << p.lower << ", " << p.upper << "]";
        report.push_back({ViolationKind::out_of_bounds, p.id, os.str()});
      } else if (p.kind == ParamKind::integer && !is_integral(v)) {
        report.push_back({ViolationKind::wrong_type, p.id, "integer parameter has fractional value"});
      }
    } else if (!is_integral(v) || v < 0.0 || v >= static_cast<double>(p.levels.size())) {
      report.push_back({ViolationKind::out_of_bounds, p.id, "level index out of range"});
    }
  }
  return report;
}

ValidityReport validate(const SearchSpace& space, const ConfigMap& map) {
  ValidityReport report;
  Configuration c;
  c.values.assign(space.size(), kNaN);
  std::set<std::string, std::less<>> flagged;
  for (const auto& [id, value] : map) {
    const auto idx = space.index_of(id);
    if (!idx) {
      report.push_back({ViolationKind::unknown_id, id, "unknown parameter id"});
      continue;
    }
    const ParamDef& p = space.param(*idx);
    if (p.numeric()) {
      if (const double* d = std::get_if<double>(&value)) {
        c.values[*idx] = *d;
      } else {
        report.push_back({ViolationKind::wrong_type, id, "numeric parameter given a string"});
        flagged.insert(id);
        c.values[*idx] = p.lower;
      }
    } else {
      const std::string* s = std::get_if<std::string>(&value);
      const auto it = s ? std::find(p.levels.begin(), p.levels.end(), *s) : p.levels.end();
      if (!s) {
        report.push_back({ViolationKind::wrong_type, id, "categorical parameter given a number"});
        flagged.insert(id);
        c.values[*idx] = 0.0;
      } else if (it == p.levels.end()) {
        report.push_back({ViolationKind::out_of_bounds, id, "unknown level '" + *s + "'"});
        flagged.insert(id);
        c.values[*idx] = 0.0;
      } else {
        c.values[*idx] = static_cast<double>(it - p.levels.begin());
      }
    }
  }
  for (auto& v : validate(space, c)) {
    if (!flagged.contains(v.param_id)) report.push_back(std::move(v));
  }
  return report;
}

namespace {

std::string summarize(const ValidityReport& report) {
  std::string s = "invalid configuration:";
  for (const auto& v : report) s += " [" + v.param_id + ": " + v.message + "]";
  return s;
}

}  // namespace

InvalidConfiguration::InvalidConfiguration(ValidityReport report)
    : std::runtime_error(summarize(report)), report_(std::move(report)) {}

ConfigMap to_map(const SearchSpace& space, const Configuration& config) {
  ConfigMap m;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double v = config.values[i];
    if (std::isnan(v)) continue;
    const ParamDef& p = space.param(i);
    if (p.numeric()) {
      m.emplace(p.id, v);
    } else {
      m.emplace(p.id, p.levels.at(static_cast<std::size_t>(v)));
    }
  }
  return m;
}

Configuration from_map(const SearchSpace& space, const ConfigMap& map) {
  auto report = validate(space, map);
  if (!report.empty()) throw InvalidConfiguration(std::move(report));
  Configuration c;
  c.values.assign(space.size(), kNaN);
  for (const auto& [id, value] : map) {
    const std::size_t i = *space.index_of(id);
    const ParamDef& p = space.param(i);
    if (p.numeric()) {
      c.values[i] = std::get<double>(value);
    } else {
      const auto& s = std::get<std::string>(value);
      c.values[i] = static_cast<double>(std::find(p.levels.begin(), p.levels.end(), s) - p.levels.begin());
    }
  }
  return c;
}

std::string format_configuration(const SearchSpace& space, const Configuration& config) {
  std::ostringstream os;
  os.precision(10);
  os << '{';
  bool first = true;
  for (std::size_t i = 0; i < space.size() && i < config.values.size(); ++i) {
    const double v = config.values[i];
    if (std::isnan(v)) continue;
    if (!first) os << ", ";
    first = false;
    const ParamDef& p = space.param(i);
    os << p.id << '=';
    if (p.numeric()) {
      os << v;
    } else {
      os << p.levels.at(static_cast<std::size_t>(v));
    }
  }
  os << '}';
  return os.str();
}

Configuration with_fidelity(const SearchSpace& space, Configuration config, double fidelity) {
  if (const auto b = space.budget_index()) config.values[*b] = fidelity;
  return config;
}

std::optional<double> fidelity_of(const SearchSpace& space, const Configuration& config) {
  if (const auto b = space.budget_index()) return config.values[*b];
  return std::nullopt;
}

std::vector<double> default_budget_levels(const SearchSpace& space) {
  std::vector<double> levels;
  const auto b = space.budget_index();
  if (!b) return levels;
  const ParamDef& p = space.param(*b);
  const double base = std::ldexp(1.0, -9);
  for (int e = -9; e <= 0; ++e) {
    const double t = std::ldexp(1.0, e);
    double v = p.lower + (p.upper - p.lower) * (t - base) / (1.0 - base);
    if (e == -9) v = p.lower;
    if (e == 0) v = p.upper;
    if (p.kind == ParamKind::integer) v = std::round(v);
    levels.push_back(v);
  }
  if (p.kind == ParamKind::integer) levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

std::size_t GridAxes::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

Configuration GridAxes::at(std::size_t index) const {
  Configuration c;
  c.values.resize(axes.size());
  for (std::size_t d = axes.size(); d-- > 0;) {
    const std::size_t n = axes[d].size();
    c.values[d] = axes[d][index % n];
    index /= n;
  }
  return c;
}

std::size_t grid_points_per_dim(const SearchSpace& space, std::size_t non_budget_cap) {
  std::size_t categorical_product = 1;
  std::size_t numeric_dims = 0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamDef& p = space.param(i);
    if (p.is_budget) continue;
    if (p.numeric()) {
      ++numeric_dims;
    } else {
      categorical_product *= p.levels.size();
    }
  }
  if (categorical_product > non_budget_cap) {
    throw SpaceSemanticError("grid cap " + std::to_string(non_budget_cap) +
                             " is smaller than the categorical level product");
  }
  if (numeric_dims == 0) return 0;
  const std::size_t avail = non_budget_cap / categorical_product;
  auto k = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(avail), 1.0 / static_cast<double>(numeric_dims))));
  while (k > 0 && ipow_capped(k, numeric_dims, avail) > avail) --k;
  while (ipow_capped(k + 1, numeric_dims, avail) <= avail) ++k;
  if (k < 2) {
    throw SpaceSemanticError("grid cap " + std::to_string(non_budget_cap) + " too small for " +
                             std::to_string(numeric_dims) + " numeric dimensions");
  }
  return k;
}

GridAxes make_grid_axes(const SearchSpace& space, std::size_t non_budget_cap,
                        std::span<const double> budget_levels) {
  if (space.has_conditions()) {
    throw SpaceSemanticError("grids are only supported on unconditional spaces");
  }
  const std::size_t k = grid_points_per_dim(space, non_budget_cap);
  GridAxes g;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamDef& p = space.param(i);
    if (p.is_budget) {
      std::vector<double> levels(budget_levels.begin(), budget_levels.end());
      if (levels.empty()) levels = default_budget_levels(space);
      for (const double v : levels) {
        if (!(v >= p.lower && v <= p.upper)) {
          throw SpaceSemanticError("budget level outside the range of '" + p.id + "'");
        }
      }
      g.axes.push_back(std::move(levels));
    } else if (p.numeric()) {
      g.axes.push_back(numeric_axis(p, k));
    } else {
      std::vector<double> levels(p.levels.size());
      for (std::size_t l = 0; l < levels.size(); ++l) levels[l] = static_cast<double>(l);
      g.axes.push_back(std::move(levels));
    }
  }
  return g;
}

std::vector<Configuration> make_grid(const SearchSpace& space, std::size_t non_budget_cap,
                                     std::span<const double> budget_levels) {
  const GridAxes axes = make_grid_axes(space, non_budget_cap, budget_levels);
  const std::size_t n = axes.size();
  std::vector<Configuration> grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) grid.push_back(axes.at(i));
  return grid;
}

std::size_t nearest_grid_index(const SearchSpace& space, std::span<const Configuration> grid,
                               const Configuration& config) {
  if (grid.empty()) throw std::invalid_argument("nearest_grid_index: empty grid");
  const Encoder enc(space);
  const std::vector<double> target = enc.encode(config);
  std::vector<double> row(enc.width());
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    enc.encode(grid[i], row);
    double d = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) d += (row[j] - target[j]) * (row[j] - target[j]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Configuration round_to_grid(const SearchSpace& space, std::span<const Configuration> grid,
                            const Configuration& config) {
  return grid[nearest_grid_index(space, grid, config)];
}

Encoder::Encoder(const SearchSpace& space, bool include_budget) : space_(space) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamDef& p = space.param(i);
    if (p.is_budget && !include_budget) continue;
    Span s{i, width_, p.numeric() ? 1 : p.levels.size(), std::nullopt};
    width_ += s.width;
    if (p.parent) s.activity_column = width_++;
    spans_.push_back(s);
  }
}

double Encoder::unit(std::size_t param, double value) const {
  const ParamDef& p = space_.param(param);
  if (p.log_scale) {
    return (std::log(value) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower));
  }
  return (value - p.lower) / (p.upper - p.lower);
}

double Encoder::from_unit(std::size_t param, double u) const {
  const ParamDef& p = space_.param(param);
  u = std::clamp(u, 0.0, 1.0);
  double v = p.log_scale ? std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)))
                         : p.lower + u * (p.upper - p.lower);
  v = std::clamp(v, p.lower, p.upper);
  if (p.kind == ParamKind::integer) v = std::clamp(std::round(v), p.lower, p.upper);
  return v;
}

void Encoder::encode(const Configuration& config, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const Span& s : spans_) {
    const double v = config.values[s.param];
    if (std::isnan(v)) continue;
    if (s.activity_column) out[*s.activity_column] = 1.0;
    if (s.width == 1 && space_.param(s.param).numeric()) {
      out[s.offset] = unit(s.param, v);
    } else {
      const auto level = static_cast<std::size_t>(v);
      if (level < s.width) out[s.offset + level] = 1.0;
    }
  }
}

std::vector<double> Encoder::encode(const Configuration& config) const {
  std::vector<double> out(width_);
  encode(config, out);
  return out;
}

}  // namespace mfhpo
