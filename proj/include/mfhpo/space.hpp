#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mfhpo/rng.hpp"

namespace mfhpo {

enum class ParamKind { continuous, integer, categorical };

std::string_view to_string(ParamKind kind);

struct ParamDef {
  std::string id;
  ParamKind kind = ParamKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  bool log_scale = false;
  std::vector<std::string> levels;
  std::optional<std::string> parent;
  // Parent levels under which this parameter is active.
  std::vector<std::string> activating_values;
  bool is_budget = false;

  bool numeric() const { return kind != ParamKind::categorical; }
};

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpaceSyntaxError : public SpaceError {
 public:
  SpaceSyntaxError(std::size_t position, const std::string& what);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class SpaceSemanticError : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

// A point of the space. values[i] belongs to params()[i]: the raw value for
// numeric parameters, the level index for categorical ones, NaN when inactive.
struct Configuration {
  std::vector<double> values;

  bool operator==(const Configuration& other) const;
};

using ParamValue = std::variant<double, std::string>;
// Id-keyed view of a configuration, used at the file and CLI boundary.
using ConfigMap = std::map<std::string, ParamValue, std::less<>>;

class SearchSpace {
 public:
  SearchSpace() = default;
  // Throws SpaceSemanticError when an invariant is violated.
  SearchSpace(std::string name, std::vector<ParamDef> params);

  const std::string& name() const { return name_; }
  std::span<const ParamDef> params() const { return params_; }
  const ParamDef& param(std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  // Number of non-budget parameters.
  std::size_t dim() const { return dim_; }
  std::optional<std::size_t> budget_index() const { return budget_index_; }
  std::optional<std::size_t> index_of(std::string_view id) const;
  // -1 when the parameter has no parent.
  int parent_index(std::size_t i) const { return parent_index_[i]; }
  bool has_conditions() const { return conditional_count_ > 0; }
  std::size_t conditional_count() const { return conditional_count_; }

  // Active status under the values already present in `config`.
  bool is_active(const Configuration& config, std::size_t i) const;
  bool level_activates(std::size_t child, std::size_t parent_level) const;

  // 64-bit hash of the canonical document text.
  std::uint64_t hash() const;

 private:
  std::string name_;
  std::vector<ParamDef> params_;
  std::vector<int> parent_index_;
  // Per parameter, the activating level indices of its parent (sorted).
  std::vector<std::vector<std::size_t>> activating_levels_;
  std::optional<std::size_t> budget_index_;
  std::size_t dim_ = 0;
  std::size_t conditional_count_ = 0;
};

SearchSpace parse_space(std::string_view text);
std::string serialize_space(const SearchSpace& space);
SearchSpace load_space_file(const std::string& path);

std::vector<Configuration> sample(const SearchSpace& space, Rng& rng, std::size_t n);
Configuration sample_one(const SearchSpace& space, Rng& rng);

enum class ViolationKind { missing_active, inactive_present, out_of_bounds, unknown_id, wrong_type };

struct Violation {
  ViolationKind kind;
  std::string param_id;
  std::string message;
};

using ValidityReport = std::vector<Violation>;

ValidityReport validate(const SearchSpace& space, const Configuration& config);
ValidityReport validate(const SearchSpace& space, const ConfigMap& config);

class InvalidConfiguration : public std::runtime_error {
 public:
  explicit InvalidConfiguration(ValidityReport report);
  const ValidityReport& report() const { return report_; }

 private:
  ValidityReport report_;
};

ConfigMap to_map(const SearchSpace& space, const Configuration& config);
// Throws InvalidConfiguration.
Configuration from_map(const SearchSpace& space, const ConfigMap& map);
std::string format_configuration(const SearchSpace& space, const Configuration& config);

// Sets the budget parameter (if any) of a copy of `config`.
Configuration with_fidelity(const SearchSpace& space, Configuration config, double fidelity);
std::optional<double> fidelity_of(const SearchSpace& space, const Configuration& config);

// The 2^-9 .. 2^0 ladder mapped affinely onto the budget parameter's range.
std::vector<double> default_budget_levels(const SearchSpace& space);

// Per-parameter grid values in declaration order; the grid is their Cartesian
// product with the last parameter varying fastest.
struct GridAxes {
  std::vector<std::vector<double>> axes;

  std::size_t size() const;
  Configuration at(std::size_t index) const;
};

// Points per numeric non-budget axis for a cap, after categorical levels are
// counted toward it.
std::size_t grid_points_per_dim(const SearchSpace& space, std::size_t non_budget_cap);
GridAxes make_grid_axes(const SearchSpace& space, std::size_t non_budget_cap,
                        std::span<const double> budget_levels);
std::vector<Configuration> make_grid(const SearchSpace& space, std::size_t non_budget_cap,
                                     std::span<const double> budget_levels);

// Nearest grid member under the encoded Euclidean distance; ties go to the
// lowest grid index.
std::size_t nearest_grid_index(const SearchSpace& space, std::span<const Configuration> grid,
                               const Configuration& config);
Configuration round_to_grid(const SearchSpace& space, std::span<const Configuration> grid,
                            const Configuration& config);

// Encoded feature map shared by grid rounding and the regression models:
// numeric -> [0,1] (after log where flagged), categorical -> one-hot, and one
// activity bit per conditional parameter (inactive params encode as zeros).
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const SearchSpace& space, bool include_budget = true);

  std::size_t width() const { return width_; }
  void encode(const Configuration& config, std::span<double> out) const;
  std::vector<double> encode(const Configuration& config) const;
  // Unit-scale position of a numeric value.
  double unit(std::size_t param, double value) const;
  double from_unit(std::size_t param, double u) const;

  struct Span {
    std::size_t param;
    std::size_t offset;
    std::size_t width;
    std::optional<std::size_t> activity_column;
  };
  std::span<const Span> spans() const { return spans_; }
  const SearchSpace& space() const { return space_; }

 private:
  SearchSpace space_;
  std::vector<Span> spans_;
  std::size_t width_ = 0;
};

}  // namespace mfhpo
