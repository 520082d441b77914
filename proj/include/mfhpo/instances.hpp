#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfhpo/matrix.hpp"
#include "mfhpo/models.hpp"
#include "mfhpo/space.hpp"
#include "mfhpo/testfuncs.hpp"

namespace mfhpo {

enum class Direction { minimize, maximize };
enum class InstanceMode { real, tabular, surrogate };

std::string_view to_string(Direction d);
std::string_view to_string(InstanceMode mode);
InstanceMode mode_from_string(std::string_view s);

struct ObjectiveVector {
  std::vector<double> values;
  // Full-fidelity equivalents consumed by the evaluation.
  double cost = 1.0;
};

struct EvalRecord {
  std::size_t iteration = 0;
  Configuration config;
  ObjectiveVector objectives;
  double cumulative_budget = 0.0;
};

// Pre-evaluated grid with nearest-point lookup.
class TabularTable {
 public:
  TabularTable(SearchSpace space, GridAxes axes, Matrix values);

  std::size_t size() const { return values_.rows; }
  std::size_t targets() const { return values_.cols; }
  const GridAxes& axes() const { return axes_; }
  Configuration config(std::size_t row) const { return axes_.at(row); }
  std::span<const double> values(std::size_t row) const { return values_.row(row); }
  const Matrix& value_matrix() const { return values_; }

  // Same answer as nearest_grid_index over the expanded grid, computed axis by
  // axis.
  std::size_t nearest(const Configuration& config) const;

 private:
  SearchSpace space_;
  Encoder encoder_;
  GridAxes axes_;
  Matrix values_;
};

struct SurrogateModel {
  MLPEnsemble ensemble;
  Encoder encoder;
  bool noisy = false;
};

struct SurrogateQuality {
  std::vector<std::string> target_ids;
  // Held-out Spearman rho per target; nullopt for a degenerate (constant) target.
  std::vector<std::optional<double>> rho;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  // False when some target has rho <= 0.7 or is degenerate.
  bool faithful = true;

  bool degenerate(std::size_t target) const { return !rho[target].has_value(); }
};

inline constexpr double kFaithfulnessCutoff = 0.7;

using ObjectiveFunction = std::function<std::vector<double>(const Configuration&)>;

class Instance {
 public:
  Instance() = default;

  const std::string& id() const { return id_; }
  const SearchSpace& space() const { return space_; }
  std::size_t targets() const { return target_ids_.size(); }
  std::span<const std::string> target_ids() const { return target_ids_; }
  std::span<const Direction> directions() const { return directions_; }
  InstanceMode mode() const { return mode_; }

  // Throws InvalidConfiguration for configurations that do not validate.
  ObjectiveVector evaluate(const Configuration& config, std::uint64_t seed = 0) const;
  // Fraction of a full-fidelity evaluation for the configuration's budget value.
  double cost_of(const Configuration& config) const;

  // Tabular instances expose their table for exhaustive acquisition search.
  const TabularTable* table() const { return table_.get(); }
  const SurrogateModel* surrogate() const { return surrogate_.get(); }

  static Instance real(std::string id, SearchSpace space, std::vector<std::string> target_ids,
                       std::vector<Direction> directions, ObjectiveFunction fn);
  static Instance tabular(std::string id, std::vector<std::string> target_ids,
                          std::vector<Direction> directions, std::shared_ptr<const TabularTable> table,
                          SearchSpace space);
  static Instance surrogate(std::string id, SearchSpace space, std::vector<std::string> target_ids,
                            std::vector<Direction> directions,
                            std::shared_ptr<const SurrogateModel> model);

 private:
  std::string id_;
  SearchSpace space_;
  std::vector<std::string> target_ids_;
  std::vector<Direction> directions_;
  InstanceMode mode_ = InstanceMode::real;
  ObjectiveFunction fn_;
  std::shared_ptr<const TabularTable> table_;
  std::shared_ptr<const SurrogateModel> surrogate_;
};

// Space of a synthetic function: its input box plus fidelity in [2^-9, 1]
// (log scale).
SearchSpace synthetic_space(const SyntheticFunction& fn);
Instance make_real_instance(const SyntheticFunction& fn);
// Resolves "synth:<fn>" and the multi-objective composites "mo:<fn>+<fn>[+...]"
// whose members share a dimension. Composite inputs live on the unit cube;
// Currin and Borehole report their textbook (maximized) response.
Instance make_real_instance(std::string_view benchmark_id);

Instance make_tabular_instance(const Instance& real, std::size_t non_budget_cap,
                               std::span<const double> budget_levels = {});

struct SurrogateOptions {
  MLPConfig model;
  bool noisy = false;
  double test_fraction = 0.2;

  SurrogateOptions();
};

struct SurrogateResult {
  Instance instance;
  SurrogateQuality quality;
};

// Throws ModelFitError when training diverges.
SurrogateResult make_surrogate_instance(const Instance& real, std::size_t n_train,
                                        const SurrogateOptions& options, std::uint64_t seed);

// Versioned binary file: 8-byte magic, u32 version, u64 header length, JSON
// header, then a u64 count and that many little-endian doubles.
inline constexpr std::uint32_t kInstanceFileVersion = 1;

void save_instance(const Instance& instance, const std::string& path,
                   const std::optional<SurrogateQuality>& quality = std::nullopt);
Instance load_instance(const std::string& path);
// Header JSON only, as text.
std::string read_instance_header(const std::string& path);

}  // namespace mfhpo
