#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mfhpo {

struct NelderMeadOptions {
  double initial_step = 0.1;
  // Stops once the relative spread of simplex values falls below this.
  double rel_tol = 1e-4;
  std::size_t max_evals = 500;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evals = 0;
};

// Minimizes f inside the box [lower, upper]; trial points are projected onto
// the box.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::span<const double> lower,
                             std::span<const double> upper, const NelderMeadOptions& options = {});

}  // namespace mfhpo
