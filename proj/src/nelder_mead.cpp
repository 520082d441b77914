#include "mfhpo/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mfhpo {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::span<const double> lower,
                             std::span<const double> upper, const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  };
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  project(x0);
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  values[0] = eval(x0);
  for (std::size_t i = 0; i < n; ++i) {
    const double range = upper[i] - lower[i];
    double step = options.initial_step * range;
    if (simplex[i + 1][i] + step > upper[i]) step = -step;
    simplex[i + 1][i] += step;
    project(simplex[i + 1]);
    values[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  while (evals < options.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    const double fb = values[best];
    const double fw = values[worst];
    if (std::isfinite(fw) &&
        2.0 * std::abs(fw - fb) <= options.rel_tol * (std::abs(fw) + std::abs(fb) + 1e-300)) {
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i] / static_cast<double>(n);
    }
    auto blend = [&](double t, std::vector<double>& out) {
      for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      project(out);
    };

    blend(-1.0, trial);
    const double fr = eval(trial);
    if (fr < fb) {
      blend(-2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[worst] = trial2;
        values[worst] = fe;
      } else {
        simplex[worst] = trial;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = trial;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < fw;
    blend(outside ? -0.5 : 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < std::min(fr, fw)) {
      simplex[worst] = trial2;
      values[worst] = fc;
      continue;
    }
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == best) continue;
      for (std::size_t i = 0; i < n; ++i) {
        simplex[v][i] = simplex[best][i] + 0.5 * (simplex[v][i] - simplex[best][i]);
      }
      project(simplex[v]);
      values[v] = eval(simplex[v]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  const std::size_t b = static_cast<std::size_t>(it - values.begin());
  return {simplex[b], values[b], evals};
}

}  // namespace mfhpo
