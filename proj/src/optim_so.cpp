#include "mfhpo/optim_so.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <variant>

#include "mfhpo/nelder_mead.hpp"

namespace mfhpo {

double expected_improvement(double mean, double sd, double best) {
  const double diff = best - mean;
  if (!(sd > 0.0)) return std::max(diff, 0.0);
  const double u = diff / sd;
  const double cdf = 0.5 * std::erfc(-u / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
  return std::max(diff * cdf + sd * pdf, 0.0);
}

Trajectory run_random_search(const Instance& instance, double budget, std::uint64_t seed) {
  EvalSession session(instance, budget, seed);
  Rng rng(seed);
  while (true) {
    Configuration c = sample_full_fidelity(instance.space(), rng);
    if (!session.affordable(instance.cost_of(c))) break;
    session.evaluate(c);
  }
  return session.take();
}

BOConfig::BOConfig() {
  nn.members = 5;
  nn.hidden = 32;
  nn.max_epochs = 100;
  nn.batch_size = 16;
  nn.learning_rate = 3e-3;
  nn.validation_fraction = 0.0;
  nn.min_samples = 2;
  nn.clamp = false;
}

namespace {

class FittedModel {
 public:
  FittedModel(const BOConfig& cfg, const Matrix& x, std::span<const double> y, std::uint64_t seed) {
    switch (cfg.surrogate) {
      case SurrogateKind::gp: {
        GPConfig g = cfg.gp;
        g.seed = seed;
        model_ = fit_gp(x, y, g);
        break;
      }
      case SurrogateKind::rf: {
        RFConfig r = cfg.rf;
        r.seed = seed;
        model_ = fit_rf(x, y, r);
        break;
      }
      case SurrogateKind::nn: {
        EncodedDataset data{x, Matrix(y.size(), 1)};
        for (std::size_t i = 0; i < y.size(); ++i) data.y(i, 0) = y[i];
        model_ = fit_mlp_ensemble(data, cfg.nn, seed);
        break;
      }
    }
  }

  Prediction predict(std::span<const double> x) const {
    if (const auto* gp = std::get_if<GPModel>(&model_)) return gp->predict(x);
    if (const auto* rf = std::get_if<RFModel>(&model_)) return rf->predict(x);
    return std::get<MLPEnsemble>(model_).predict_with_spread(x, 0);
  }

 private:
  std::variant<GPModel, RFModel, MLPEnsemble> model_;
};

struct Candidate {
  Configuration config;
  double ei = -1.0;
};

Candidate best_random_probe(const FittedModel& model, const Encoder& enc, const SearchSpace& space,
                            double best, std::size_t probes, Rng& rng) {
  Candidate out;
  std::vector<double> x(enc.width());
  for (std::size_t i = 0; i < probes; ++i) {
    Configuration c = sample_full_fidelity(space, rng);
    enc.encode(c, x);
    const Prediction p = model.predict(x);
    const double ei = expected_improvement(p.mean, p.sd, best);
    if (ei > out.ei) {
      out.ei = ei;
      out.config = std::move(c);
    }
  }
  return out;
}

Candidate nelder_mead_refine(const FittedModel& model, const Encoder& enc, const SearchSpace& space,
                             double best, Candidate start, const BOConfig& cfg) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamDef& p = space.param(i);
    if (p.numeric() && !p.is_budget && space.is_active(start.config, i)) free.push_back(i);
  }
  if (free.empty()) return start;

  std::vector<double> x0(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) x0[k] = enc.unit(free[k], start.config.values[free[k]]);
  const std::vector<double> lo(free.size(), 0.0), hi(free.size(), 1.0);
  std::vector<double> feat(enc.width());
  Configuration trial = start.config;
  auto decode = [&](std::span<const double> u) {
    for (std::size_t k = 0; k < free.size(); ++k) trial.values[free[k]] = enc.from_unit(free[k], u[k]);
  };
  auto neg_ei = [&](std::span<const double> u) {
    decode(u);
    enc.encode(trial, feat);
    const Prediction p = model.predict(feat);
    return -expected_improvement(p.mean, p.sd, best);
  };
  NelderMeadOptions opts;
  opts.rel_tol = cfg.nm_rel_tol;
  opts.max_evals = cfg.nm_max_evals;
  const NelderMeadResult r = nelder_mead(neg_ei, x0, lo, hi, opts);
  if (-r.value > start.ei) {
    decode(r.x);
    start.config = trial;
    start.ei = -r.value;
  }
  return start;
}

}  // namespace

Trajectory run_bo(const Instance& instance, const BOConfig& cfg, double budget, std::uint64_t seed) {
  const SearchSpace& space = instance.space();
  const std::size_t n_init = cfg.init_design_size ? cfg.init_design_size : 5 * space.dim();
  if (!(budget > static_cast<double>(n_init))) {
    throw std::invalid_argument("run_bo: budget must exceed the initial design size " +
                                std::to_string(n_init));
  }
  const TabularTable* table = instance.table();
  if (cfg.acq_optimizer == AcqOptimizer::exhaustive && !table) {
    throw std::invalid_argument("run_bo: exhaustive acquisition needs a tabular instance");
  }

  EvalSession session(instance, budget, seed);
  Trajectory& traj = session.trajectory();
  Rng rng(seed);
  const Encoder enc(space, false);

  // Full-fidelity table rows, and which of them have been evaluated.
  std::vector<std::size_t> rows;
  std::vector<char> seen;
  if (table) {
    const auto b = space.budget_index();
    for (std::size_t r = 0; r < table->size(); ++r) {
      if (!b || table->config(r).values[*b] >= space.param(*b).upper) rows.push_back(r);
    }
    seen.assign(table->size(), 0);
  }

  std::vector<double> x_rows;
  std::vector<double> y;
  auto run = [&](const Configuration& c) {
    if (!session.affordable(instance.cost_of(c))) return false;
    const EvalRecord& rec = session.evaluate(c);
    const Configuration& used = table ? table->config(table->nearest(c)) : c;
    if (table) seen[table->nearest(c)] = 1;
    const auto feat = enc.encode(used);
    x_rows.insert(x_rows.end(), feat.begin(), feat.end());
    y.push_back(oriented(instance, 0, rec.objectives.values[0]));
    return true;
  };

  for (std::size_t i = 0; i < n_init; ++i) {
    if (!run(sample_full_fidelity(space, rng))) return session.take();
  }

  for (std::size_t it = 0;; ++it) {
    const std::uint64_t it_seed = mix_seed(seed, 0x1000 + it);
    Rng acq_rng(it_seed);
    Configuration proposal;
    bool have = false;
    try {
      Matrix x(y.size(), enc.width());
      std::copy(x_rows.begin(), x_rows.end(), x.data.begin());
      const FittedModel model(cfg, x, y, it_seed);
      const double best = *std::min_element(y.begin(), y.end());
      switch (cfg.acq_optimizer) {
        case AcqOptimizer::random:
          proposal = best_random_probe(model, enc, space, best, cfg.random_probes, acq_rng).config;
          break;
        case AcqOptimizer::nelder_mead: {
          Candidate start = best_random_probe(model, enc, space, best, cfg.nm_probes, acq_rng);
          proposal = nelder_mead_refine(model, enc, space, best, std::move(start), cfg).config;
          break;
        }
        case AcqOptimizer::exhaustive: {
          double best_ei = -1.0;
          std::size_t best_row = 0;
          std::vector<double> feat(enc.width());
          for (const std::size_t r : rows) {
            if (seen[r]) continue;
            enc.encode(table->config(r), feat);
            const Prediction p = model.predict(feat);
            const double ei = expected_improvement(p.mean, p.sd, best);
            if (ei > best_ei) {
              best_ei = ei;
              best_row = r;
            }
          }
          if (best_ei < 0.0) return session.take();
          proposal = table->config(best_row);
          break;
        }
      }
      have = true;
    } catch (const ModelFitError& e) {
      ++traj.fallbacks;
      traj.log.push_back("iteration " + std::to_string(traj.records.size()) +
                         ": surrogate fit failed (" + e.what() + "), random proposal");
    }
    if (!have) {
      if (cfg.acq_optimizer == AcqOptimizer::exhaustive) {
        std::vector<std::size_t> open;
        for (const std::size_t r : rows) {
          if (!seen[r]) open.push_back(r);
        }
        if (open.empty()) return session.take();
        proposal = table->config(open[uniform_index(acq_rng, open.size())]);
      } else {
        proposal = sample_full_fidelity(space, acq_rng);
      }
    }
    if (!run(proposal)) break;
  }
  return session.take();
}

HyperbandSchedule hyperband_schedule(double r_min, double r_max, double eta) {
  if (!(eta >= 2.0) || !(r_min > 0.0) || !(r_max >= r_min)) {
    throw std::invalid_argument("hyperband_schedule: need eta >= 2 and 0 < r_min <= r_max");
  }
  HyperbandSchedule sched;
  const double ratio = std::log(r_max / r_min) / std::log(eta);
  sched.s_max = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  for (std::size_t s = sched.s_max + 1; s-- > 0;) {
    HyperbandSchedule::Bracket b;
    b.s = s;
    const double eta_s = std::pow(eta, static_cast<double>(s));
    auto n = static_cast<std::size_t>(
        std::ceil(static_cast<double>(sched.s_max + 1) / static_cast<double>(s + 1) * eta_s - 1e-9));
    double r = r_max / eta_s;
    for (std::size_t i = 0; i <= s && n > 0; ++i) {
      b.rungs.push_back({n, r});
      n = static_cast<std::size_t>(std::floor(static_cast<double>(n) / eta + 1e-9));
      r *= eta;
    }
    b.rungs.back().fidelity = std::min(b.rungs.back().fidelity, r_max);
    sched.brackets.push_back(std::move(b));
  }
  return sched;
}

std::vector<std::size_t> successive_halving_survivors(std::span<const double> values, double eta) {
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(values.size()) / eta + 1e-9));
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  idx.resize(k);
  return idx;
}

Trajectory run_hyperband(const Instance& instance, double budget, double eta, std::uint64_t seed) {
  const SearchSpace& space = instance.space();
  const auto b = space.budget_index();
  if (!b) throw std::invalid_argument("run_hyperband: instance has no budget parameter");
  const ParamDef& bp = space.param(*b);
  const HyperbandSchedule sched = hyperband_schedule(bp.lower, bp.upper, eta);

  EvalSession session(instance, budget, seed);
  Rng rng(seed);
  auto at_fidelity = [&](Configuration c, double r) {
    if (bp.kind == ParamKind::integer) r = std::round(r);
    c.values[*b] = std::clamp(r, bp.lower, bp.upper);
    return c;
  };

  while (true) {
    bool progressed = false;
    for (const auto& bracket : sched.brackets) {
      std::vector<Configuration> configs;
      configs.reserve(bracket.rungs.front().n);
      for (std::size_t i = 0; i < bracket.rungs.front().n; ++i) configs.push_back(sample_one(space, rng));
      for (const auto& rung : bracket.rungs) {
        std::vector<Configuration> trials;
        double cost = 0.0;
        for (const auto& c : configs) {
          trials.push_back(at_fidelity(c, rung.fidelity));
          cost += instance.cost_of(trials.back());
        }
        if (!session.affordable(cost)) break;
        std::vector<double> values;
        for (const auto& t : trials) {
          values.push_back(oriented(instance, 0, session.evaluate(t).objectives.values[0]));
        }
        progressed = true;
        const auto keep = successive_halving_survivors(values, eta);
        std::vector<Configuration> next;
        for (const std::size_t k : keep) next.push_back(configs[k]);
        configs = std::move(next);
        if (configs.empty()) break;
      }
    }
    if (!progressed) break;
  }
  return session.take();
}

}  // namespace mfhpo
