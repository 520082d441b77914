#include "mfhpo/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfhpo/nelder_mead.hpp"
#include "mfhpo/simd.hpp"

namespace mfhpo {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
const double kSqrt3 = std::sqrt(3.0);

}  // namespace

EncodedDataset make_dataset(const Encoder& encoder, std::span<const Configuration> configs,
                            const Matrix& targets) {
  EncodedDataset d;
  d.x = Matrix(configs.size(), encoder.width());
  for (std::size_t i = 0; i < configs.size(); ++i) encoder.encode(configs[i], d.x.row(i));
  d.y = targets;
  for (const double v : d.x.data) {
    if (!std::isfinite(v)) throw ModelFitError("non-finite encoded feature");
  }
  for (const double v : d.y.data) {
    if (!std::isfinite(v)) throw ModelFitError("non-finite target");
  }
  return d;
}

EncodedDataset subset(const EncodedDataset& data, std::span<const std::size_t> rows) {
  EncodedDataset s;
  s.x = Matrix(rows.size(), data.x.cols);
  s.y = Matrix(rows.size(), data.y.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(data.x.row(rows[i]).begin(), data.x.cols, s.x.row(i).begin());
    std::copy_n(data.y.row(rows[i]).begin(), data.y.cols, s.y.row(i).begin());
  }
  return s;
}

// ---------------------------------------------------------------------------

TargetScaler TargetScaler::fit(const Matrix& y, std::vector<TargetTransform> transforms,
                               bool clamp) {
  TargetScaler s;
  const std::size_t m = y.cols;
  if (transforms.empty()) transforms.assign(m, TargetTransform::identity);
  if (transforms.size() != m) throw std::invalid_argument("TargetScaler: one transform per target");
  s.transforms_ = std::move(transforms);
  s.clamp_ = clamp;
  s.shift_.assign(m, 0.0);
  s.lo_.resize(m);
  s.hi_.resize(m);
  s.raw_min_.resize(m);
  s.raw_max_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < y.rows; ++i) {
      lo = std::min(lo, y(i, j));
      hi = std::max(hi, y(i, j));
    }
    s.raw_min_[j] = lo;
    s.raw_max_[j] = hi;
    if (s.transforms_[j] == TargetTransform::log) s.shift_[j] = 1.0 - lo;
    s.lo_[j] = s.forward(j, lo);
    s.hi_[j] = s.forward(j, hi);
  }
  return s;
}

double TargetScaler::forward(std::size_t j, double y) const {
  switch (transforms_[j]) {
    case TargetTransform::identity: return y;
    case TargetTransform::log: return std::log(std::max(y + shift_[j], 1e-300));
    case TargetTransform::neg_exp: return -std::exp(-y);
  }
  return y;
}

double TargetScaler::inverse(std::size_t j, double t) const {
  switch (transforms_[j]) {
    case TargetTransform::identity: return t;
    case TargetTransform::log: return std::exp(t) - shift_[j];
    case TargetTransform::neg_exp: return -std::log(std::max(-t, 1e-300));
  }
  return t;
}

double TargetScaler::scale(std::size_t j, double y) const {
  const double range = hi_[j] - lo_[j];
  if (!(range > 0.0)) return 0.0;
  return (forward(j, y) - lo_[j]) / range;
}

double TargetScaler::unscale(std::size_t j, double scaled) const {
  const double range = hi_[j] - lo_[j];
  if (!(range > 0.0)) return raw_min_[j];
  double y = inverse(j, lo_[j] + scaled * range);
  if (clamp_) y = std::clamp(y, raw_min_[j], raw_max_[j]);
  return y;
}

std::vector<double> TargetScaler::state() const {
  std::vector<double> out;
  for (std::size_t j = 0; j < transforms_.size(); ++j) {
    out.insert(out.end(), {static_cast<double>(transforms_[j]), shift_[j], lo_[j], hi_[j],
                           raw_min_[j], raw_max_[j]});
  }
  return out;
}

TargetScaler TargetScaler::from_state(std::span<const double> state, bool clamp) {
  if (state.size() % 6 != 0) throw std::invalid_argument("TargetScaler: malformed state");
  TargetScaler s;
  s.clamp_ = clamp;
  for (std::size_t k = 0; k < state.size(); k += 6) {
    s.transforms_.push_back(static_cast<TargetTransform>(static_cast<int>(state[k])));
    s.shift_.push_back(state[k + 1]);
    s.lo_.push_back(state[k + 2]);
    s.hi_.push_back(state[k + 3]);
    s.raw_min_.push_back(state[k + 4]);
    s.raw_max_.push_back(state[k + 5]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// GP

namespace {

// In-place lower Cholesky factor. Returns false if a pivot is not positive.
bool cholesky(Matrix& a) {
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - simd::dot(a.row(j).first(j), a.row(j).first(j));
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      a(i, j) = (a(i, j) - simd::dot(a.row(i).first(j), a.row(j).first(j))) / d;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
  return true;
}

// Solves L z = b in place.
void forward_solve(const Matrix& l, std::span<double> b) {
  for (std::size_t i = 0; i < l.rows; ++i) {
    b[i] = (b[i] - simd::dot(l.row(i).first(i), b.first(i))) / l(i, i);
  }
}

// Solves L^T z = b in place.
void backward_solve(const Matrix& l, std::span<double> b) {
  for (std::size_t i = l.rows; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < l.rows; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

double matern32(double sqdist) {
  const double r = kSqrt3 * std::sqrt(std::max(sqdist, 0.0));
  return (1.0 + r) * std::exp(-r);
}

struct Factorization {
  Matrix chol;
  std::vector<double> alpha;
  double lml = -std::numeric_limits<double>::infinity();
};

bool factorize(const Matrix& x, std::span<const double> y, std::span<const double> theta,
               const GPConfig& cfg, Factorization& out) {
  const std::size_t n = x.rows;
  const std::size_t p = x.cols;
  std::vector<double> inv_ls2(p);
  for (std::size_t j = 0; j < p; ++j) inv_ls2[j] = std::exp(-2.0 * theta[j]);
  const double sf2 = std::exp(theta[p]);
  const double sn2 = std::exp(theta[p + 1]);
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = sf2;
    for (std::size_t j = 0; j < i; ++j) {
      const double v = sf2 * matern32(simd::weighted_sqdist(x.row(i), x.row(j), inv_ls2));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  for (double jitter = cfg.jitter_start; jitter <= cfg.jitter_max * 1.0000001; jitter *= 10.0) {
    Matrix c = k;
    for (std::size_t i = 0; i < n; ++i) c(i, i) += sn2 + jitter;
    if (!cholesky(c)) continue;
    std::vector<double> alpha(y.begin(), y.end());
    forward_solve(c, alpha);
    double quad = 0.0;
    for (const double v : alpha) quad += v * v;
    backward_solve(c, alpha);
    double logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet += std::log(c(i, i));
    out.lml = -0.5 * quad - logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
    out.chol = std::move(c);
    out.alpha = std::move(alpha);
    return true;
  }
  return false;
}

}  // namespace

double GPModel::signal_variance() const { return std::exp(theta_[x_.cols]); }
double GPModel::noise_variance() const { return std::exp(theta_[x_.cols + 1]); }

double GPModel::log_marginal_likelihood(std::span<const double> theta) const {
  Factorization f;
  if (!factorize(x_, y_, theta, cfg_, f)) return -std::numeric_limits<double>::infinity();
  return f.lml;
}

Prediction GPModel::predict(std::span<const double> x) const {
  const std::size_t n = x_.rows;
  const double sf2 = signal_variance();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = sf2 * matern32(simd::weighted_sqdist(x_.row(i), x, inv_ls2_));
  }
  const double mean = simd::dot(k, alpha_);
  forward_solve(chol_, k);
  const double var = std::max(sf2 - simd::dot(k, k), 0.0);
  return {mean * y_sd_ + y_mean_, std::sqrt(var) * y_sd_};
}

GPModel fit_gp(const Matrix& x, std::span<const double> y, const GPConfig& cfg) {
  const std::size_t n = x.rows;
  const std::size_t p = x.cols;
  if (n < 1 || y.size() != n) throw ModelFitError("fit_gp: need at least one observation");
  GPModel m;
  m.cfg_ = cfg;
  m.x_ = x;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (const double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  m.y_mean_ = mean;
  m.y_sd_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  m.y_.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.y_[i] = (y[i] - mean) / m.y_sd_;

  std::vector<double> lower(p + 2), upper(p + 2);
  for (std::size_t j = 0; j < p; ++j) {
    lower[j] = cfg.log_lengthscale_min;
    upper[j] = cfg.log_lengthscale_max;
  }
  lower[p] = std::log(1e-2);
  upper[p] = std::log(1e2);
  lower[p + 1] = std::log(cfg.noise_floor);
  upper[p + 1] = 0.0;

  Rng rng(mix_seed(cfg.seed, 0x6770ULL));
  auto objective = [&](std::span<const double> theta) {
    Factorization f;
    if (!factorize(m.x_, m.y_, theta, cfg, f)) return std::numeric_limits<double>::infinity();
    return -f.lml;
  };

  std::vector<double> best_theta;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < std::max<std::size_t>(cfg.restarts, 1); ++s) {
    std::vector<double> start(p + 2);
    if (s == 0) {
      for (std::size_t j = 0; j < p; ++j) start[j] = std::log(0.5);
      start[p] = 0.0;
      start[p + 1] = std::log(1e-3);
    } else {
      for (std::size_t j = 0; j < p + 2; ++j) {
        start[j] = lower[j] + (upper[j] - lower[j]) * uniform01(rng);
      }
    }
    m.start_lml_.push_back(-objective(start));
    NelderMeadOptions opt;
    opt.initial_step = 0.1;
    opt.rel_tol = 1e-6;
    opt.max_evals = cfg.max_evals_per_start;
    const auto r = nelder_mead(objective, start, lower, upper, opt);
    if (r.value < best) {
      best = r.value;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best)) {
    throw ModelFitError("fit_gp: covariance factorization failed at every hyperparameter setting");
  }
  Factorization f;
  if (!factorize(m.x_, m.y_, best_theta, cfg, f)) {
    throw ModelFitError("fit_gp: covariance factorization failed after jitter escalation");
  }
  m.theta_ = best_theta;
  m.inv_ls2_.resize(p);
  for (std::size_t j = 0; j < p; ++j) m.inv_ls2_[j] = std::exp(-2.0 * best_theta[j]);
  m.chol_ = std::move(f.chol);
  m.alpha_ = std::move(f.alpha);
  m.fitted_lml_ = f.lml;
  return m;
}

Prediction gp_predict(const GPModel& model, std::span<const double> x) { return model.predict(x); }

// ---------------------------------------------------------------------------
// Random forest

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const RFConfig& cfg, Rng& rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng) {
    features_.resize(x.cols);
    std::iota(features_.begin(), features_.end(), 0);
    mtry_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(cfg.max_features * static_cast<double>(x.cols))), 1,
        std::max<std::size_t>(x.cols, 1));
  }

  RegressionTree build(std::vector<std::size_t> rows) {
    RegressionTree t;
    tree_ = &t;
    grow(rows, 0);
    return t;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_->nodes_.size());
    tree_->nodes_.emplace_back();
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const std::size_t r : rows) {
      sum += y_[r];
      lo = std::min(lo, y_[r]);
      hi = std::max(hi, y_[r]);
    }
    tree_->nodes_[id].value = sum / static_cast<double>(rows.size());
    const bool depth_limited = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
    if (rows.size() < cfg_.min_samples_split || lo == hi || depth_limited) return id;

    std::shuffle(features_.begin(), features_.end(), rng_);
    Split best;
    for (std::size_t k = 0; k < features_.size(); ++k) {
      if (k >= mtry_ && best.feature >= 0) break;
      consider(rows, features_[k], sum, best);
    }
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (const std::size_t r : rows) {
      (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_->nodes_[id].feature = best.feature;
    tree_->nodes_[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    tree_->nodes_[id].left = l;
    const int r = grow(right, depth + 1);
    tree_->nodes_[id].right = r;
    return id;
  }

  void consider(const std::vector<std::size_t>& rows, std::size_t feature, double total, Split& best) {
    scratch_.clear();
    for (const std::size_t r : rows) scratch_.emplace_back(x_(r, feature), y_[r]);
    std::sort(scratch_.begin(), scratch_.end());
    const std::size_t n = scratch_.size();
    double left_sum = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      left_sum += scratch_[k - 1].second;
      if (scratch_[k - 1].first == scratch_[k].first) continue;
      if (k < cfg_.min_samples_leaf || n - k < cfg_.min_samples_leaf) continue;
      const double nl = static_cast<double>(k);
      const double nr = static_cast<double>(n - k);
      const double right_sum = total - left_sum;
      const double score = left_sum * left_sum / nl + right_sum * right_sum / nr;
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<int>(feature);
        best.threshold = 0.5 * (scratch_[k - 1].first + scratch_[k].first);
        if (best.threshold >= scratch_[k].first) best.threshold = scratch_[k - 1].first;
      }
    }
  }

  const Matrix& x_;
  std::span<const double> y_;
  const RFConfig& cfg_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::size_t mtry_ = 1;
  std::vector<std::pair<double, double>> scratch_;
  RegressionTree* tree_ = nullptr;
};

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& n = nodes_[id];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::vector<double> RFModel::tree_predictions(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.predict(x));
  return out;
}

Prediction RFModel::predict(std::span<const double> x) const {
  const auto v = tree_predictions(x);
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) return {*lo, 0.0};
  double ss = 0.0;
  for (const double p : v) ss += (p - mean) * (p - mean);
  return {mean, std::sqrt(ss / n)};
}

RFModel fit_rf(const Matrix& x, std::span<const double> y, const RFConfig& cfg) {
  const std::size_t n = x.rows;
  if (n < 1 || y.size() != n) throw ModelFitError("fit_rf: need at least one observation");
  RFModel m;
  Rng rng(mix_seed(cfg.seed, 0x7266ULL));
  for (std::size_t t = 0; t < std::max<std::size_t>(cfg.n_trees, 1); ++t) {
    std::vector<std::size_t> rows(n);
    if (cfg.bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    m.bootstrap_.push_back(rows);
    TreeBuilder builder(x, y, cfg, rng);
    m.trees_.push_back(builder.build(std::move(rows)));
  }
  return m;
}

Prediction rf_predict(const RFModel& model, std::span<const double> x) { return model.predict(x); }

// ---------------------------------------------------------------------------
// MLP

namespace {

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Layout {
  std::size_t w1, b1, w2, b2, w3, b3, total;
};

Layout layout(std::size_t in, std::size_t h, std::size_t out) {
  Layout l{};
  l.w1 = 0;
  l.b1 = l.w1 + h * in;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * h;
  l.w3 = l.b2 + h;
  l.b3 = l.w3 + out * h;
  l.total = l.b3 + out;
  return l;
}

struct Activations {
  std::vector<double> a1, h1, a2, h2, out;
  Activations(std::size_t h, std::size_t m) : a1(h), h1(h), a2(h), h2(h), out(m) {}
};

void forward_pass(std::span<const double> p, const Layout& l, std::size_t in, std::size_t h,
                  std::size_t m, std::span<const double> x, Activations& act) {
  simd::gemv(p.subspan(l.w1, h * in), h, in, x, act.a1);
  for (std::size_t i = 0; i < h; ++i) {
    act.a1[i] += p[l.b1 + i];
    act.h1[i] = act.a1[i] * sigmoid(act.a1[i]);
  }
  simd::gemv(p.subspan(l.w2, h * h), h, h, act.h1, act.a2);
  for (std::size_t i = 0; i < h; ++i) {
    act.a2[i] += p[l.b2 + i];
    act.h2[i] = act.a2[i] * sigmoid(act.a2[i]);
  }
  simd::gemv(p.subspan(l.w3, m * h), m, h, act.h2, act.out);
  for (std::size_t k = 0; k < m; ++k) act.out[k] += p[l.b3 + k];
}

inline double silu_grad(double a) {
  const double s = sigmoid(a);
  return s * (1.0 + a * (1.0 - s));
}

}  // namespace

MLPNetwork::MLPNetwork(std::size_t inputs, std::size_t hidden, std::size_t outputs)
    : inputs_(inputs), hidden_(hidden), outputs_(outputs),
      params_(layout(inputs, hidden, outputs).total, 0.0) {}

void MLPNetwork::initialize(Rng& rng) {
  const Layout l = layout(inputs_, hidden_, outputs_);
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = u(rng);
  };
  std::fill(params_.begin(), params_.end(), 0.0);
  fill(l.w1, hidden_ * inputs_, inputs_, hidden_);
  fill(l.w2, hidden_ * hidden_, hidden_, hidden_);
  fill(l.w3, outputs_ * hidden_, hidden_, outputs_);
}

void MLPNetwork::forward(std::span<const double> x, std::span<double> out) const {
  Activations act(hidden_, outputs_);
  forward_pass(params_, layout(inputs_, hidden_, outputs_), inputs_, hidden_, outputs_, x, act);
  std::copy(act.out.begin(), act.out.end(), out.begin());
}

double MLPNetwork::loss(const Matrix& x, const Matrix& y, std::span<const std::size_t> rows) const {
  const Layout l = layout(inputs_, hidden_, outputs_);
  Activations act(hidden_, outputs_);
  double total = 0.0;
  for (const std::size_t r : rows) {
    forward_pass(params_, l, inputs_, hidden_, outputs_, x.row(r), act);
    for (std::size_t k = 0; k < outputs_; ++k) {
      const double e = act.out[k] - y(r, k);
      total += e * e;
    }
  }
  return total / static_cast<double>(rows.size() * outputs_);
}

double MLPNetwork::loss_and_gradient(const Matrix& x, const Matrix& y,
                                     std::span<const std::size_t> rows,
                                     std::vector<double>& grad) const {
  const Layout l = layout(inputs_, hidden_, outputs_);
  const std::size_t h = hidden_;
  const std::size_t m = outputs_;
  grad.assign(params_.size(), 0.0);
  Activations act(h, m);
  std::vector<double> d_out(m), d_h2(h), d_a2(h), d_h1(h), d_a1(h);
  const double norm = 1.0 / static_cast<double>(rows.size() * m);
  const std::span<const double> p = params_;
  double total = 0.0;
  for (const std::size_t r : rows) {
    const auto xr = x.row(r);
    forward_pass(p, l, inputs_, h, m, xr, act);
    for (std::size_t k = 0; k < m; ++k) {
      const double e = act.out[k] - y(r, k);
      total += e * e;
      d_out[k] = 2.0 * e * norm;
    }
    std::fill(d_h2.begin(), d_h2.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      simd::axpy(d_out[k], act.h2, std::span<double>(grad).subspan(l.w3 + k * h, h));
      grad[l.b3 + k] += d_out[k];
      simd::axpy(d_out[k], p.subspan(l.w3 + k * h, h), d_h2);
    }
    std::fill(d_h1.begin(), d_h1.end(), 0.0);
    for (std::size_t i = 0; i < h; ++i) {
      d_a2[i] = d_h2[i] * silu_grad(act.a2[i]);
      if (d_a2[i] == 0.0) continue;
      simd::axpy(d_a2[i], act.h1, std::span<double>(grad).subspan(l.w2 + i * h, h));
      grad[l.b2 + i] += d_a2[i];
      simd::axpy(d_a2[i], p.subspan(l.w2 + i * h, h), d_h1);
    }
    for (std::size_t i = 0; i < h; ++i) {
      d_a1[i] = d_h1[i] * silu_grad(act.a1[i]);
      simd::axpy(d_a1[i], xr, std::span<double>(grad).subspan(l.w1 + i * inputs_, inputs_));
      grad[l.b1 + i] += d_a1[i];
    }
  }
  return total * norm;
}

std::vector<double> dirichlet_weights(std::size_t k, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xd1c1ULL));
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> w(k);
  double sum = 0.0;
  for (auto& v : w) {
    v = g(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(k));
    return w;
  }
  for (auto& v : w) v /= sum;
  return w;
}

void MLPEnsemble::draw_weights(std::uint64_t seed) { alpha_ = dirichlet_weights(members_.size(), seed); }

MLPEnsemble MLPEnsemble::from_parts(std::vector<MLPNetwork> members, std::vector<double> alpha,
                                    TargetScaler scaler) {
  if (members.empty() || alpha.size() != members.size()) {
    throw std::invalid_argument("MLPEnsemble: members and weights disagree");
  }
  MLPEnsemble e;
  e.members_ = std::move(members);
  e.alpha_ = std::move(alpha);
  e.scaler_ = std::move(scaler);
  return e;
}

Matrix MLPEnsemble::member_predictions(std::span<const double> x) const {
  const std::size_t m = outputs();
  Matrix out(members_.size(), m);
  std::vector<double> raw(m);
  for (std::size_t k = 0; k < members_.size(); ++k) {
    members_[k].forward(x, raw);
    for (std::size_t j = 0; j < m; ++j) out(k, j) = scaler_.unscale(j, raw[j]);
  }
  return out;
}

std::vector<double> MLPEnsemble::predict(std::span<const double> x, EnsembleMode mode) const {
  const std::size_t m = outputs();
  std::vector<double> acc(m, 0.0), raw(m);
  const double uniform = 1.0 / static_cast<double>(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k) {
    members_[k].forward(x, raw);
    const double w = mode == EnsembleMode::mean ? uniform : alpha_[k];
    for (std::size_t j = 0; j < m; ++j) acc[j] += w * raw[j];
  }
  for (std::size_t j = 0; j < m; ++j) acc[j] = scaler_.unscale(j, acc[j]);
  return acc;
}

Prediction MLPEnsemble::predict_with_spread(std::span<const double> x, std::size_t target) const {
  const Matrix preds = member_predictions(x);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < preds.rows; ++k) {
    sum += preds(k, target);
    sq += preds(k, target) * preds(k, target);
  }
  const double n = static_cast<double>(preds.rows);
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(sq / n - mean * mean, 0.0))};
}

MLPEnsemble fit_mlp_ensemble(const EncodedDataset& data, const MLPConfig& cfg, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < std::max<std::size_t>(cfg.min_samples, 2)) {
    throw ModelFitError("fit_mlp_ensemble: " + std::to_string(n) + " samples, need " +
                        std::to_string(cfg.min_samples));
  }
  const std::size_t m = data.y.cols;
  MLPEnsemble ens;
  ens.scaler_ = TargetScaler::fit(data.y, cfg.transforms, cfg.clamp);
  Matrix ys(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) ys(i, j) = ens.scaler_.scale(j, data.y(i, j));
  }

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (std::size_t member = 0; member < std::max<std::size_t>(cfg.members, 1); ++member) {
    Rng rng(mix_seed(seed, member + 1));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
    const std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());

    MLPNetwork net(data.x.cols, cfg.hidden, m);
    net.initialize(rng);
    auto params = net.parameters();
    std::vector<double> mom(params.size(), 0.0), vel(params.size(), 0.0), grad;
    std::vector<double> best_params(params.begin(), params.end());
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
      std::shuffle(train.begin(), train.end(), rng);
      for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
        const std::size_t len = std::min(cfg.batch_size, train.size() - start);
        const double loss = net.loss_and_gradient(
            data.x, ys, std::span<const std::size_t>(train).subspan(start, len), grad);
        if (!std::isfinite(loss)) throw ModelFitError("fit_mlp_ensemble: non-finite training loss");
        ++step;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        const double lr = cfg.learning_rate * std::sqrt(c2) / c1;
        for (std::size_t i = 0; i < params.size(); ++i) {
          mom[i] = beta1 * mom[i] + (1.0 - beta1) * grad[i];
          vel[i] = beta2 * vel[i] + (1.0 - beta2) * grad[i] * grad[i];
          params[i] -= lr * mom[i] / (std::sqrt(vel[i]) + eps);
        }
      }
      if (val.empty()) continue;
      const double v = net.loss(data.x, ys, val);
      if (!std::isfinite(v)) throw ModelFitError("fit_mlp_ensemble: non-finite validation loss");
      if (v < best_val) {
        best_val = v;
        std::copy(params.begin(), params.end(), best_params.begin());
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
    if (!val.empty()) std::copy(best_params.begin(), best_params.end(), params.begin());
    ens.members_.push_back(std::move(net));
  }
  ens.alpha_ = dirichlet_weights(ens.members_.size(), seed);
  return ens;
}

std::vector<double> ensemble_predict(const MLPEnsemble& model, std::span<const double> x,
                                     EnsembleMode mode) {
  return model.predict(x, mode);
}

// ---------------------------------------------------------------------------

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman_rho(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.size() < 2) {
    throw std::invalid_argument("spearman_rho: need two equal-length sequences of length >= 2");
  }
  const auto a = fractional_ranks(pred);
  const auto b = fractional_ranks(truth);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace mfhpo
