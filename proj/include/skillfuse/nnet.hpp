#pragma once

// 1D convolutional skill network: conv -> residual block -> scSE attention ->
// temporal GAP -> dense head, trained with Adam at batch size one.

#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>


#include "skillfuse/common.hpp"
#include "skillfuse/layers.hpp"
#include "skillfuse/random.hpp"

namespace skillfuse {

struct VbaNetConfig {
  std::size_t in_channels = 6;
  std::size_t conv_filters = 64;
  std::size_t kernel = 3;
  std::size_t se_reduction = 8;
  HeadKind head = HeadKind::classify;
  std::size_t num_classes = 2;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 5000;
  std::size_t patience = 10;
  double min_delta = 0.0;
  std::uint64_t rng_seed = 0;

  [[nodiscard]] std::size_t outputs() const { return head == HeadKind::classify ? num_classes : 1; }
  [[nodiscard]] std::size_t se_hidden() const { return std::max<std::size_t>(1, conv_filters / se_reduction); }

  void validate() const {
    if (in_channels < 1) throw std::invalid_argument("VbaNetConfig: in_channels must be >= 1");
    if (se_reduction < 1 || conv_filters < se_reduction)
      throw std::invalid_argument("VbaNetConfig: conv_filters must be >= se_reduction >= 1");
    if (kernel % 2 == 0) throw std::invalid_argument("VbaNetConfig: kernel must be odd");
    if (patience < 1) throw std::invalid_argument("VbaNetConfig: patience must be >= 1");
    if (head == HeadKind::classify && num_classes < 2)
      throw std::invalid_argument("VbaNetConfig: classification needs >= 2 classes");
    if (!(learning_rate > 0)) throw std::invalid_argument("VbaNetConfig: learning_rate must be positive");
    if (min_delta < 0) throw std::invalid_argument("VbaNetConfig: min_delta must be >= 0");
  }
};

// Named slices of the flat parameter vector.
class ParameterLayout {
 public:
  struct Block {
    std::string name;
    std::size_t offset;
    std::vector<std::size_t> shape;
    [[nodiscard]] std::size_t size() const {
      return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }
  };

  void add(std::string name, std::vector<std::size_t> shape) {
    Block b{std::move(name), total_, std::move(shape)};
    total_ += b.size();
    blocks_.push_back(std::move(b));
  }

  [[nodiscard]] const Block& block(std::string_view name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw std::out_of_range("ParameterLayout: no block named " + std::string(name));
  }

  template <typename T>
  std::span<T> view(std::span<T> params, std::string_view name) const {
    const auto& b = block(name);
    return params.subspan(b.offset, b.size());
  }

  [[nodiscard]] std::size_t total() const noexcept { return total_; }
  [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }

 private:
  std::vector<Block> blocks_;
  std::size_t total_ = 0;
};

inline ParameterLayout make_layout(const VbaNetConfig& c) {
  const std::size_t F = c.conv_filters, K = c.kernel, R = c.se_hidden();
  ParameterLayout l;
  l.add("conv0.w", {F, K, c.in_channels});
  l.add("conv0.b", {F});
  l.add("res1.w", {F, K, F});
  l.add("res1.b", {F});
  l.add("res2.w", {F, K, F});
  l.add("res2.b", {F});
  l.add("se.fc1.w", {R, F});
  l.add("se.fc1.b", {R});
  l.add("se.fc2.w", {F, R});
  l.add("se.fc2.b", {F});
  l.add("se.spatial.w", {F});
  l.add("se.spatial.b", {1});
  l.add("head.w", {c.outputs(), F});
  l.add("head.b", {c.outputs()});
  return l;
}

// Fan-in scaled uniform weights; zero biases and zero final layers of both
// attention gates, so a fresh block starts as gates of exactly 0.5.
inline std::vector<double> init_parameters(const VbaNetConfig& c, const ParameterLayout& layout, Rng& rng) {
  std::vector<double> p(layout.total(), 0.0);
  for (const auto& b : layout.blocks()) {
    const bool is_weight = b.name.ends_with(".w");
    const bool gate_final = b.name.starts_with("se.fc2") || b.name.starts_with("se.spatial");
    if (!is_weight || gate_final) continue;
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < b.shape.size(); ++i) fan_in *= b.shape[i];
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < b.size(); ++i) p[b.offset + i] = rng.uniform(-limit, limit);
  }
  (void)c;
  return p;
}

struct ForwardCache {
  Matrix x, a0_pre, a0, h1_pre, h1, r, s;
  layers::ScseCache se;
  std::vector<double> pooled, out;
};

// Stateless network evaluator bound to a config and layout.
class SkillNet {
 public:
  explicit SkillNet(VbaNetConfig cfg) : cfg_(std::move(cfg)), layout_(make_layout(cfg_)) { cfg_.validate(); }

  [[nodiscard]] const VbaNetConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return layout_.total(); }

  void check_input(const Matrix& x) const {
    if (x.cols() != cfg_.in_channels) throw std::invalid_argument("SkillNet: input channel count mismatch");
    if (x.rows() < cfg_.kernel) throw std::invalid_argument("SkillNet: input shorter than kernel");
  }

  [[nodiscard]] layers::ScseParams scse_params(std::span<const double> p) const {
    return {layout_.view(p, "se.fc1.w"), layout_.view(p, "se.fc1.b"),     layout_.view(p, "se.fc2.w"),
            layout_.view(p, "se.fc2.b"), layout_.view(p, "se.spatial.w"), layout_.view(p, "se.spatial.b")};
  }

  // Raw head outputs (logits or scaled score); fills `cache` when given.
  std::vector<double> forward(std::span<const double> p, const Matrix& x, ForwardCache* cache = nullptr) const {
    check_input(x);
    const std::size_t F = cfg_.conv_filters, K = cfg_.kernel;
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.x = x;
    c.a0_pre = layers::conv1d_forward(x, layout_.view(p, "conv0.w"), layout_.view(p, "conv0.b"), F, K);
    c.a0 = layers::relu(c.a0_pre);
    c.h1_pre = layers::conv1d_forward(c.a0, layout_.view(p, "res1.w"), layout_.view(p, "res1.b"), F, K);
    c.h1 = layers::relu(c.h1_pre);
    c.r = layers::conv1d_forward(c.h1, layout_.view(p, "res2.w"), layout_.view(p, "res2.b"), F, K);
    for (std::size_t i = 0; i < c.r.size(); ++i) c.r.values()[i] += c.a0.values()[i];
    c.s = layers::scse_forward(c.r, scse_params(p), &c.se);
    c.pooled = layers::gap_forward(c.s);
    c.out = layers::dense_forward(c.pooled, layout_.view(p, "head.w"), layout_.view(p, "head.b"));
    return c.out;
  }

  // Attention output feeding the GAP: T x F.
  [[nodiscard]] Matrix feature_maps(std::span<const double> p, const Matrix& x) const {
    ForwardCache c;
    forward(p, x, &c);
    return c.s;
  }

  // Accumulates dL/dparams into `grad` given dL/dout; returns dL/dx.
  Matrix backward(std::span<const double> p, const ForwardCache& c, std::span<const double> dout,
                  std::span<double> grad) const {
    const std::size_t K = cfg_.kernel;
    auto g = [&](std::string_view name) { return layout_.view(grad, name); };
    const auto dpooled = layers::dense_backward(c.pooled, layout_.view(p, "head.w"), dout, g("head.w"), g("head.b"));
    const Matrix ds = layers::gap_backward(dpooled, c.s.rows());
    const layers::ScseGrads sg{g("se.fc1.w"), g("se.fc1.b"), g("se.fc2.w"),
                               g("se.fc2.b"), g("se.spatial.w"), g("se.spatial.b")};
    const Matrix dr = layers::scse_backward(c.r, scse_params(p), c.se, ds, sg);
    const Matrix dh1 = layers::conv1d_backward(c.h1, layout_.view(p, "res2.w"), dr, K, g("res2.w"), g("res2.b"));
    const Matrix dh1_pre = layers::relu_backward(c.h1_pre, dh1);
    Matrix da0 = layers::conv1d_backward(c.a0, layout_.view(p, "res1.w"), dh1_pre, K, g("res1.w"), g("res1.b"));
    for (std::size_t i = 0; i < da0.size(); ++i) da0.values()[i] += dr.values()[i];
    const Matrix da0_pre = layers::relu_backward(c.a0_pre, da0);
    return layers::conv1d_backward(c.x, layout_.view(p, "conv0.w"), da0_pre, K, g("conv0.w"), g("conv0.b"));
  }

  // Loss of one example; `target` is a class index (classify) or a scaled score (regress).
  double loss(std::span<const double> p, const Matrix& x, double target, ForwardCache* cache = nullptr,
              std::vector<double>* dout = nullptr) const {
    const auto out = forward(p, x, cache);
    std::vector<double> d(out.size());
    double l;
    if (cfg_.head == HeadKind::classify) {
      l = layers::softmax_cross_entropy(out, static_cast<std::size_t>(target), d);
    } else {
      l = layers::squared_error(out[0], target, d[0]);
    }
    if (dout) *dout = std::move(d);
    return l;
  }

  double loss_and_gradient(std::span<const double> p, const Matrix& x, double target, std::span<double> grad) const {
    ForwardCache c;
    std::vector<double> dout;
    const double l = loss(p, x, target, &c, &dout);
    backward(p, c, dout, grad);
    return l;
  }

 private:
  VbaNetConfig cfg_;
  ParameterLayout layout_;
};

class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

// Stops after `patience` consecutive epochs without improving the best loss by more than min_delta.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience, double min_delta = 0.0) : patience_(patience), min_delta_(min_delta) {}

  // Returns true when `loss` is a new best.
  bool update(double loss, std::size_t epoch) {
    if (loss < best_ - min_delta_) {
      best_ = loss;
      best_epoch_ = epoch;
      wait_ = 0;
      return true;
    }
    ++wait_;
    return false;
  }

  [[nodiscard]] bool should_stop() const noexcept { return wait_ >= patience_; }
  [[nodiscard]] double best_loss() const noexcept { return best_; }
  [[nodiscard]] std::size_t best_epoch() const noexcept { return best_epoch_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t wait_ = 0;
};

struct TrainingExample {
  Matrix x;
  double target = 0.0;  // class index or raw score
};

struct TrainedModel {
  VbaNetConfig config;
  std::vector<double> parameters;
  std::vector<double> history;  // mean training loss per epoch
  std::size_t best_epoch = 0;
  // Score scaling used by the regression head: scaled = (y - min) / (max - min).
  double target_min = 0.0;
  double target_max = 1.0;

  [[nodiscard]] double scale_target(double y) const {
    const double span = target_max - target_min;
    return span > 0 ? (y - target_min) / span : 0.5;
  }
  [[nodiscard]] double unscale_target(double s) const {
    const double span = target_max - target_min;
    return span > 0 ? target_min + s * span : target_min;
  }
};

struct Prediction {
  std::vector<double> outputs;        // raw head outputs
  std::vector<double> probabilities;  // classify only
  int predicted_class = -1;
  double confidence = 0.0;  // probability of the predicted class
  double score = 0.0;       // regress only, original scale
};

inline Prediction forward(const TrainedModel& model, const Matrix& x) {
  const SkillNet net(model.config);
  Prediction pr;
  pr.outputs = net.forward(model.parameters, x);
  if (model.config.head == HeadKind::classify) {
    pr.probabilities = layers::softmax(pr.outputs);
    const auto it = std::max_element(pr.probabilities.begin(), pr.probabilities.end());
    pr.predicted_class = static_cast<int>(it - pr.probabilities.begin());
    pr.confidence = *it;
  } else {
    pr.score = model.unscale_target(pr.outputs[0]);
  }
  return pr;
}

inline TrainedModel train(const VbaNetConfig& config, std::span<const TrainingExample> data) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  TrainedModel model;
  model.config = config;

  std::vector<double> targets(data.size());
  if (config.head == HeadKind::classify) {
    std::vector<std::size_t> counts(config.num_classes, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double t = data[i].target;
      if (t < 0 || t >= static_cast<double>(config.num_classes) || t != std::floor(t))
        throw std::invalid_argument("train: class label out of range");
      ++counts[static_cast<std::size_t>(t)];
      targets[i] = t;
    }
    if (data.size() < 2 || std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }) < 2)
      throw std::invalid_argument("train: classification needs at least two classes present");
  } else {
    auto [lo, hi] = std::minmax_element(data.begin(), data.end(),
                                        [](const auto& a, const auto& b) { return a.target < b.target; });
    model.target_min = lo->target;
    model.target_max = hi->target;
    for (std::size_t i = 0; i < data.size(); ++i) targets[i] = model.scale_target(data[i].target);
  }

  const SkillNet net(config);
  for (const auto& ex : data) net.check_input(ex.x);
  Rng rng(config.rng_seed);
  std::vector<double> params = init_parameters(config, net.layout(), rng);
  std::vector<double> best = params;
  std::vector<double> grad(params.size());
  Adam adam(params.size(), config.learning_rate);
  EarlyStopping stopper(config.patience, config.min_delta);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t idx : order) {
      std::fill(grad.begin(), grad.end(), 0.0);
      total += net.loss_and_gradient(params, data[idx].x, targets[idx], grad);
      adam.step(params, grad);
    }
    const double epoch_loss = total / static_cast<double>(data.size());
    model.history.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss)) break;
    if (stopper.update(epoch_loss, epoch)) best = params;
    if (stopper.should_stop()) break;
  }
  model.parameters = std::move(best);
  model.best_epoch = stopper.best_epoch();
  return model;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::size_t coordinates_skipped = 0;  // finite difference straddled a ReLU kink
};

namespace detail {

inline std::vector<bool> relu_signs(const ForwardCache& c) {
  std::vector<bool> s;
  s.reserve(c.a0_pre.size() + c.h1_pre.size() + c.se.hidden_pre.size());
  for (double v : c.a0_pre.values()) s.push_back(v > 0);
  for (double v : c.h1_pre.values()) s.push_back(v > 0);
  for (double v : c.se.hidden_pre) s.push_back(v > 0);
  return s;
}

}  // namespace detail

// Compares the reverse-mode gradient of the loss with central finite
// differences over a random subset of parameter coordinates, with
// parameters drawn uniformly from [-0.5, 0.5]. Coordinates whose
// perturbation flips any ReLU are replaced by fresh ones.
inline GradCheckResult grad_check(const VbaNetConfig& config, const Matrix& x, double target,
                                  std::size_t coordinates = 256, double step = 1e-5) {
  const SkillNet net(config);
  Rng rng(derive_seed(config.rng_seed, 0x6772));
  std::vector<double> p(net.parameter_count());
  for (double& v : p) v = rng.uniform(-0.5, 0.5);
  std::vector<double> grad(p.size(), 0.0);
  net.loss_and_gradient(p, x, target, grad);

  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx.begin(), idx.end());

  GradCheckResult res;
  for (std::size_t k = 0; k < idx.size() && res.coordinates_checked < coordinates; ++k) {
    const std::size_t i = idx[k];
    const double orig = p[i];
    ForwardCache cp, cm;
    p[i] = orig + step;
    const double lp = net.loss(p, x, target, &cp);
    p[i] = orig - step;
    const double lm = net.loss(p, x, target, &cm);
    p[i] = orig;
    if (detail::relu_signs(cp) != detail::relu_signs(cm)) {
      ++res.coordinates_skipped;
      continue;
    }
    const double fd = (lp - lm) / (2.0 * step);
    const double denom = std::max({std::abs(grad[i]), std::abs(fd), 1e-8});
    res.max_relative_error = std::max(res.max_relative_error, std::abs(grad[i] - fd) / denom);
    ++res.coordinates_checked;
  }
  return res;
}

}  // namespace skillfuse
