#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "comp/learners/dataset.hpp"
#include "comp/numerics.hpp"

namespace comp::learn {

inline constexpr double kProbabilityClip = 1e-12;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Binary cross-entropy summed over examples, natural log, predictions clipped to [1e-12, 1-1e-12].
inline double bce_loss(std::span<const int> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw LengthMismatch();
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double p = std::clamp(y_hat[k], kProbabilityClip, 1.0 - kProbabilityClip);
    loss -= y[k] ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

/// dL/dy_hat for each example.
inline std::vector<double> bce_gradient(std::span<const int> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw LengthMismatch();
  std::vector<double> g(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double p = std::clamp(y_hat[k], kProbabilityClip, 1.0 - kProbabilityClip);
    g[k] = y[k] ? -1.0 / p : 1.0 / (1.0 - p);
  }
  return g;
}

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;     // outputs

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0) {}

  double& w(std::size_t o, std::size_t i) { return weights[o * inputs + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * inputs + i]; }
};

class DivergedTraining : public std::runtime_error {
 public:
  DivergedTraining() : std::runtime_error("MLP training loss became non-finite") {}
};

/// Fully connected network: `depth` ReLU hidden layers of `width` units, sigmoid output.
class MlpModel {
 public:
  MlpModel() = default;

  MlpModel(std::size_t depth, std::size_t width) : depth_(depth), width_(width) {
    if (depth == 0 || width == 0) throw std::invalid_argument("MlpModel: depth and width must be positive");
    std::size_t in = kFeatureCount;
    for (std::size_t l = 0; l < depth; ++l) {
      layers_.emplace_back(in, width);
      in = width;
    }
    layers_.emplace_back(in, 1);
  }

  /// Glorot-uniform weights, zero biases.
  static MlpModel initialized(std::size_t depth, std::size_t width, RngStream& rng) {
    MlpModel m(depth, width);
    for (auto& layer : m.layers_) {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
      for (double& v : layer.weights) v = rng.uniform(-limit, limit);
    }
    return m;
  }

  std::size_t depth() const noexcept { return depth_; }
  std::size_t width() const noexcept { return width_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Flattened as layer by layer: weights then bias.
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& l : layers_) {
      p.insert(p.end(), l.weights.begin(), l.weights.end());
      p.insert(p.end(), l.bias.begin(), l.bias.end());
    }
    return p;
  }

  void set_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw LengthMismatch();
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (double& v : l.weights) v = p[k++];
      for (double& v : l.bias) v = p[k++];
    }
  }

  /// Output probability for one scaled feature row.
  double forward(const FeatureRow& x) const {
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      next.assign(layer.outputs, 0.0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        double z = layer.bias[o];
        for (std::size_t i = 0; i < layer.inputs; ++i) z += layer.w(o, i) * a[i];
        next[o] = (l + 1 < layers_.size()) ? std::max(z, 0.0) : z;
      }
      a.swap(next);
    }
    return sigmoid(a[0]);
  }

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_)
      layers.push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
    return {{"family", "dnn"}, {"depth", depth_}, {"width", width_}, {"hidden_activation", "relu"},
            {"output_activation", "sigmoid"}, {"layers", layers}};
  }

  static MlpModel from_json(const nlohmann::json& j) {
    MlpModel m(j.at("depth").get<std::size_t>(), j.at("width").get<std::size_t>());
    const auto& layers = j.at("layers");
    if (layers.size() != m.layers_.size()) throw std::invalid_argument("MlpModel: layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto w = layers[l].at("weights").get<std::vector<double>>();
      auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != m.layers_[l].weights.size() || b.size() != m.layers_[l].bias.size())
        throw std::invalid_argument("MlpModel: layer shape mismatch");
      m.layers_[l].weights = std::move(w);
      m.layers_[l].bias = std::move(b);
    }
    return m;
  }

 private:
  std::size_t depth_ = 0;
  std::size_t width_ = 0;
  std::vector<DenseLayer> layers_;
};

inline double mlp_forward(const MlpModel& model, const FeatureRow& x) { return model.forward(x); }

/// Reusable activations and gradient accumulator for backpropagation.
class Backprop {
 public:
  explicit Backprop(const MlpModel& model) {
    for (const auto& l : model.layers()) {
      pre_.emplace_back(l.outputs, 0.0);
      post_.emplace_back(l.outputs, 0.0);
      delta_.emplace_back(l.outputs, 0.0);
      grad_.emplace_back(l.inputs, l.outputs);
    }
  }

  void zero() {
    for (auto& g : grad_) {
      std::fill(g.weights.begin(), g.weights.end(), 0.0);
      std::fill(g.bias.begin(), g.bias.end(), 0.0);
    }
  }

  /// Adds the gradient of one example's BCE term to the accumulator; returns its loss.
  double accumulate(const MlpModel& model, const FeatureRow& x, int y) {
    const auto& layers = model.layers();
    const std::size_t n = layers.size();
    for (std::size_t l = 0; l < n; ++l) {
      const auto& layer = layers[l];
      const double* in = l == 0 ? x.data() : post_[l - 1].data();
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        double z = layer.bias[o];
        const double* row = &layer.weights[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) z += row[i] * in[i];
        pre_[l][o] = z;
        post_[l][o] = (l + 1 < n) ? std::max(z, 0.0) : sigmoid(z);
      }
    }
    const double p = post_[n - 1][0];
    const double clipped = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
    const double loss = y ? -std::log(clipped) : -std::log(1.0 - clipped);

    delta_[n - 1][0] = p - static_cast<double>(y);  // sigmoid + BCE
    for (std::size_t l = n; l-- > 0;) {
      const auto& layer = layers[l];
      const double* in = l == 0 ? x.data() : post_[l - 1].data();
      auto& g = grad_[l];
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = delta_[l][o];
        g.bias[o] += d;
        double* grow = &g.weights[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) grow[i] += d * in[i];
      }
      if (l == 0) break;
      auto& below = delta_[l - 1];
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        double s = 0.0;
        for (std::size_t o = 0; o < layer.outputs; ++o) s += layer.w(o, i) * delta_[l][o];
        below[i] = pre_[l - 1][i] > 0.0 ? s : 0.0;
      }
    }
    return loss;
  }

  void apply(MlpModel& model, double learning_rate) const {
    auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t k = 0; k < layers[l].weights.size(); ++k)
        layers[l].weights[k] -= learning_rate * grad_[l].weights[k];
      for (std::size_t k = 0; k < layers[l].bias.size(); ++k) layers[l].bias[k] -= learning_rate * grad_[l].bias[k];
    }
  }

  std::vector<double> flattened() const {
    std::vector<double> p;
    for (const auto& g : grad_) {
      p.insert(p.end(), g.weights.begin(), g.weights.end());
      p.insert(p.end(), g.bias.begin(), g.bias.end());
    }
    return p;
  }

 private:
  std::vector<std::vector<double>> pre_, post_, delta_;
  std::vector<DenseLayer> grad_;
};

/// Summed BCE over `data` and its gradient with respect to MlpModel::parameters().
inline std::pair<double, std::vector<double>> loss_and_gradient(const MlpModel& model, const Dataset& data) {
  Backprop bp(model);
  bp.zero();
  double loss = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) loss += bp.accumulate(model, data.features[k], data.labels[k]);
  return {loss, bp.flattened()};
}

struct TrainingSchedule {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 300;
  std::size_t patience_epochs = 20;
  double min_improvement = 1e-6;  // on mean per-example loss
  std::uint64_t seed = 1;
};

/// Mini-batch SGD on the summed BCE of each batch. Deterministic for a given schedule seed.
/// `loss_history`, when given, receives the mean training loss of every epoch.
inline MlpModel mlp_train(const Dataset& data, std::size_t depth, std::size_t width, const TrainingSchedule& schedule,
                          std::vector<double>* loss_history = nullptr) {
  if (data.empty()) throw EmptyDataset();
  if (schedule.batch_size == 0 || !(schedule.learning_rate > 0.0))
    throw std::invalid_argument("mlp_train: invalid schedule");
  RngStream rng(schedule.seed);
  MlpModel model = MlpModel::initialized(depth, width, rng);
  Backprop bp(model);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t stop = std::min(order.size(), start + schedule.batch_size);
      bp.zero();
      for (std::size_t k = start; k < stop; ++k)
        epoch_loss += bp.accumulate(model, data.features[order[k]], data.labels[order[k]]);
      bp.apply(model, schedule.learning_rate);
    }
    const double mean_loss = epoch_loss / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) throw DivergedTraining();
    for (const auto& l : model.layers())
      for (double v : l.weights)
        if (!std::isfinite(v)) throw DivergedTraining();
    if (loss_history) loss_history->push_back(mean_loss);
    if (best - mean_loss >= schedule.min_improvement) {
      best = mean_loss;
      stale = 0;
    } else if (++stale >= schedule.patience_epochs) {
      break;
    }
  }
  return model;
}

}  // namespace comp::learn
