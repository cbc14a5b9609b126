#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedint/dataset.hpp"

namespace fedint::model {

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool operator==(const Tensor&) const = default;
};

/// Ordered named tensors; the model parameters exchanged in a federation.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {}

  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const;
  /// Same names, order and shapes.
  bool compatible(const ModelParams& other) const;
  /// Same layout with every value zeroed.
  ModelParams zeros_like() const;

  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  bool operator==(const ModelParams&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

struct LinearRegression {
  std::size_t d = 1;
};
struct LogisticRegression {
  std::size_t d = 1;
  std::size_t classes = 2;
};
/// One hidden ReLU layer, softmax output.
struct Mlp {
  std::size_t d = 1;
  std::size_t hidden = 8;
  std::size_t classes = 2;
};

using ModelSpec = std::variant<LinearRegression, LogisticRegression, Mlp>;

bool is_classifier(const ModelSpec& spec);
std::size_t input_dim(const ModelSpec& spec);
std::string describe(const ModelSpec& spec);

/// Zeros for the linear models; seeded uniform(+-1/sqrt(fan_in)) weights for the MLP.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// Mean loss over the batch: 0.5 (y_hat - y)^2 for regression, softmax
/// cross-entropy for classifiers.
double loss(const ModelSpec& spec, const ModelParams& params, const Dataset& batch);

/// Exact mean gradient of `loss` over the batch.
ModelParams gradient(const ModelSpec& spec, const ModelParams& params, const Dataset& batch);
ModelParams gradient(const ModelSpec& spec, const ModelParams& params, const Dataset& data,
                     std::span<const std::size_t> rows);

/// Class scores (logits) or the regression prediction for one row.
std::vector<double> forward(const ModelSpec& spec, const ModelParams& params,
                            std::span<const double> x);

struct Epochs {
  std::uint64_t count = 1;
};
struct Steps {
  std::uint64_t count = 1;
};
/// Simulated seconds; the learner's step rate turns it into a step count.
struct SimTime {
  double seconds = 1.0;
};
using Budget = std::variant<Epochs, Steps, SimTime>;

struct TrainHyper {
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  Budget budget = Epochs{1};
  std::uint64_t seed = 0;
};

/// floor(rate * seconds), tolerant of representation error in the product.
std::uint64_t steps_for_time(double step_rate, double seconds);

/// Number of SGD steps `budget` implies for n rows.
std::uint64_t planned_steps(const Budget& budget, std::size_t n, std::size_t batch_size,
                            double step_rate);

struct TrainResult {
  ModelParams params;
  std::uint64_t steps_done = 0;
};

/// Mini-batch SGD; rows are reshuffled (seeded) at the start of every epoch.
TrainResult sgd_train(const ModelSpec& spec, ModelParams params, const Dataset& data,
                      const TrainHyper& hyper, double step_rate = 1.0);

struct MetricsReport {
  std::optional<double> loss;
  std::string metric_name;  // "accuracy" or "mae"
  std::optional<double> metric_value;
  std::size_t n = 0;
  /// {"loss", "metric_name", "metric_value", "n"}; absent values are null.
  std::string to_json() const;
};

MetricsReport evaluate(const ModelSpec& spec, const ModelParams& params, const Dataset& data);

}  // namespace fedint::model
