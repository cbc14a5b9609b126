#include "fedint/model.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "fedint/error.hpp"
#include "fedint/kernels.hpp"
#include "fedint/rng.hpp"

namespace fedint::model {

const Tensor& ModelParams::at(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw Error(ErrorCode::ShapeMismatch, "no tensor named " + std::string(name));
}

Tensor& ModelParams::at(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

std::size_t ModelParams::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.values.size();
  return n;
}

bool ModelParams::compatible(const ModelParams& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.shape != b.shape || a.values.size() != b.values.size()) return false;
  }
  return true;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams out = *this;
  for (auto& t : out.tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
  return out;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& t : tensors_) flat.insert(flat.end(), t.values.begin(), t.values.end());
  return flat;
}

void ModelParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != size()) throw Error(ErrorCode::ShapeMismatch, "flat parameter size mismatch");
  std::size_t off = 0;
  for (auto& t : tensors_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.values.size(), t.values.begin());
    off += t.values.size();
  }
}

bool is_classifier(const ModelSpec& spec) { return !std::holds_alternative<LinearRegression>(spec); }

std::size_t input_dim(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return s.d; }, spec);
}

std::string describe(const ModelSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearRegression>)
          return "linear_regression(d=" + std::to_string(s.d) + ")";
        else if constexpr (std::is_same_v<T, LogisticRegression>)
          return "logistic_regression(d=" + std::to_string(s.d) +
                 ", classes=" + std::to_string(s.classes) + ")";
        else
          return "mlp(d=" + std::to_string(s.d) + ", hidden=" + std::to_string(s.hidden) +
                 ", classes=" + std::to_string(s.classes) + ", relu)";
      },
      spec);
}

namespace {

Tensor tensor(std::string name, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)};
}

void check_spec(const ModelSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        bool ok = s.d >= 1;
        if constexpr (std::is_same_v<T, LogisticRegression>) ok = ok && s.classes >= 1;
        if constexpr (std::is_same_v<T, Mlp>) ok = ok && s.classes >= 1 && s.hidden >= 1;
        if (!ok) throw Error(ErrorCode::ConfigError, "model dimensions must be >= 1");
      },
      spec);
}

void check_shapes(const ModelSpec& spec, const ModelParams& params, const Dataset& data) {
  const ModelParams expected = init_params(spec, 0);
  if (!expected.compatible(params))
    throw Error(ErrorCode::ShapeMismatch, "parameters do not match " + describe(spec));
  if (data.n > 0 && data.d != input_dim(spec))
    throw Error(ErrorCode::ShapeMismatch, "dataset width " + std::to_string(data.d) + " vs model " +
                                              std::to_string(input_dim(spec)));
}

std::size_t class_of(double label, std::size_t classes) {
  if (!(label >= 0.0) || label != std::floor(label) || label >= static_cast<double>(classes))
    throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(label) + " outside " +
                                              std::to_string(classes) + " classes");
  return static_cast<std::size_t>(label);
}

/// z_c = W_c . x + b_c for a row-major (rows x cols) W.
void affine(const std::vector<double>& w, const std::vector<double>& b, std::span<const double> x,
            std::vector<double>& z) {
  const std::size_t cols = x.size();
  z.resize(b.size());
  for (std::size_t c = 0; c < b.size(); ++c)
    z[c] = kernels::dot(std::span(w.data() + c * cols, cols), x) + b[c];
}

/// Softmax in place; returns log-sum-exp of the input.
double softmax(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return m + std::log(sum);
}

struct MlpCache {
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> hidden;  // relu output
  std::vector<double> logits;
};

void mlp_forward(const Mlp& s, const ModelParams& p, std::span<const double> x, MlpCache& c) {
  affine(p.at("W1").values, p.at("b1").values, x, c.pre);
  c.hidden.resize(s.hidden);
  for (std::size_t h = 0; h < s.hidden; ++h) c.hidden[h] = c.pre[h] > 0.0 ? c.pre[h] : 0.0;
  affine(p.at("W2").values, p.at("b2").values, c.hidden, c.logits);
}

}  // namespace

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  return std::visit(
      [&](const auto& s) -> ModelParams {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearRegression>) {
          return ModelParams({tensor("w", {s.d}), tensor("b", {1})});
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          return ModelParams({tensor("W", {s.classes, s.d}), tensor("b", {s.classes})});
        } else {
          ModelParams p({tensor("W1", {s.hidden, s.d}), tensor("b1", {s.hidden}),
                         tensor("W2", {s.classes, s.hidden}), tensor("b2", {s.classes})});
          Rng rng(seed);
          const double r1 = 1.0 / std::sqrt(static_cast<double>(s.d));
          const double r2 = 1.0 / std::sqrt(static_cast<double>(s.hidden));
          for (auto& v : p.at("W1").values) v = rng.uniform(-r1, r1);
          for (auto& v : p.at("W2").values) v = rng.uniform(-r2, r2);
          return p;
        }
      },
      spec);
}

std::vector<double> forward(const ModelSpec& spec, const ModelParams& params,
                            std::span<const double> x) {
  return std::visit(
      [&](const auto& s) -> std::vector<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearRegression>) {
          return {kernels::dot(params.at("w").values, x) + params.at("b").values[0]};
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          std::vector<double> z;
          affine(params.at("W").values, params.at("b").values, x, z);
          return z;
        } else {
          MlpCache c;
          mlp_forward(s, params, x, c);
          return c.logits;
        }
      },
      spec);
}

double loss(const ModelSpec& spec, const ModelParams& params, const Dataset& batch) {
  check_shapes(spec, params, batch);
  if (batch.n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i) {
    auto out = forward(spec, params, batch.row(i));
    if (!is_classifier(spec)) {
      const double r = out[0] - batch.labels[i];
      total += 0.5 * r * r;
    } else {
      const std::size_t y = class_of(batch.labels[i], out.size());
      const double logit = out[y];
      total += softmax(out) - logit;
    }
  }
  return total / static_cast<double>(batch.n);
}

ModelParams gradient(const ModelSpec& spec, const ModelParams& params, const Dataset& batch) {
  std::vector<std::size_t> rows(batch.n);
  std::iota(rows.begin(), rows.end(), 0);
  return gradient(spec, params, batch, rows);
}

ModelParams gradient(const ModelSpec& spec, const ModelParams& params, const Dataset& data,
                     std::span<const std::size_t> rows) {
  check_shapes(spec, params, data);
  ModelParams grad = params.zeros_like();
  if (rows.empty()) return grad;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearRegression>) {
          auto& gw = grad.at("w").values;
          auto& gb = grad.at("b").values;
          const auto& w = params.at("w").values;
          const double b = params.at("b").values[0];
          for (std::size_t r : rows) {
            const auto x = data.row(r);
            const double resid = kernels::dot(w, x) + b - data.labels[r];
            kernels::axpy(resid, x, gw);
            gb[0] += resid;
          }
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          auto& gW = grad.at("W").values;
          auto& gb = grad.at("b").values;
          std::vector<double> z;
          for (std::size_t r : rows) {
            const auto x = data.row(r);
            affine(params.at("W").values, params.at("b").values, x, z);
            softmax(z);
            z[class_of(data.labels[r], s.classes)] -= 1.0;
            for (std::size_t c = 0; c < s.classes; ++c) {
              kernels::axpy(z[c], x, std::span(gW.data() + c * s.d, s.d));
              gb[c] += z[c];
            }
          }
        } else {
          auto& gW1 = grad.at("W1").values;
          auto& gb1 = grad.at("b1").values;
          auto& gW2 = grad.at("W2").values;
          auto& gb2 = grad.at("b2").values;
          const auto& W2 = params.at("W2").values;
          MlpCache c;
          std::vector<double> dh(s.hidden);
          for (std::size_t r : rows) {
            const auto x = data.row(r);
            mlp_forward(s, params, x, c);
            softmax(c.logits);
            c.logits[class_of(data.labels[r], s.classes)] -= 1.0;
            std::fill(dh.begin(), dh.end(), 0.0);
            for (std::size_t k = 0; k < s.classes; ++k) {
              const double dz = c.logits[k];
              kernels::axpy(dz, c.hidden, std::span(gW2.data() + k * s.hidden, s.hidden));
              gb2[k] += dz;
              kernels::axpy(dz, std::span(W2.data() + k * s.hidden, s.hidden), dh);
            }
            for (std::size_t h = 0; h < s.hidden; ++h) {
              const double da = c.pre[h] > 0.0 ? dh[h] : 0.0;
              if (da == 0.0) continue;
              kernels::axpy(da, x, std::span(gW1.data() + h * s.d, s.d));
              gb1[h] += da;
            }
          }
        }
      },
      spec);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& t : grad.tensors()) kernels::scale(inv, t.values);
  return grad;
}

std::uint64_t steps_for_time(double step_rate, double seconds) {
  if (!(step_rate > 0.0) || seconds < 0.0) return 0;
  const double product = step_rate * seconds;
  return static_cast<std::uint64_t>(std::floor(product * (1.0 + 1e-12) + 1e-12));
}

std::uint64_t planned_steps(const Budget& budget, std::size_t n, std::size_t batch_size,
                            double step_rate) {
  if (batch_size == 0) throw Error(ErrorCode::ConfigError, "batch_size must be positive");
  return std::visit(
      [&](const auto& b) -> std::uint64_t {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Epochs>)
          return b.count * ((n + batch_size - 1) / batch_size);
        else if constexpr (std::is_same_v<T, Steps>)
          return b.count;
        else
          return steps_for_time(step_rate, b.seconds);
      },
      budget);
}

TrainResult sgd_train(const ModelSpec& spec, ModelParams params, const Dataset& data,
                      const TrainHyper& hyper, double step_rate) {
  if (data.n == 0) throw Error(ErrorCode::EmptyDataset, "sgd_train on an empty dataset");
  if (!(hyper.learning_rate > 0.0))
    throw Error(ErrorCode::ConfigError, "learning_rate must be positive");
  const std::uint64_t steps = planned_steps(hyper.budget, data.n, hyper.batch_size, step_rate);
  Rng rng(hyper.seed);
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t pos = data.n;  // forces a shuffle before the first batch
  for (std::uint64_t step = 0; step < steps; ++step) {
    if (pos >= data.n) {
      rng.shuffle(order);
      pos = 0;
    }
    const std::size_t take = std::min(hyper.batch_size, data.n - pos);
    const auto g = gradient(spec, params, data, std::span(order).subspan(pos, take));
    pos += take;
    for (std::size_t t = 0; t < params.tensors().size(); ++t)
      kernels::axpy(-hyper.learning_rate, g.tensors()[t].values, params.tensors()[t].values);
  }
  return {std::move(params), steps};
}

MetricsReport evaluate(const ModelSpec& spec, const ModelParams& params, const Dataset& data) {
  MetricsReport m;
  m.metric_name = is_classifier(spec) ? "accuracy" : "mae";
  m.n = data.n;
  if (data.n == 0) return m;
  m.loss = loss(spec, params, data);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto out = forward(spec, params, data.row(i));
    if (is_classifier(spec)) {
      const auto best = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
      acc += best == class_of(data.labels[i], out.size()) ? 1.0 : 0.0;
    } else {
      acc += std::abs(out[0] - data.labels[i]);
    }
  }
  m.metric_value = acc / static_cast<double>(data.n);
  return m;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["loss"] = loss ? nlohmann::json(*loss) : nlohmann::json(nullptr);
  j["metric_name"] = metric_name;
  j["metric_value"] = metric_value ? nlohmann::json(*metric_value) : nlohmann::json(nullptr);
  j["n"] = n;
  return j.dump();
}

}  // namespace fedint::model
