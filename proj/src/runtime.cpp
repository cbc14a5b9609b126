#include "fedint/runtime.hpp"

#include "fedint/error.hpp"
#include "fedint/kernels.hpp"

namespace fedint::fed {

std::optional<ModelStoreEntry> ModelStore::put(ModelStoreEntry entry) {
  std::optional<ModelStoreEntry> prior;
  auto it = entries_.find(entry.learner_id);
  if (it != entries_.end()) {
    prior = std::move(it->second);
    it->second = std::move(entry);
  } else {
    const std::string key = entry.learner_id;
    entries_.emplace(key, std::move(entry));
  }
  return prior;
}

std::optional<ModelStoreEntry> ModelStore::get(const std::string& learner_id) const {
  auto it = entries_.find(learner_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<ModelStoreEntry> ModelStore::entries() const {
  std::vector<ModelStoreEntry> out;
  out.reserve(entries_.size());
  for (const auto& [_, e] : entries_) out.push_back(e);
  return out;
}

std::vector<double> aggregation_weights(std::span<const double> contributions) {
  if (contributions.empty()) throw Error(ErrorCode::EmptyEntrySet, "no contributions");
  double total = 0.0;
  for (double p : contributions) {
    if (!(p >= 0.0)) throw Error(ErrorCode::ConfigError, "negative contribution");
    total += p;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroTotalContribution, "sum of contributions is 0");
  std::vector<double> w;
  w.reserve(contributions.size());
  for (double p : contributions) w.push_back(p / total);
  return w;
}

ModelParams aggregate_weighted(std::span<const ModelStoreEntry> entries) {
  if (entries.empty()) throw Error(ErrorCode::EmptyEntrySet, "nothing to aggregate");
  for (const auto& e : entries)
    if (!e.params.compatible(entries.front().params))
      throw Error(ErrorCode::IncompatibleShapes,
                  "learner " + e.learner_id + " does not match " + entries.front().learner_id);
  std::vector<double> p;
  p.reserve(entries.size());
  for (const auto& e : entries) p.push_back(e.contribution);
  const auto w = aggregation_weights(p);
  ModelParams out = entries.front().params.zeros_like();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (w[k] == 0.0) continue;
    for (std::size_t t = 0; t < out.tensors().size(); ++t)
      kernels::axpy(w[k], entries[k].params.tensors()[t].values, out.tensors()[t].values);
  }
  return out;
}

CommunityMetrics combine_metrics(const model::ModelSpec& spec,
                                 std::vector<model::MetricsReport> local,
                                 std::span<const double> contributions) {
  CommunityMetrics out;
  out.federation.metric_name = model::is_classifier(spec) ? "accuracy" : "mae";
  out.local = std::move(local);
  std::vector<double> p;
  for (std::size_t k = 0; k < out.local.size(); ++k)
    p.push_back(out.local[k].n > 0 && out.local[k].loss ? contributions[k] : 0.0);
  double total = 0.0;
  for (double v : p) total += v;
  out.weights.assign(p.size(), 0.0);
  if (total <= 0.0) return out;
  double loss = 0.0, metric = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.weights[k] = p[k] / total;
    if (p[k] == 0.0) continue;
    loss += out.weights[k] * *out.local[k].loss;
    metric += out.weights[k] * *out.local[k].metric_value;
    out.federation.n += out.local[k].n;
  }
  out.federation.loss = loss;
  out.federation.metric_value = metric;
  return out;
}

CommunityMetrics evaluate_community(const model::ModelSpec& spec, const ModelParams& params,
                                    std::span<const LearnerHandle> learners) {
  std::vector<model::MetricsReport> local;
  std::vector<double> p;
  for (const auto& l : learners) {
    local.push_back(model::evaluate(spec, params, l.data));
    p.push_back(l.weight());
  }
  return combine_metrics(spec, std::move(local), p);
}

}  // namespace fedint::fed
