#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedint/dataset.hpp"
#include "fedint/model.hpp"

namespace fedint::fed {

using model::ModelParams;

struct ModelStoreEntry {
  std::string learner_id;
  ModelParams params;
  double contribution = 0.0;
  std::uint64_t round_submitted = 0;

  std::uint64_t staleness(std::uint64_t current_round) const {
    return current_round >= round_submitted ? current_round - round_submitted : 0;
  }
};

/// Live local models keyed by learner id; a put replaces the learner's entry.
class ModelStore {
 public:
  std::optional<ModelStoreEntry> put(ModelStoreEntry entry);
  std::optional<ModelStoreEntry> get(const std::string& learner_id) const;
  std::vector<ModelStoreEntry> entries() const;
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::map<std::string, ModelStoreEntry> entries_;
};

/// p_k / P. Throws EmptyEntrySet, ZeroTotalContribution, or ConfigError on a
/// negative contribution.
std::vector<double> aggregation_weights(std::span<const double> contributions);

/// Elementwise sum_k (p_k / P) x_k.
ModelParams aggregate_weighted(std::span<const ModelStoreEntry> entries);

struct LearnerHandle {
  std::string id;
  model::Dataset data;
  /// p_k; |D_k| when unset.
  std::optional<double> contribution;
  /// Simulated SGD steps per second.
  double step_rate = 1.0;

  double weight() const { return contribution ? *contribution : static_cast<double>(data.n); }
};

struct CommunityMetrics {
  std::vector<model::MetricsReport> local;  // aligned with the learners
  std::vector<double> weights;              // p_k / P over learners with data
  model::MetricsReport federation;
};

/// Per-learner evaluation plus the (p_k / P)-weighted aggregate. Learners
/// without rows report absent metrics and carry no weight.
CommunityMetrics evaluate_community(const model::ModelSpec& spec, const ModelParams& params,
                                    std::span<const LearnerHandle> learners);

/// Weighted combination of per-learner reports; contributions align with `local`.
CommunityMetrics combine_metrics(const model::ModelSpec& spec,
                                 std::vector<model::MetricsReport> local,
                                 std::span<const double> contributions);

}  // namespace fedint::fed
