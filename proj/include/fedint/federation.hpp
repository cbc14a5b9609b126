#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedint/model.hpp"
#include "fedint/runtime.hpp"

namespace fedint::fed {

struct Synchronous {
  std::uint64_t local_epochs = 1;
};
/// global <- (1 - a_s) global + a_s local, a_s = alpha (1 + staleness)^-staleness_exponent.
struct Asynchronous {
  std::uint64_t local_epochs = 1;
  double alpha = 0.5;
  double staleness_exponent = 0.5;
};
/// Every learner trains for period_t simulated seconds per round.
struct SemiSynchronous {
  double period_t = 1.0;
};

using ProtocolSpec = std::variant<Synchronous, Asynchronous, SemiSynchronous>;

std::string describe(const ProtocolSpec& protocol);

enum class ExecutionMode { Simulated, Threaded };

std::string_view to_string(ExecutionMode mode);
std::optional<ExecutionMode> execution_mode_from_string(std::string_view text);

struct FederationConfig {
  ProtocolSpec protocol = Synchronous{};
  std::uint64_t rounds = 1;
  /// Fraction of learners the synchronous scheduler samples per round.
  double participation_fraction = 1.0;
  std::uint64_t seed = 0;
  model::ModelSpec model = model::LinearRegression{};
  /// Learning rate and batch size; the budget comes from the protocol.
  model::TrainHyper hyper;
  bool secure_aggregation = false;
  /// Starting global model; init_params(model, derive_seed(seed, "init")) when unset.
  std::optional<ModelParams> initial;
};

/// Throws ConfigError on an invalid combination.
void validate_config(const FederationConfig& config, std::size_t learners);

struct LearnerRecord {
  std::string id;
  std::uint64_t steps_done = 0;
  double busy_time = 0.0;
  double weight = 0.0;
  /// Asynchronous merges only.
  std::optional<std::uint64_t> staleness;
  std::uint64_t dispatch_round = 0;
};

struct RoundRecord {
  std::uint64_t round = 0;
  double sim_time = 0.0;
  std::vector<std::string> participants;
  std::vector<LearnerRecord> learners;
  model::MetricsReport federation;
  std::vector<std::pair<std::string, model::MetricsReport>> local;

  /// One JSON object on a single line.
  std::string to_json() const;
};

struct RunLog {
  std::vector<RoundRecord> rounds;
  ModelParams final_params;

  /// JSON-lines, one record per round.
  std::string to_jsonl() const;
};

using RoundSink = std::function<void(const RoundRecord&)>;

/// Runs `config.rounds` aggregations. Learner errors abort the run with
/// Error(LearnerFailure); records already produced have been passed to `sink`.
RunLog run_federation(const FederationConfig& config, std::span<const LearnerHandle> learners,
                      ExecutionMode mode = ExecutionMode::Simulated, const RoundSink& sink = {});

}  // namespace fedint::fed
