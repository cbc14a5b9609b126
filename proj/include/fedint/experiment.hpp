#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedint/dataset.hpp"
#include "fedint/exchange.hpp"
#include "fedint/federation.hpp"
#include "fedint/imputation.hpp"
#include "fedint/mapping.hpp"

namespace fedint::experiment {

namespace fs = std::filesystem;

/// Interpreted predicate declared in the config.
struct FunctionDecl {
  std::string name;
  mapping::FunctionKind kind = mapping::FunctionKind::Normalize;
  exchange::ImputeFunction impute;  // Impute only
};

struct ImputerDecl {
  impute::ImputerSpec spec;
  /// Statistics come from this query's certain answers over the pass-1
  /// instance when set, otherwise from spec.relation.
  std::string train_query;
};

struct NormalizationBinding {
  fs::path path;
  bool strict = false;
};

struct SiloConfig {
  std::string id;
  fs::path dir;
  fs::path mapping;
  fs::path schema;
  std::map<std::string, fs::path> sources;  // relation -> CSV
  std::map<std::string, NormalizationBinding> normalization;  // function -> table
  double step_rate = 1.0;
  std::optional<double> contribution;
};

struct TrainingConfig {
  std::string query;
  std::vector<std::string> features;
  std::string label;
  bool classification = true;
  exchange::QueryMode mode = exchange::QueryMode::Impute;
};

struct ModelDecl {
  std::string type = "logistic_regression";
  std::size_t hidden = 8;
};

struct ExperimentConfig {
  fs::path base_dir;
  std::uint64_t seed = 0;
  fs::path output_dir;
  std::string null_token;
  fs::path global_schema;
  fs::path queries;
  std::vector<FunctionDecl> functions;
  std::vector<ImputerDecl> imputers;
  std::vector<std::string> column_imputers;
  std::vector<SiloConfig> silos;
  TrainingConfig training;
  ModelDecl model;
  fed::FederationConfig federation;  // model filled in after encoding
  fed::ExecutionMode execution = fed::ExecutionMode::Simulated;
  /// Config document as loaded, before overrides.
  std::string raw_json = "{}";

  mapping::FunctionSignatures signatures() const;
  /// Canonical JSON of the effective configuration (after overrides).
  std::string canonical_json() const;
};

/// Reads and checks a JSON config; relative paths resolve against its
/// directory. Throws Error(ConfigError) or Error(IoError), including for
/// referenced files that do not exist.
ExperimentConfig load_config(const fs::path& path);

/// `name: type` JSON object of relations, e.g. {"subject": ["id:int", ...]}.
std::vector<RelationSchema> load_schema_file(const fs::path& path);

struct SiloState {
  std::string id;
  std::vector<RelationSchema> source_schemas;
  mapping::MappingProgram program;
  exchange::SourceMap sources;
  exchange::FunctionRegistry registry;
  exchange::TargetInstance pass1;  // CertainAnswers materialization
  exchange::TargetInstance pass2;  // after imputer fitting
};

struct ValidationOutcome {
  std::string text;
  std::size_t errors = 0;
};

/// The Driver's pipeline over one config.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const std::vector<RelationSchema>& global() const { return global_; }
  const mapping::MappingProgram& queries() const { return queries_; }
  std::vector<SiloState>& silos() { return silos_; }

  /// Parses every mapping and validates per silo plus the query file.
  ValidationOutcome validate();
  /// Loads each silo's raw sources inside its own audit stage.
  void load_sources();
  /// Pass 1: CertainAnswers materialization per silo.
  void materialize_pass1();
  /// Per-silo sufficient statistics, merged and fitted; installed in every registry.
  std::vector<impute::FittedImputer> fit_imputers();
  /// Pass 2 in `mode`; Impute requires fitted imputers.
  void materialize_pass2(exchange::QueryMode mode);
  /// validate, load, pass 1, fit (if any imputers), pass 2.
  void prepare(exchange::QueryMode mode);

  /// Per-silo answers of a query over the pass-2 instances.
  std::vector<Relation> answer(const std::string& query, exchange::QueryMode mode) const;

  /// Encoded per-silo datasets with federation-wide vocabularies.
  std::vector<model::Encoded> training_data(exchange::QueryMode mode) const;

  /// Model spec sized from the encoded data.
  model::ModelSpec model_spec(const model::Encoded& sample) const;

  std::vector<fed::LearnerHandle> learners(const std::vector<model::Encoded>& data) const;

 private:
  ExperimentConfig config_;
  std::vector<RelationSchema> global_;
  mapping::MappingProgram queries_;
  std::vector<SiloState> silos_;
  bool parsed_ = false;
  void parse_all();
};

/// Exit-code contract: 0 success, 1 validation/semantic error, 2 config/IO error.
int exit_code_for(const std::exception& e);

struct CommandOptions {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<exchange::QueryMode> mode;
  std::optional<fed::ExecutionMode> execution;
  std::string query;      // `query` command
  fs::path runlog;        // `report` command
};

/// Commands write human output to `out` and diagnostics to `err`; they
/// return the process exit code.
int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_materialize(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_query(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_impute_fit(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace fedint::experiment
