#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedint/imputation.hpp"
#include "fedint/mapping.hpp"
#include "fedint/relation.hpp"

namespace fedint::exchange {

struct NormalizationTable {
  std::string name;
  std::map<std::string, std::string, std::less<>> entries;
  /// Unmapped lookups throw when strict, yield Missing otherwise.
  bool strict = false;
};

/// Two-column CSV with header `source,normalized`.
NormalizationTable load_normalization_table(const std::filesystem::path& path, std::string name,
                                            bool strict = false);

/// Returns the normalized string, or nullopt (Missing) on a lenient miss.
std::optional<std::string> normalize_lookup(const NormalizationTable& table, std::string_view value,
                                            bool strict);

/// One output of an impute predicate.
struct ImputeOutput {
  std::string imputer;
  /// Body variable whose value is kept when it is bound to a non-null
  /// (impute-only-if-missing). Empty: always impute.
  std::string keep_observed;
};

/// An impute predicate such as `impute_f1(sex, age, re, mmse, moca_imp, dx_imp)`.
/// Each output is backed by its own imputer; imputer features are matched
/// to the predicate inputs by name.
struct ImputeFunction {
  std::vector<std::string> input_names;
  std::vector<ImputeOutput> outputs;
};

class FunctionRegistry {
 public:
  FunctionRegistry();

  void add_normalizer(const std::string& function, NormalizationTable table);
  void add_impute_function(const std::string& function, ImputeFunction fn);
  /// Declares an imputer by spec; it stays unfitted until set_fitted().
  void declare_imputer(impute::ImputerSpec spec);
  void set_fitted(impute::FittedImputer fitted);
  /// Registers a column-level imputer used by the Impute-mode fill pass.
  void add_column_imputer(const std::string& imputer);

  const NormalizationTable* normalizer(std::string_view function) const;
  const ImputeFunction* impute_function(std::string_view function) const;
  const impute::ImputerSpec* imputer_spec(std::string_view imputer) const;
  const impute::FittedImputer* fitted(std::string_view imputer) const;
  /// Fitted column imputer for relation.column, if registered and fitted.
  const impute::FittedImputer* column_imputer(std::string_view relation,
                                              std::string_view column) const;
  const std::vector<std::string>& column_imputer_names() const { return column_imputers_; }
  const std::map<std::string, impute::ImputerSpec, std::less<>>& imputer_specs() const {
    return specs_;
  }

  /// Signatures for every registered function (builtins included).
  mapping::FunctionSignatures signatures() const;

 private:
  std::map<std::string, NormalizationTable, std::less<>> normalizers_;
  std::map<std::string, ImputeFunction, std::less<>> impute_functions_;
  std::map<std::string, impute::ImputerSpec, std::less<>> specs_;
  std::map<std::string, impute::FittedImputer, std::less<>> fitted_;
  std::vector<std::string> column_imputers_;
};

enum class QueryMode { CertainAnswers, Impute };

std::string_view to_string(QueryMode mode);
std::optional<QueryMode> mode_from_string(std::string_view text);

using SourceMap = std::map<std::string, Relation, std::less<>>;

struct TargetInstance {
  std::map<std::string, Relation, std::less<>> relations;
  std::uint64_t null_count = 0;

  const Relation& at(std::string_view name) const;
  std::size_t total_tuples() const;
};

using Fact = std::pair<std::string, Tuple>;

/// Applies one rule to the sources. In CertainAnswers mode impute predicates
/// are not evaluated: their outputs keep observed values or become fresh
/// labeled nulls. In Impute mode every referenced imputer must be fitted.
std::vector<Fact> apply_rule(const mapping::MappingRule& rule, const SourceMap& sources,
                             const FunctionRegistry& registry, NullCounter& nulls,
                             const std::vector<RelationSchema>& global,
                             QueryMode mode = QueryMode::Impute);

/// Union of all rules, deduplicated per relation. Impute mode additionally
/// fills nulls in columns that have a fitted column-level imputer.
TargetInstance materialize(const mapping::MappingProgram& program, const SourceMap& sources,
                           const FunctionRegistry& registry,
                           const std::vector<RelationSchema>& global, QueryMode mode,
                           std::uint64_t null_start = 0);

/// Conjunctive query evaluation over a target instance. Output columns
/// follow head_vars; types are inferred from the atoms that bind them.
Relation evaluate_query(const mapping::QueryDef& query, const TargetInstance& instance,
                        QueryMode mode, const FunctionRegistry& registry);

/// Instance export: one CSV per relation, `_N<id>` for labeled nulls.
void write_instance(const TargetInstance& instance, const std::filesystem::path& dir,
                    std::string_view null_token = "");

/// `minus` semantics: dates -> whole years, numbers -> difference, nulls -> Missing.
Value builtin_minus(const Value& a, const Value& b);

/// Absolute difference used by `|a - b|`: whole days for dates.
std::optional<double> abs_difference(const Value& a, const Value& b);

}  // namespace fedint::exchange
