#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedint/relation.hpp"
#include "fedint/value.hpp"

namespace fedint::impute {

enum class Kind { Constant, Mean, Mode, Ridge };

std::string_view to_string(Kind kind);
std::optional<Kind> kind_from_string(std::string_view text);

struct Feature {
  std::string column;
  /// One-hot encoded when true; numeric (Int/Float/Date as days) otherwise.
  bool categorical = false;
  bool operator==(const Feature&) const = default;
};

struct ImputerSpec {
  std::string name;
  /// Relation (or training-query answer) the statistics are computed over.
  std::string relation;
  std::string target;
  ColumnType target_type = ColumnType::Float;
  Kind kind = Kind::Mean;
  Value constant;                 // Kind::Constant
  std::vector<Feature> features;  // Kind::Ridge
  double lambda = 0.0;
  bool intercept = true;
};

/// One column of the ridge design matrix: a numeric feature, a one-hot
/// indicator for `category`, or the intercept (feature == features.size()).
struct EncodedColumn {
  std::size_t feature = 0;
  std::optional<std::string> category;
  auto operator<=>(const EncodedColumn&) const = default;
};

struct ConstantStats {
  bool operator==(const ConstantStats&) const = default;
};

struct MeanStats {
  double sum = 0.0;
  std::uint64_t count = 0;
  bool operator==(const MeanStats&) const = default;
};

struct ModeStats {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t count() const;
  bool operator==(const ModeStats&) const = default;
};

struct RidgeStats {
  std::vector<EncodedColumn> columns;  // sorted
  std::vector<double> xtx;             // columns.size()^2, row-major, symmetric
  std::vector<double> xty;
  std::uint64_t count = 0;
  std::size_t dim() const { return columns.size(); }
  bool operator==(const RidgeStats&) const = default;
};

using SufficientStats = std::variant<ConstantStats, MeanStats, ModeStats, RidgeStats>;

SufficientStats zero_stats(const ImputerSpec& spec);

/// Exact statistics over rows whose target and features are all non-null.
/// Throws Error(TypeMismatch) for non-numeric mean/ridge targets or a
/// relation lacking the named columns.
SufficientStats local_stats(const Relation& rows, const ImputerSpec& spec);

/// Componentwise sum. Ridge parts are aligned on the union of their encoded
/// columns, so silos that saw different categories merge exactly.
SufficientStats merge_stats(std::span<const SufficientStats> parts);
SufficientStats merge_stats(const SufficientStats& a, const SufficientStats& b);

struct FittedImputer {
  ImputerSpec spec;
  Value value;                         // constant, mean or modal value
  std::vector<EncodedColumn> columns;  // ridge encoder
  std::vector<double> weights;         // ridge weights aligned with columns
};

/// mean -> sum/count; mode -> argmax count, ties to the lexicographically
/// smallest category; ridge -> (XtX + lambda I)^-1 Xty by Cholesky.
FittedImputer fit(const ImputerSpec& spec, const SufficientStats& stats);

/// `features` is aligned with spec.features. Unseen categories encode as
/// all-zero indicators. Result is never null and matches the target type.
Value impute(const FittedImputer& f, std::span<const Value> features);

/// Feature values gathered from a row of `schema` by column name.
std::vector<Value> features_from_row(const FittedImputer& f, const RelationSchema& schema,
                                     const Tuple& row);

/// Self-describing JSON text (kind, parameters, vocabulary).
std::string to_json(const FittedImputer& f);
FittedImputer from_json(const std::string& text);

/// Encoded design row for ridge; exposed for tests.
std::vector<double> encode_row(const std::vector<EncodedColumn>& columns,
                               std::span<const Value> features);

}  // namespace fedint::impute
