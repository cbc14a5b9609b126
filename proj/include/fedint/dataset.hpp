#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fedint/relation.hpp"

namespace fedint::model {

/// Dense n x d design matrix (row-major) with one label per row. Labels are
/// class indices stored as doubles for classification.
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> features;
  std::vector<double> labels;

  std::span<const double> row(std::size_t i) const { return {features.data() + i * d, d}; }
  void push_back(std::span<const double> x, double y);
  /// Rows selected by index, in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;
  bool operator==(const Dataset&) const = default;
};

Dataset concat(std::span<const Dataset> parts);

struct EncodedFeature {
  std::string column;
  /// Empty for numeric columns; the category for one-hot indicators.
  std::optional<std::string> category;
};

/// How query answers become a Dataset. Str columns are one-hot encoded;
/// Int/Float/Date (as days) are copied. Vocabularies default to the sorted
/// categories present in the rows; a federation passes shared vocabularies
/// so every silo encodes identically.
struct EncodingSpec {
  std::vector<std::string> feature_columns;
  std::string label_column;
  bool classification = true;
  std::map<std::string, std::vector<std::string>> vocabularies;
  std::vector<std::string> label_classes;
};

struct Encoded {
  Dataset data;
  std::vector<EncodedFeature> columns;
  std::vector<std::string> label_classes;
};

/// Categories seen per Str feature column (and the label, for
/// classification). Used to agree on federation-wide vocabularies.
std::map<std::string, std::set<std::string>> observed_categories(const Relation& rows,
                                                                 const EncodingSpec& spec);

/// Throws Error(ResidualNull) on a null in a selected column and
/// Error(UnknownLabel) when a label is outside spec.label_classes.
Encoded encode_training_data(const Relation& rows, const EncodingSpec& spec);

/// Partition sizes for `n` rows over `learners`: weights (1 - skew)^k,
/// floor(n * w_k), leftover rows handed out one each starting at learner 0,
/// then every empty part borrows one row from learner 0.
std::vector<std::size_t> skewed_sizes(std::size_t n, std::size_t learners, double skew);

/// Disjoint, exhaustive row partition. With `non_iid` rows are stably sorted
/// by label before contiguous assignment; otherwise they are shuffled by seed.
std::vector<Dataset> partition_hfl(const Dataset& data, std::size_t learners, double skew,
                                   std::uint64_t seed, bool non_iid = false);

struct DatasetSchemaProfile {
  std::set<std::string> id_space;
  std::vector<std::string> feature_columns;
  std::string label_column;
};

enum class Partitioning { HFL, VFL, FTL, Mixed };
std::string_view to_string(Partitioning p);

Partitioning classify_partitioning(std::span<const DatasetSchemaProfile> profiles);

}  // namespace fedint::model
