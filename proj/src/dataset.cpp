#include "fedint/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedint/error.hpp"
#include "fedint/rng.hpp"

namespace fedint::model {

void Dataset::push_back(std::span<const double> x, double y) {
  if (n == 0 && features.empty()) d = x.size();
  if (x.size() != d) throw Error(ErrorCode::ShapeMismatch, "row width differs from dataset width");
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(y);
  ++n;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.d = d;
  out.features.reserve(rows.size() * d);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    auto x = row(r);
    out.features.insert(out.features.end(), x.begin(), x.end());
    out.labels.push_back(labels[r]);
  }
  out.n = rows.size();
  return out;
}

Dataset concat(std::span<const Dataset> parts) {
  Dataset out;
  for (const auto& p : parts) {
    if (p.n == 0) continue;
    if (out.n == 0) out.d = p.d;
    if (p.d != out.d) throw Error(ErrorCode::ShapeMismatch, "cannot concatenate datasets of width " +
                                                                std::to_string(p.d) + " and " +
                                                                std::to_string(out.d));
    out.features.insert(out.features.end(), p.features.begin(), p.features.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.n += p.n;
  }
  return out;
}

namespace {

std::size_t require_column(const RelationSchema& schema, const std::string& name) {
  auto idx = schema.index_of(name);
  if (!idx) throw Error(ErrorCode::ShapeMismatch, schema.name() + " has no column " + name);
  return *idx;
}

double numeric_cell(const Value& v) {
  if (v.is_date()) return static_cast<double>(v.as_date().days);
  return v.numeric();
}

}  // namespace

std::map<std::string, std::set<std::string>> observed_categories(const Relation& rows,
                                                                 const EncodingSpec& spec) {
  std::map<std::string, std::set<std::string>> out;
  const auto& schema = rows.schema();
  auto collect = [&](const std::string& column) {
    const std::size_t idx = require_column(schema, column);
    auto& set = out[column];
    for (const auto& row : rows.rows())
      if (!row[idx].is_null()) set.insert(row[idx].to_string());
  };
  for (const auto& c : spec.feature_columns)
    if (schema.columns()[require_column(schema, c)].type == ColumnType::Str) collect(c);
  if (spec.classification) collect(spec.label_column);
  return out;
}

Encoded encode_training_data(const Relation& rows, const EncodingSpec& spec) {
  const auto& schema = rows.schema();
  if (std::find(spec.feature_columns.begin(), spec.feature_columns.end(), spec.label_column) !=
      spec.feature_columns.end())
    throw Error(ErrorCode::ShapeMismatch, "label column " + spec.label_column + " is also a feature");
  Encoded enc;
  std::vector<std::size_t> feature_idx;
  // Per encoded column: source column index and category (if one-hot).
  for (const auto& c : spec.feature_columns) {
    const std::size_t idx = require_column(schema, c);
    feature_idx.push_back(idx);
    if (schema.columns()[idx].type == ColumnType::Str) {
      std::vector<std::string> vocab;
      auto it = spec.vocabularies.find(c);
      if (it != spec.vocabularies.end()) {
        vocab = it->second;
      } else {
        std::set<std::string> seen;
        for (const auto& row : rows.rows())
          if (!row[idx].is_null()) seen.insert(row[idx].as_str());
        vocab.assign(seen.begin(), seen.end());
      }
      std::sort(vocab.begin(), vocab.end());
      vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
      for (auto& cat : vocab) enc.columns.push_back({c, cat});
    } else {
      enc.columns.push_back({c, std::nullopt});
    }
  }
  const std::size_t label_idx = require_column(schema, spec.label_column);
  if (spec.classification) {
    if (!spec.label_classes.empty()) {
      enc.label_classes = spec.label_classes;
    } else {
      std::set<std::string> seen;
      for (const auto& row : rows.rows())
        if (!row[label_idx].is_null()) seen.insert(row[label_idx].to_string());
      enc.label_classes.assign(seen.begin(), seen.end());
    }
    std::sort(enc.label_classes.begin(), enc.label_classes.end());
  }

  enc.data.d = enc.columns.size();
  std::vector<double> x(enc.data.d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tuple& row = rows.rows()[r];
    std::size_t j = 0;
    for (std::size_t f = 0; f < feature_idx.size(); ++f) {
      const Value& v = row[feature_idx[f]];
      if (v.is_null())
        throw Error(ErrorCode::ResidualNull, "column " + spec.feature_columns[f] + ", row " +
                                                 std::to_string(r + 1));
      if (schema.columns()[feature_idx[f]].type == ColumnType::Str) {
        const std::string& s = v.as_str();
        while (j < enc.columns.size() && enc.columns[j].column == spec.feature_columns[f] &&
               enc.columns[j].category) {
          x[j] = *enc.columns[j].category == s ? 1.0 : 0.0;
          ++j;
        }
      } else {
        x[j++] = numeric_cell(v);
      }
    }
    const Value& label = row[label_idx];
    if (label.is_null())
      throw Error(ErrorCode::ResidualNull, "column " + spec.label_column + ", row " +
                                               std::to_string(r + 1));
    double y = 0.0;
    if (spec.classification) {
      auto it = std::lower_bound(enc.label_classes.begin(), enc.label_classes.end(),
                                 label.to_string());
      if (it == enc.label_classes.end() || *it != label.to_string())
        throw Error(ErrorCode::UnknownLabel, "'" + label.to_string() + "'");
      y = static_cast<double>(it - enc.label_classes.begin());
    } else {
      if (!label.is_numeric() && !label.is_date())
        throw Error(ErrorCode::UnknownLabel, "regression label '" + label.to_string() + "'");
      y = numeric_cell(label);
    }
    enc.data.features.insert(enc.data.features.end(), x.begin(), x.end());
    enc.data.labels.push_back(y);
    ++enc.data.n;
  }
  return enc;
}

std::vector<std::size_t> skewed_sizes(std::size_t n, std::size_t learners, double skew) {
  if (learners == 0) throw Error(ErrorCode::TooFewRows, "need at least one learner");
  if (n < learners)
    throw Error(ErrorCode::TooFewRows,
                std::to_string(n) + " rows for " + std::to_string(learners) + " learners");
  if (!(skew >= 0.0 && skew <= 1.0))
    throw Error(ErrorCode::ConfigError, "skew must lie in [0, 1]");
  std::vector<double> w(learners);
  double total = 0.0;
  for (std::size_t k = 0; k < learners; ++k) {
    w[k] = std::pow(1.0 - skew, static_cast<double>(k));
    total += w[k];
  }
  std::vector<std::size_t> sizes(learners);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < learners; ++k) {
    sizes[k] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * w[k] / total + 1e-9));
    assigned += sizes[k];
  }
  for (std::size_t k = 0; assigned < n; k = (k + 1) % learners, ++assigned) ++sizes[k];
  for (std::size_t k = 1; k < learners; ++k)
    if (sizes[k] == 0) {
      ++sizes[k];
      --sizes[0];
    }
  return sizes;
}

std::vector<Dataset> partition_hfl(const Dataset& data, std::size_t learners, double skew,
                                   std::uint64_t seed, bool non_iid) {
  const auto sizes = skewed_sizes(data.n, learners, skew);
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  if (non_iid)
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });
  std::vector<Dataset> parts;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < learners; ++k) {
    parts.push_back(data.subset(std::span(order).subspan(offset, sizes[k])));
    offset += sizes[k];
  }
  return parts;
}

std::string_view to_string(Partitioning p) {
  switch (p) {
    case Partitioning::HFL: return "HFL";
    case Partitioning::VFL: return "VFL";
    case Partitioning::FTL: return "FTL";
    case Partitioning::Mixed: return "Mixed";
  }
  return "?";
}

Partitioning classify_partitioning(std::span<const DatasetSchemaProfile> profiles) {
  if (profiles.size() < 2) return Partitioning::Mixed;
  auto disjoint = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a)
      if (b.count(x)) return false;
    return true;
  };
  auto same_features = [](const DatasetSchemaProfile& a, const DatasetSchemaProfile& b) {
    std::set<std::string> fa(a.feature_columns.begin(), a.feature_columns.end());
    std::set<std::string> fb(b.feature_columns.begin(), b.feature_columns.end());
    return fa == fb;
  };
  bool hfl = true, vfl = true, ftl = true;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (std::size_t j = i + 1; j < profiles.size(); ++j) {
      const auto& a = profiles[i];
      const auto& b = profiles[j];
      const bool same_x = same_features(a, b);
      const bool same_y = a.label_column == b.label_column;
      const bool same_i = a.id_space == b.id_space;
      hfl = hfl && same_x && same_y && disjoint(a.id_space, b.id_space);
      vfl = vfl && same_i && (!same_x || !same_y);
      ftl = ftl && !same_x && !same_y && !same_i;
    }
  if (hfl) return Partitioning::HFL;
  if (vfl) return Partitioning::VFL;
  if (ftl) return Partitioning::FTL;
  return Partitioning::Mixed;
}

}  // namespace fedint::model
