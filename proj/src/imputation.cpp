#include "fedint/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "fedint/error.hpp"

namespace fedint::impute {

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Constant: return "constant";
    case Kind::Mean: return "mean";
    case Kind::Mode: return "mode";
    case Kind::Ridge: return "ridge";
  }
  return "?";
}

std::optional<Kind> kind_from_string(std::string_view text) {
  if (text == "constant") return Kind::Constant;
  if (text == "mean") return Kind::Mean;
  if (text == "mode") return Kind::Mode;
  if (text == "ridge") return Kind::Ridge;
  return std::nullopt;
}

std::uint64_t ModeStats::count() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : counts) n += c;
  return n;
}

SufficientStats zero_stats(const ImputerSpec& spec) {
  switch (spec.kind) {
    case Kind::Constant: return ConstantStats{};
    case Kind::Mean: return MeanStats{};
    case Kind::Mode: return ModeStats{};
    case Kind::Ridge: return RidgeStats{};
  }
  return ConstantStats{};
}

namespace {

double numeric_of(const Value& v) {
  if (v.is_date()) return static_cast<double>(v.as_date().days);
  return v.numeric();
}

bool numeric_type(ColumnType t) {
  return t == ColumnType::Int || t == ColumnType::Float || t == ColumnType::Date;
}

std::size_t column_index(const RelationSchema& schema, const std::string& column,
                         const ImputerSpec& spec) {
  auto idx = schema.index_of(column);
  if (!idx)
    throw Error(ErrorCode::TypeMismatch,
                "imputer " + spec.name + ": relation " + schema.name() + " has no column " + column);
  return *idx;
}

std::string mode_key(const Value& v) { return v.to_string(); }

Value value_from_key(const std::string& key, ColumnType type) {
  switch (type) {
    case ColumnType::Str: return key;
    case ColumnType::Int: return static_cast<std::int64_t>(std::stoll(key));
    case ColumnType::Float: return std::stod(key);
    case ColumnType::Date: return *Date::parse(key);
  }
  return key;
}

Value coerce_numeric(double v, ColumnType type) {
  if (type == ColumnType::Int) return static_cast<std::int64_t>(std::llround(v));
  if (type == ColumnType::Date) return Date{static_cast<std::int32_t>(std::llround(v))};
  return v;
}

}  // namespace

std::vector<double> encode_row(const std::vector<EncodedColumn>& columns,
                               std::span<const Value> features) {
  std::vector<double> x(columns.size(), 0.0);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& col = columns[j];
    if (col.feature >= features.size()) {
      x[j] = 1.0;  // intercept
    } else if (col.category) {
      const Value& v = features[col.feature];
      x[j] = v.to_string() == *col.category ? 1.0 : 0.0;
    } else {
      x[j] = numeric_of(features[col.feature]);
    }
  }
  return x;
}

SufficientStats local_stats(const Relation& rows, const ImputerSpec& spec) {
  const auto& schema = rows.schema();
  if (spec.kind == Kind::Constant) return ConstantStats{};
  const std::size_t target = column_index(schema, spec.target, spec);
  const ColumnType target_type = schema.columns()[target].type;

  if (spec.kind == Kind::Mean) {
    if (target_type != ColumnType::Int && target_type != ColumnType::Float)
      throw Error(ErrorCode::TypeMismatch, "mean imputer " + spec.name + " over non-numeric column " +
                                               spec.target);
    MeanStats s;
    for (const auto& row : rows.rows()) {
      if (row[target].is_null()) continue;
      s.sum += row[target].numeric();
      ++s.count;
    }
    return s;
  }
  if (spec.kind == Kind::Mode) {
    ModeStats s;
    for (const auto& row : rows.rows())
      if (!row[target].is_null()) ++s.counts[mode_key(row[target])];
    return s;
  }

  // Ridge.
  if (!numeric_type(target_type))
    throw Error(ErrorCode::TypeMismatch, "ridge imputer " + spec.name + " over non-numeric column " +
                                             spec.target);
  std::vector<std::size_t> feature_idx;
  for (const auto& f : spec.features) {
    if (f.column == spec.target)
      throw Error(ErrorCode::TypeMismatch, "ridge imputer " + spec.name + " uses its target as a feature");
    feature_idx.push_back(column_index(schema, f.column, spec));
    const ColumnType t = schema.columns()[feature_idx.back()].type;
    if (!f.categorical && !numeric_type(t))
      throw Error(ErrorCode::TypeMismatch,
                  "ridge feature " + f.column + " is not numeric; mark it categorical");
  }

  std::vector<std::vector<Value>> contributing;
  std::vector<double> targets;
  std::vector<EncodedColumn> columns;
  for (std::size_t j = 0; j < spec.features.size(); ++j)
    if (!spec.features[j].categorical) columns.push_back({j, std::nullopt});
  if (spec.intercept) columns.push_back({spec.features.size(), std::nullopt});
  for (const auto& row : rows.rows()) {
    if (row[target].is_null()) continue;
    std::vector<Value> fv;
    bool complete = true;
    for (std::size_t idx : feature_idx) {
      if (row[idx].is_null()) {
        complete = false;
        break;
      }
      fv.push_back(row[idx]);
    }
    if (!complete) continue;
    for (std::size_t j = 0; j < spec.features.size(); ++j)
      if (spec.features[j].categorical) columns.push_back({j, fv[j].to_string()});
    contributing.push_back(std::move(fv));
    targets.push_back(numeric_of(row[target]));
  }
  RidgeStats s;
  if (contributing.empty()) return s;
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
  const std::size_t d = columns.size();
  s.columns = columns;
  s.xtx.assign(d * d, 0.0);
  s.xty.assign(d, 0.0);
  for (std::size_t r = 0; r < contributing.size(); ++r) {
    const auto x = encode_row(columns, contributing[r]);
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] == 0.0) continue;
      s.xty[i] += x[i] * targets[r];
      for (std::size_t j = 0; j < d; ++j) s.xtx[i * d + j] += x[i] * x[j];
    }
  }
  s.count = contributing.size();
  return s;
}

namespace {

RidgeStats merge_ridge(const RidgeStats& a, const RidgeStats& b) {
  RidgeStats out;
  std::set_union(a.columns.begin(), a.columns.end(), b.columns.begin(), b.columns.end(),
                 std::back_inserter(out.columns));
  const std::size_t d = out.columns.size();
  out.xtx.assign(d * d, 0.0);
  out.xty.assign(d, 0.0);
  auto scatter = [&](const RidgeStats& part) {
    std::vector<std::size_t> map(part.dim());
    for (std::size_t i = 0; i < part.dim(); ++i)
      map[i] = static_cast<std::size_t>(
          std::lower_bound(out.columns.begin(), out.columns.end(), part.columns[i]) -
          out.columns.begin());
    for (std::size_t i = 0; i < part.dim(); ++i) {
      out.xty[map[i]] += part.xty[i];
      for (std::size_t j = 0; j < part.dim(); ++j)
        out.xtx[map[i] * d + map[j]] += part.xtx[i * part.dim() + j];
    }
  };
  scatter(a);
  scatter(b);
  out.count = a.count + b.count;
  return out;
}

}  // namespace

SufficientStats merge_stats(const SufficientStats& a, const SufficientStats& b) {
  if (a.index() != b.index())
    throw Error(ErrorCode::KindMismatch, "cannot merge statistics of different imputer kinds");
  return std::visit(
      [&](const auto& lhs) -> SufficientStats {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(b);
        if constexpr (std::is_same_v<T, ConstantStats>) {
          return lhs;
        } else if constexpr (std::is_same_v<T, MeanStats>) {
          return MeanStats{lhs.sum + rhs.sum, lhs.count + rhs.count};
        } else if constexpr (std::is_same_v<T, ModeStats>) {
          ModeStats out = lhs;
          for (const auto& [k, c] : rhs.counts) out.counts[k] += c;
          return out;
        } else {
          for (const RidgeStats* p : {&lhs, &rhs})
            if (p->xtx.size() != p->dim() * p->dim() || p->xty.size() != p->dim())
              throw Error(ErrorCode::DimensionMismatch, "malformed ridge statistics");
          return merge_ridge(lhs, rhs);
        }
      },
      a);
}

SufficientStats merge_stats(std::span<const SufficientStats> parts) {
  if (parts.empty()) throw Error(ErrorCode::EmptyStats, "no statistics to merge");
  SufficientStats acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = merge_stats(acc, parts[i]);
  return acc;
}

namespace {

/// Solves A x = b for symmetric positive definite A (n x n, row-major).
/// Returns false when a pivot is not safely positive.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& x) {
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  const double tol = std::max(scale, 1.0) * 1e-12;
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > tol)) return false;
    const double l = std::sqrt(diag);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
    b[i] = v / a[i * n + i];
  }
  x = std::move(b);
  return true;
}

}  // namespace

FittedImputer fit(const ImputerSpec& spec, const SufficientStats& stats) {
  FittedImputer f;
  f.spec = spec;
  const auto expected = zero_stats(spec);
  if (expected.index() != stats.index())
    throw Error(ErrorCode::KindMismatch, "statistics do not match imputer " + spec.name);
  switch (spec.kind) {
    case Kind::Constant:
      if (spec.constant.is_null())
        throw Error(ErrorCode::EmptyStats, "constant imputer " + spec.name + " has no value");
      f.value = spec.constant;
      return f;
    case Kind::Mean: {
      const auto& s = std::get<MeanStats>(stats);
      if (s.count == 0) throw Error(ErrorCode::EmptyStats, "mean imputer " + spec.name);
      f.value = coerce_numeric(s.sum / static_cast<double>(s.count), spec.target_type);
      return f;
    }
    case Kind::Mode: {
      const auto& s = std::get<ModeStats>(stats);
      const std::string* best = nullptr;
      std::uint64_t best_count = 0;
      // std::map iterates keys in lexicographic order, so strict > keeps the
      // smallest category among ties.
      for (const auto& [k, c] : s.counts)
        if (c > best_count) {
          best = &k;
          best_count = c;
        }
      if (!best) throw Error(ErrorCode::EmptyStats, "mode imputer " + spec.name);
      f.value = value_from_key(*best, spec.target_type);
      return f;
    }
    case Kind::Ridge: {
      const auto& s = std::get<RidgeStats>(stats);
      if (s.count == 0 || s.dim() == 0)
        throw Error(ErrorCode::EmptyStats, "ridge imputer " + spec.name);
      if (spec.lambda < 0.0)
        throw Error(ErrorCode::SingularSystem, "negative ridge penalty for " + spec.name);
      const std::size_t d = s.dim();
      std::vector<double> a = s.xtx;
      for (std::size_t i = 0; i < d; ++i) a[i * d + i] += spec.lambda;
      if (!cholesky_solve(std::move(a), s.xty, d, f.weights))
        throw Error(ErrorCode::SingularSystem,
                    "ridge imputer " + spec.name + ": XtX + lambda I is not positive definite");
      f.columns = s.columns;
      return f;
    }
  }
  return f;
}

Value impute(const FittedImputer& f, std::span<const Value> features) {
  if (f.spec.kind != Kind::Ridge) return f.value;
  if (features.size() != f.spec.features.size())
    throw Error(ErrorCode::DimensionMismatch, "imputer " + f.spec.name + " expects " +
                                                  std::to_string(f.spec.features.size()) +
                                                  " feature(s)");
  for (std::size_t j = 0; j < features.size(); ++j)
    if (features[j].is_null())
      throw Error(ErrorCode::MissingFeature, f.spec.features[j].column);
  const auto x = encode_row(f.columns, features);
  double y = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) y += f.weights[j] * x[j];
  return coerce_numeric(y, f.spec.target_type);
}

std::vector<Value> features_from_row(const FittedImputer& f, const RelationSchema& schema,
                                     const Tuple& row) {
  std::vector<Value> out;
  out.reserve(f.spec.features.size());
  for (const auto& feat : f.spec.features) {
    auto idx = schema.index_of(feat.column);
    out.push_back(idx ? row[*idx] : Value(Missing{}));
  }
  return out;
}

namespace {

nlohmann::json value_json(const Value& v) {
  nlohmann::json j;
  if (v.is_int()) j = {{"type", "int"}, {"value", v.as_int()}};
  else if (v.is_float()) j = {{"type", "float"}, {"value", v.as_float()}};
  else if (v.is_str()) j = {{"type", "str"}, {"value", v.as_str()}};
  else if (v.is_date()) j = {{"type", "date"}, {"value", v.as_date().to_string()}};
  else j = nullptr;
  return j;
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return Missing{};
  const auto type = j.at("type").get<std::string>();
  if (type == "int") return j.at("value").get<std::int64_t>();
  if (type == "float") return j.at("value").get<double>();
  if (type == "date") return *Date::parse(j.at("value").get<std::string>());
  return j.at("value").get<std::string>();
}

}  // namespace

std::string to_json(const FittedImputer& f) {
  nlohmann::json j;
  j["name"] = f.spec.name;
  j["kind"] = std::string(to_string(f.spec.kind));
  j["relation"] = f.spec.relation;
  j["target"] = f.spec.target;
  j["target_type"] = std::string(to_string(f.spec.target_type));
  if (f.spec.kind != Kind::Ridge) {
    j["value"] = value_json(f.value);
  } else {
    j["lambda"] = f.spec.lambda;
    j["intercept"] = f.spec.intercept;
    auto& feats = j["features"] = nlohmann::json::array();
    for (const auto& feat : f.spec.features)
      feats.push_back({{"column", feat.column}, {"categorical", feat.categorical}});
    auto& cols = j["columns"] = nlohmann::json::array();
    for (std::size_t i = 0; i < f.columns.size(); ++i) {
      const auto& c = f.columns[i];
      nlohmann::json col;
      if (c.feature >= f.spec.features.size()) col["encoded"] = "(intercept)";
      else if (c.category) col["encoded"] = f.spec.features[c.feature].column + "=" + *c.category;
      else col["encoded"] = f.spec.features[c.feature].column;
      col["feature"] = c.feature;
      if (c.category) col["category"] = *c.category;
      col["weight"] = f.weights[i];
      cols.push_back(col);
    }
  }
  return j.dump(2);
}

FittedImputer from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FittedImputer f;
  f.spec.name = j.at("name");
  f.spec.kind = *kind_from_string(j.at("kind").get<std::string>());
  f.spec.relation = j.value("relation", "");
  f.spec.target = j.at("target");
  f.spec.target_type = *column_type_from_string(j.at("target_type").get<std::string>());
  if (f.spec.kind != Kind::Ridge) {
    f.value = value_from_json(j.at("value"));
    if (f.spec.kind == Kind::Constant) f.spec.constant = f.value;
    return f;
  }
  f.spec.lambda = j.at("lambda");
  f.spec.intercept = j.at("intercept");
  for (const auto& feat : j.at("features"))
    f.spec.features.push_back({feat.at("column"), feat.at("categorical")});
  for (const auto& col : j.at("columns")) {
    EncodedColumn c{col.at("feature").get<std::size_t>(), std::nullopt};
    if (col.contains("category")) c.category = col.at("category").get<std::string>();
    f.columns.push_back(c);
    f.weights.push_back(col.at("weight"));
  }
  return f;
}

}  // namespace fedint::impute
