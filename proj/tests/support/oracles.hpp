#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the join, exchange, training or fitting
// code under test; only value types and file loaders are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedint/dataset.hpp"
#include "fedint/exchange.hpp"
#include "fedint/experiment.hpp"
#include "fedint/imputation.hpp"
#include "fedint/mapping.hpp"
#include "fedint/model.hpp"
#include "fedint/relation.hpp"
#include "fedint/rng.hpp"
#include "fedint/value.hpp"

namespace oracle {

using fedint::Date;
using fedint::Tuple;
using fedint::Value;

// ---------------------------------------------------------------- multisets

inline std::vector<Tuple> sorted_rows(std::vector<Tuple> rows) {
  std::sort(rows.begin(), rows.end(), fedint::tuple_less);
  return rows;
}

inline bool same_multiset(const std::vector<Tuple>& a, const std::vector<Tuple>& b) {
  if (a.size() != b.size()) return false;
  const auto x = sorted_rows(a), y = sorted_rows(b);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!fedint::tuples_identical(x[i], y[i])) return false;
  return true;
}

// ---------------------------------------------------------------- clinical example

inline std::int64_t completed_years(Date a, Date b) {
  if (b < a) std::swap(a, b);
  int ya, yb;
  unsigned ma, mb, da, db;
  a.to_ymd(ya, ma, da);
  b.to_ymd(yb, mb, db);
  std::int64_t years = yb - ya;
  if (mb < ma || (mb == ma && db < da)) --years;
  return years;
}

struct Instance {
  std::vector<Tuple> subject, clinical, imaging;
};

struct ClinicalAnswers {
  // silo -> rows
  std::map<std::string, std::vector<Tuple>> ad_prediction, cognitive_decline;
};

namespace detail {

inline void add_unique(std::vector<Tuple>& rel, Tuple t) {
  for (const auto& r : rel)
    if (fedint::tuples_identical(r, t)) return;
  rel.push_back(std::move(t));
}

inline bool has_null(const Tuple& t) {
  return std::any_of(t.begin(), t.end(), [](const Value& v) { return v.is_null(); });
}

struct NullSource {
  std::uint64_t next = 1ull << 40;
  Value fresh() { return Value(fedint::LabeledNull{next++}); }
};

inline std::vector<Tuple> ad_prediction(const Instance& g) {
  std::vector<Tuple> out;
  for (const auto& s : g.subject)
    for (const auto& im : g.imaging) {
      if (!(im[0].as_int() == s[0].as_int())) continue;
      if (!(im[2].is_str() && im[2].as_str() == "MRI")) continue;
      for (const auto& c : g.clinical) {
        if (c[0].as_int() != s[0].as_int()) continue;
        const auto gap = std::abs(im[1].as_date().days - c[1].as_date().days);
        if (!(gap < 60)) continue;
        Tuple t{s[1], s[2], c[2], im[3], c[4]};
        if (!has_null(t)) out.push_back(t);
      }
    }
  return out;
}

inline std::vector<Tuple> cognitive_decline(const Instance& g) {
  std::vector<Tuple> out;
  for (const auto& s : g.subject)
    for (const auto& im : g.imaging) {
      if (im[0].as_int() != s[0].as_int() || im[2].as_str() != "MRI") continue;
      for (const auto& c1 : g.clinical) {
        if (c1[0].as_int() != s[0].as_int() || c1[1].as_date() != im[1].as_date()) continue;
        for (const auto& c2 : g.clinical) {
          if (c2[0].as_int() != s[0].as_int() || !(c2[1].as_date() > c1[1].as_date())) continue;
          Value diff_age = Value(c1[2].as_int() - c2[2].as_int());
          Value diff_moca = (c1[3].is_null() || c2[3].is_null())
                                ? Value()
                                : Value(c1[3].numeric() - c2[3].numeric());
          Tuple t{s[1], s[2], im[3], diff_age, diff_moca};
          if (!has_null(t)) out.push_back(t);
        }
      }
    }
  return out;
}

}  // namespace detail

/// Nested-loop evaluation of the three fixture mappings and both queries,
/// hand-translated from the mapping files. `fitted` supplies imputer values
/// in impute mode and may be empty in certain mode.
inline ClinicalAnswers clinical_answers(const std::filesystem::path& root, bool impute,
                                const std::map<std::string, fedint::impute::FittedImputer>& fitted) {
  namespace ex = fedint::experiment;
  auto load = [&](const std::string& silo, const std::string& rel) {
    const auto schemas = ex::load_schema_file(root / "silos" / silo / "schema.json");
    for (const auto& s : schemas)
      if (s.name() == rel)
        return fedint::load_csv(root / "silos" / silo / (rel + ".csv"), s).rows();
    throw std::runtime_error("no schema for " + rel);
  };
  std::map<std::string, std::string> icd;
  {
    const auto recs = fedint::split_csv_records(fedint::read_text_file(root / "silos/s2/icd10.csv"));
    for (std::size_t i = 1; i < recs.size(); ++i) icd[recs[i][0].text] = recs[i][1].text;
  }
  auto imp = [&](const std::string& name, std::vector<Value> features) {
    return fedint::impute::impute(fitted.at(name), features);
  };
  detail::NullSource nulls;
  ClinicalAnswers out;
  std::map<std::string, Instance> inst;

  // s1(id, dob, sex, re, visit, mmse, dx, mri) & minus(dob, visit, age) & impute_f1(...)
  for (const auto& r : load("s1", "s1")) {
    Instance& g = inst["s1"];
    const Value age(completed_years(r[1].as_date(), r[4].as_date()));
    const Value moca = impute ? imp("moca_f1", {r[2], age, r[3]}) : nulls.fresh();
    const Value dx = !r[6].is_null() ? r[6] : (impute ? imp("dx_f1", {}) : nulls.fresh());
    detail::add_unique(g.subject, {r[0], r[2], r[3]});
    detail::add_unique(g.clinical, {r[0], r[4], age, moca, dx});
    detail::add_unique(g.imaging, {r[0], r[4], Value("MRI"), r[7]});
  }

  // s2_dem & s2_image[MRI] & s2_dx[CT|MCI|AD] & normalize & impute_f2
  {
    Instance& g = inst["s2"];
    const auto dem = load("s2", "s2_dem"), img = load("s2", "s2_image"), dxs = load("s2", "s2_dx");
    for (const auto& d : dem)
      for (const auto& i : img) {
        if (i[0].as_int() != d[0].as_int() || i[3].as_str() != "MRI") continue;
        for (const auto& x : dxs) {
          if (x[0].as_int() != d[0].as_int()) continue;
          const std::string raw = x[3].as_str();
          if (raw != "CT" && raw != "MCI" && raw != "AD") continue;
          const Value code(icd.at(raw));
          const Value moca = impute ? imp("moca_f2", {d[1], x[2], d[2], code}) : nulls.fresh();
          detail::add_unique(g.subject, {d[0], d[1], d[2]});
          detail::add_unique(g.clinical, {d[0], x[1], x[2], moca, code});
          detail::add_unique(g.imaging, {d[0], i[1], Value("MRI"), i[4]});
        }
      }
  }

  // s3(id, dob, sex, re, visit, moca, dx, mri) & minus & normalize
  for (const auto& r : load("s3", "s3")) {
    Instance& g = inst["s3"];
    const Value age(completed_years(r[1].as_date(), r[4].as_date()));
    auto it = icd.find(r[6].as_str());
    const Value code = it == icd.end() ? Value() : Value(it->second);
    detail::add_unique(g.subject, {r[0], r[2], r[3]});
    detail::add_unique(g.clinical, {r[0], r[4], age, r[5], code});
    detail::add_unique(g.imaging, {r[0], r[4], Value("MRI"), r[7]});
  }

  for (const auto& [silo, g] : inst) {
    out.ad_prediction[silo] = detail::ad_prediction(g);
    out.cognitive_decline[silo] = detail::cognitive_decline(g);
  }
  return out;
}

// ---------------------------------------------------------------- aggregation

inline std::vector<double> weighted_average(const std::vector<std::vector<double>>& xs,
                                            const std::vector<double>& p) {
  double total = 0.0;
  for (double v : p) total += v;
  std::vector<double> out(xs.front().size(), 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (p[k] / total) * xs[k][i];
  return out;
}

// ---------------------------------------------------------------- gradients

/// Mean-loss gradient of a linear model, flat layout [w..., b].
inline std::vector<double> linear_gradient(const std::vector<double>& flat,
                                           const fedint::model::Dataset& data) {
  const std::size_t d = data.d;
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < data.n; ++i) {
    double pred = flat[d];
    for (std::size_t j = 0; j < d; ++j) pred += flat[j] * data.features[i * d + j];
    const double r = pred - data.labels[i];
    for (std::size_t j = 0; j < d; ++j) g[j] += r * data.features[i * d + j];
    g[d] += r;
  }
  for (double& v : g) v /= static_cast<double>(data.n);
  return g;
}

/// Softmax cross-entropy gradient, flat layout [W (classes x d)..., b...].
inline std::vector<double> logistic_gradient(const std::vector<double>& flat, std::size_t classes,
                                             const fedint::model::Dataset& data) {
  const std::size_t d = data.d;
  std::vector<double> g(classes * d + classes, 0.0);
  std::vector<double> z(classes);
  for (std::size_t i = 0; i < data.n; ++i) {
    double mx = -1e300;
    for (std::size_t c = 0; c < classes; ++c) {
      z[c] = flat[classes * d + c];
      for (std::size_t j = 0; j < d; ++j) z[c] += flat[c * d + j] * data.features[i * d + j];
      mx = std::max(mx, z[c]);
    }
    double s = 0.0;
    for (auto& v : z) s += (v = std::exp(v - mx));
    for (std::size_t c = 0; c < classes; ++c) {
      const double r = z[c] / s - (static_cast<std::size_t>(data.labels[i]) == c ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) g[c * d + j] += r * data.features[i * d + j];
      g[classes * d + c] += r;
    }
  }
  for (double& v : g) v /= static_cast<double>(data.n);
  return g;
}

// ---------------------------------------------------------------- imputers

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
    x[i] = s / a[i * n + i];
  }
  return x;
}

struct RidgeFit {
  // (feature index, category or "") -> weight; intercept uses feature == #features
  std::map<std::pair<std::size_t, std::string>, double> weights;
};

/// Pooled ridge fit from an explicit design matrix. Rows: numeric/categorical
/// feature values (Str for categorical) and a numeric target.
inline RidgeFit ridge_fit(const std::vector<std::vector<Value>>& rows, const std::vector<double>& y,
                          const std::vector<bool>& categorical, double lambda, bool intercept) {
  const std::size_t f = categorical.size();
  std::vector<std::pair<std::size_t, std::string>> cols;
  for (std::size_t j = 0; j < f; ++j) {
    if (!categorical[j]) {
      cols.push_back({j, ""});
      continue;
    }
    std::set<std::string> cats;
    for (const auto& r : rows) cats.insert(r[j].as_str());
    for (const auto& c : cats) cols.push_back({j, c});
  }
  if (intercept) cols.push_back({f, ""});
  const std::size_t m = cols.size();
  std::vector<double> a(m * m, 0.0), b(m, 0.0), x(m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const auto& [j, cat] = cols[k];
      if (j == f) x[k] = 1.0;
      else if (categorical[j]) x[k] = rows[i][j].as_str() == cat ? 1.0 : 0.0;
      else x[k] = rows[i][j].numeric();
    }
    for (std::size_t p = 0; p < m; ++p) {
      b[p] += x[p] * y[i];
      for (std::size_t q = 0; q < m; ++q) a[p * m + q] += x[p] * x[q];
    }
  }
  for (std::size_t p = 0; p < m; ++p) a[p * m + p] += lambda;
  const auto w = solve(a, b);
  RidgeFit out;
  for (std::size_t k = 0; k < m; ++k) out.weights[cols[k]] = w[k];
  return out;
}

// ---------------------------------------------------------------- programs

/// Random valid mapping program over relations r0..r3 and functions
/// minus (2->1), norm (1->1) and imp (2->2).
struct ProgramGenerator {
  fedint::Rng rng;
  explicit ProgramGenerator(std::uint64_t seed) : rng(seed) {}

  static fedint::mapping::FunctionSignatures signatures() {
    using fedint::mapping::FunctionKind;
    auto s = fedint::mapping::builtin_signatures();
    s["norm"] = {1, 1, FunctionKind::Normalize};
    s["imp"] = {2, 2, FunctionKind::Impute};
    return s;
  }

  std::string var() { return std::string(1, static_cast<char>('a' + rng.below(8))) + std::to_string(rng.below(3)); }

  fedint::mapping::Lit literal() {
    switch (rng.below(5)) {
      case 0: return {Value(static_cast<std::int64_t>(rng.below(2001)) - 1000)};
      case 1: return {Value(rng.uniform(-1e3, 1e3))};
      case 2: return {Value(static_cast<double>(static_cast<std::int64_t>(rng.below(64)) - 32) / 8.0)};
      case 3: return {Value(Date{static_cast<std::int32_t>(rng.below(40000))})};
      default: {
        static const char* words[] = {"MRI", "CT", "AD", "x y", "G30.9", "a_b", ""};
        return {Value(words[rng.below(7)])};
      }
    }
  }

  fedint::mapping::Term term(double lit_prob = 0.25) {
    if (rng.uniform() < lit_prob) return literal();
    return fedint::mapping::Var{var()};
  }

  fedint::mapping::CompareOp op() { return static_cast<fedint::mapping::CompareOp>(rng.below(6)); }

  std::vector<fedint::mapping::Atom> body() {
    using namespace fedint::mapping;
    std::vector<Atom> atoms;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      switch (i == 0 ? 0 : rng.below(6)) {
        case 0:
        case 1: {
          RelAtom r{"r" + std::to_string(rng.below(4)), {}};
          const std::size_t k = 1 + rng.below(5);
          for (std::size_t t = 0; t < k; ++t) r.terms.push_back(term());
          atoms.push_back(r);
          break;
        }
        case 2: {
          static const char* names[] = {"minus", "norm", "imp"};
          const std::size_t which = rng.below(3);
          const std::size_t in = which == 1 ? 1 : 2, outs = which == 2 ? 2 : 1;
          FuncAtom f{names[which], {}, {}};
          for (std::size_t t = 0; t < in; ++t) f.inputs.push_back(term(0.2));
          for (std::size_t t = 0; t < outs; ++t) f.outputs.push_back(Var{var()});
          atoms.push_back(f);
          break;
        }
        case 3: atoms.push_back(CompareAtom{term(0.5), op(), term(0.3)}); break;
        case 4: {
          Lit bound = rng.below(2) ? Lit{Value(static_cast<std::int64_t>(rng.below(400)))}
                                   : Lit{Value(rng.uniform(0.0, 100.0))};
          atoms.push_back(AbsDiffAtom{Var{var()}, Var{var()}, op(), bound});
          break;
        }
        default: {
          MemberAtom m{Var{var()}, {}};
          const std::size_t k = 1 + rng.below(4);
          for (std::size_t t = 0; t < k; ++t) m.set.push_back(literal());
          atoms.push_back(m);
        }
      }
    }
    return atoms;
  }

  fedint::mapping::MappingProgram program() {
    using namespace fedint::mapping;
    MappingProgram p;
    p.function_signatures = signatures();
    const std::size_t rules = rng.below(4), queries = rng.below(3);
    for (std::size_t i = 0; i < rules; ++i) {
      MappingRule r;
      r.body = body();
      const std::size_t h = 1 + rng.below(3);
      for (std::size_t k = 0; k < h; ++k) {
        RelAtom a{"g" + std::to_string(rng.below(3)), {}};
        const std::size_t t = 1 + rng.below(4);
        for (std::size_t j = 0; j < t; ++j) a.terms.push_back(term(0.2));
        r.head.push_back(a);
      }
      r.existential_vars = existential_vars(r);
      p.rules.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < queries || (rules == 0 && i == 0); ++i) {
      QueryDef q;
      q.name = "q" + std::to_string(i);
      q.body = body();
      const std::size_t h = 1 + rng.below(3);
      for (std::size_t k = 0; k < h; ++k) q.head_vars.push_back(Var{var()});
      p.queries.push_back(std::move(q));
    }
    return p;
  }
};

// ---------------------------------------------------------------- synthetic data

/// Linearly separable binary task: y = [w* . x > 0] with x ~ N(0, I).
inline fedint::model::Dataset separable(std::size_t n, std::size_t d, std::uint64_t seed) {
  fedint::Rng rng(seed);
  std::vector<double> w(d);
  for (auto& v : w) v = rng.normal();
  fedint::model::Dataset out;
  out.d = d;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += w[j] * (x[j] = rng.normal());
    out.push_back(x, s > 0.0 ? 1.0 : 0.0);
  }
  return out;
}

/// Random regression or classification data for the model tests.
inline fedint::model::Dataset random_data(std::size_t n, std::size_t d, std::size_t classes,
                                          fedint::Rng& rng) {
  fedint::model::Dataset out;
  out.d = d;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.normal();
    out.push_back(x, classes == 0 ? rng.normal() * 3.0 : static_cast<double>(rng.below(classes)));
  }
  return out;
}

}  // namespace oracle
