#include "fedint/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "fedint/error.hpp"
#include "fedint/io_audit.hpp"

namespace fedint::exchange {

using namespace mapping;

NormalizationTable load_normalization_table(const std::filesystem::path& path, std::string name,
                                            bool strict) {
  IoAudit::record(path);
  const auto records = split_csv_records(read_text_file(path));
  if (records.empty() || records[0].size() != 2 || records[0][0].text != "source" ||
      records[0][1].text != "normalized")
    throw Error(ErrorCode::HeaderMismatch,
                path.string() + ": normalization table header must be 'source,normalized'");
  NormalizationTable table;
  table.name = std::move(name);
  table.strict = strict;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() == 1 && rec[0].text.empty()) continue;
    if (rec.size() != 2)
      throw CsvParseError(r, "normalized", "expected 2 fields, got " + std::to_string(rec.size()));
    table.entries[rec[0].text] = rec[1].text;
  }
  return table;
}

std::optional<std::string> normalize_lookup(const NormalizationTable& table, std::string_view value,
                                            bool strict) {
  auto it = table.entries.find(value);
  if (it != table.entries.end()) return it->second;
  if (strict)
    throw Error(ErrorCode::MissingNormalizationEntry,
                "table " + table.name + " has no entry for '" + std::string(value) + "'");
  return std::nullopt;
}

FunctionRegistry::FunctionRegistry() = default;

void FunctionRegistry::add_normalizer(const std::string& function, NormalizationTable table) {
  normalizers_[function] = std::move(table);
}

void FunctionRegistry::add_impute_function(const std::string& function, ImputeFunction fn) {
  impute_functions_[function] = std::move(fn);
}

void FunctionRegistry::declare_imputer(impute::ImputerSpec spec) {
  const std::string name = spec.name;
  specs_[name] = std::move(spec);
}

void FunctionRegistry::set_fitted(impute::FittedImputer fitted) {
  const std::string name = fitted.spec.name;
  if (!specs_.count(name)) specs_[name] = fitted.spec;
  fitted_[name] = std::move(fitted);
}

void FunctionRegistry::add_column_imputer(const std::string& imputer) {
  if (std::find(column_imputers_.begin(), column_imputers_.end(), imputer) ==
      column_imputers_.end())
    column_imputers_.push_back(imputer);
}

const NormalizationTable* FunctionRegistry::normalizer(std::string_view function) const {
  auto it = normalizers_.find(function);
  return it == normalizers_.end() ? nullptr : &it->second;
}

const ImputeFunction* FunctionRegistry::impute_function(std::string_view function) const {
  auto it = impute_functions_.find(function);
  return it == impute_functions_.end() ? nullptr : &it->second;
}

const impute::ImputerSpec* FunctionRegistry::imputer_spec(std::string_view imputer) const {
  auto it = specs_.find(imputer);
  return it == specs_.end() ? nullptr : &it->second;
}

const impute::FittedImputer* FunctionRegistry::fitted(std::string_view imputer) const {
  auto it = fitted_.find(imputer);
  return it == fitted_.end() ? nullptr : &it->second;
}

const impute::FittedImputer* FunctionRegistry::column_imputer(std::string_view relation,
                                                              std::string_view column) const {
  for (const auto& name : column_imputers_) {
    const auto* spec = imputer_spec(name);
    if (spec && spec->relation == relation && spec->target == column) return fitted(name);
  }
  return nullptr;
}

FunctionSignatures FunctionRegistry::signatures() const {
  FunctionSignatures sigs = builtin_signatures();
  for (const auto& [name, _] : normalizers_) sigs[name] = {1, 1, FunctionKind::Normalize};
  for (const auto& [name, fn] : impute_functions_)
    sigs[name] = {fn.input_names.size(), fn.outputs.size(), FunctionKind::Impute};
  return sigs;
}

std::string_view to_string(QueryMode mode) {
  return mode == QueryMode::CertainAnswers ? "certain" : "impute";
}

std::optional<QueryMode> mode_from_string(std::string_view text) {
  if (text == "certain") return QueryMode::CertainAnswers;
  if (text == "impute") return QueryMode::Impute;
  return std::nullopt;
}

const Relation& TargetInstance::at(std::string_view name) const {
  auto it = relations.find(name);
  if (it == relations.end())
    throw Error(ErrorCode::UnknownRelation, "no relation " + std::string(name));
  return it->second;
}

std::size_t TargetInstance::total_tuples() const {
  std::size_t n = 0;
  for (const auto& [_, r] : relations) n += r.size();
  return n;
}

Value builtin_minus(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Missing{};
  if (a.is_date() && b.is_date()) return whole_years_between(a.as_date(), b.as_date());
  if (a.is_int() && b.is_int()) return a.as_int() - b.as_int();
  if (a.is_numeric() && b.is_numeric()) return a.numeric() - b.numeric();
  throw Error(ErrorCode::TypeMismatch,
              "minus over '" + a.to_string() + "' and '" + b.to_string() + "'");
}

std::optional<double> abs_difference(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  if (a.is_date() && b.is_date())
    return std::abs(static_cast<double>(a.as_date().days) - static_cast<double>(b.as_date().days));
  if (a.is_numeric() && b.is_numeric()) return std::abs(a.numeric() - b.numeric());
  return std::nullopt;
}

namespace {

/// Column type a value must take in a relation; Int widens to Float.
Value coerce(const Value& v, ColumnType type, const std::string& where) {
  if (v.is_null() || value_matches_type(v, type)) return v;
  if (type == ColumnType::Float && v.is_int()) return static_cast<double>(v.as_int());
  if (type == ColumnType::Int && v.is_float() && std::floor(v.as_float()) == v.as_float())
    return static_cast<std::int64_t>(v.as_float());
  throw Error(ErrorCode::TypeMismatch,
              where + " expects " + std::string(to_string(type)) + ", got '" + v.to_string() + "'");
}

/// Where a variable was first bound by a relation atom.
struct Origin {
  const Relation* relation = nullptr;
  std::size_t row = 0;
  std::size_t column = 0;
};

using RelationLookup = std::function<const Relation*(const std::string&)>;

/// Nested-loop evaluator for one conjunctive body. Relation atoms join in
/// body order; functions run in safe order once all relation atoms are
/// bound; interpreted filters run as soon as their variables are bound.
class BodyEvaluator {
 public:
  BodyEvaluator(const std::vector<Atom>& body, RelationLookup lookup,
                const FunctionRegistry& registry, QueryMode mode, NullCounter& nulls)
      : body_(body), lookup_(std::move(lookup)), registry_(registry), mode_(mode), nulls_(nulls) {
    for (const auto& atom : body_) {
      if (auto* rel = std::get_if<RelAtom>(&atom)) {
        for (const auto& t : rel->terms)
          if (auto* v = as_var(t)) var_id(v->name);
      } else if (auto* fn = std::get_if<FuncAtom>(&atom)) {
        for (const auto& t : fn->inputs)
          if (auto* v = as_var(t)) var_id(v->name);
        for (const auto& v : fn->outputs) var_id(v.name);
      } else {
        visit_filter_terms(atom, [&](const Term& t) {
          if (auto* v = as_var(t)) var_id(v->name);
        });
      }
    }
    plan();
  }

  std::size_t var_id(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const std::size_t id = names_.size();
    ids_[name] = id;
    names_.push_back(name);
    return id;
  }

  std::optional<std::size_t> find_var(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  /// Calls `emit` once per satisfying binding.
  void run(const std::function<void(const std::vector<Value>&, const std::vector<Origin>&)>& emit) {
    binding_.assign(names_.size(), Value());
    bound_.assign(names_.size(), false);
    origin_.assign(names_.size(), Origin{});
    emit_ = &emit;
    step(0);
  }

 private:
  enum class StepKind { Rel, Func, Filter };
  struct Step {
    StepKind kind;
    std::size_t atom;
  };

  template <typename F>
  static void visit_filter_terms(const Atom& atom, F&& f) {
    if (auto* c = std::get_if<CompareAtom>(&atom)) {
      f(c->lhs);
      f(c->rhs);
    } else if (auto* a = std::get_if<AbsDiffAtom>(&atom)) {
      f(a->a);
      f(a->b);
    } else if (auto* m = std::get_if<MemberAtom>(&atom)) {
      f(m->term);
    }
  }

  void plan() {
    std::vector<bool> known(names_.size(), false);
    std::vector<std::size_t> filters;
    for (std::size_t i = 0; i < body_.size(); ++i)
      if (!std::holds_alternative<RelAtom>(body_[i]) && !std::holds_alternative<FuncAtom>(body_[i]))
        filters.push_back(i);
    auto schedule_ready_filters = [&] {
      for (auto it = filters.begin(); it != filters.end();) {
        bool ready = true;
        visit_filter_terms(body_[*it], [&](const Term& t) {
          if (auto* v = as_var(t)) ready = ready && known[ids_.at(v->name)];
        });
        if (ready) {
          steps_.push_back({StepKind::Filter, *it});
          it = filters.erase(it);
        } else {
          ++it;
        }
      }
    };
    schedule_ready_filters();
    for (std::size_t i = 0; i < body_.size(); ++i) {
      auto* rel = std::get_if<RelAtom>(&body_[i]);
      if (!rel) continue;
      steps_.push_back({StepKind::Rel, i});
      for (const auto& t : rel->terms)
        if (auto* v = as_var(t)) known[ids_.at(v->name)] = true;
      schedule_ready_filters();
    }
    for (std::size_t i : function_order(body_)) {
      steps_.push_back({StepKind::Func, i});
      for (const auto& v : std::get<FuncAtom>(body_[i]).outputs) known[ids_.at(v.name)] = true;
      schedule_ready_filters();
    }
    // Filters over never-bound variables are unsatisfiable; validation flags them.
    for (std::size_t i : filters) steps_.push_back({StepKind::Filter, i});
  }

  const Value& term_value(const Term& t) const {
    if (auto* v = as_var(t)) {
      const std::size_t id = ids_.at(v->name);
      return bound_[id] ? binding_[id] : missing_;
    }
    return std::get<Lit>(t).value;
  }

  void step(std::size_t k) {
    if (k == steps_.size()) {
      (*emit_)(binding_, origin_);
      return;
    }
    const Step& s = steps_[k];
    switch (s.kind) {
      case StepKind::Rel: return join(k, std::get<RelAtom>(body_[s.atom]));
      case StepKind::Func: return call(k, std::get<FuncAtom>(body_[s.atom]));
      case StepKind::Filter:
        if (filter(body_[s.atom])) step(k + 1);
        return;
    }
  }

  void join(std::size_t k, const RelAtom& atom) {
    const Relation* rel = lookup_(atom.name);
    if (!rel) throw Error(ErrorCode::UnknownRelation, "no relation " + atom.name);
    if (rel->schema().arity() != atom.terms.size())
      throw Error(ErrorCode::TypeMismatch, atom.name + " arity mismatch");
    std::vector<std::size_t> newly;
    for (std::size_t r = 0; r < rel->rows().size(); ++r) {
      const Tuple& row = rel->rows()[r];
      bool ok = true;
      for (std::size_t c = 0; c < atom.terms.size() && ok; ++c) {
        const Term& t = atom.terms[c];
        if (auto* v = as_var(t)) {
          const std::size_t id = ids_.at(v->name);
          if (bound_[id]) {
            ok = join_equal(binding_[id], row[c]);
          } else {
            binding_[id] = row[c];
            bound_[id] = true;
            origin_[id] = Origin{rel, r, c};
            newly.push_back(id);
          }
        } else {
          ok = join_equal(std::get<Lit>(t).value, row[c]);
        }
      }
      if (ok) step(k + 1);
      for (std::size_t id : newly) bound_[id] = false;
      newly.clear();
    }
  }

  void call(std::size_t k, const FuncAtom& fn) {
    std::vector<Value> inputs;
    inputs.reserve(fn.inputs.size());
    for (const auto& t : fn.inputs) inputs.push_back(term_value(t));
    const std::vector<Value> outputs = evaluate_function(fn, inputs);
    std::vector<std::size_t> newly;
    bool ok = true;
    for (std::size_t i = 0; i < fn.outputs.size() && ok; ++i) {
      const std::size_t id = ids_.at(fn.outputs[i].name);
      if (bound_[id]) {
        ok = join_equal(binding_[id], outputs[i]);
      } else {
        binding_[id] = outputs[i];
        bound_[id] = true;
        origin_[id] = Origin{};
        newly.push_back(id);
      }
    }
    if (ok) step(k + 1);
    for (std::size_t id : newly) bound_[id] = false;
  }

  std::vector<Value> evaluate_function(const FuncAtom& fn, const std::vector<Value>& in) {
    if (fn.name == "minus" && in.size() == 2 && fn.outputs.size() == 1)
      return {builtin_minus(in[0], in[1])};
    if (const auto* table = registry_.normalizer(fn.name)) {
      if (in.size() != 1 || fn.outputs.size() != 1)
        throw Error(ErrorCode::UnknownFunction, fn.name + " normalizers take one input");
      if (in[0].is_null()) return {Value(Missing{})};
      auto out = normalize_lookup(*table, in[0].to_string(), table->strict);
      return {out ? Value(*out) : Value(Missing{})};
    }
    if (const auto* imp = registry_.impute_function(fn.name)) return impute_outputs(fn, *imp, in);
    throw Error(ErrorCode::UnknownFunction, fn.name + " is not registered");
  }

  std::vector<Value> impute_outputs(const FuncAtom& fn, const ImputeFunction& imp,
                                    const std::vector<Value>& in) {
    if (imp.outputs.size() != fn.outputs.size() || imp.input_names.size() != in.size())
      throw Error(ErrorCode::UnknownFunction, fn.name + " used with the wrong arity");
    std::vector<Value> out;
    for (const auto& o : imp.outputs) {
      if (!o.keep_observed.empty()) {
        auto id = find_var(o.keep_observed);
        if (id && bound_[*id] && !binding_[*id].is_null()) {
          out.push_back(binding_[*id]);
          continue;
        }
      }
      if (mode_ == QueryMode::CertainAnswers) {
        out.push_back(nulls_.fresh());
        continue;
      }
      const auto* fitted = registry_.fitted(o.imputer);
      if (!fitted) throw Error(ErrorCode::ImputerNotFitted, o.imputer);
      std::vector<Value> features;
      bool complete = true;
      for (const auto& feat : fitted->spec.features) {
        auto pos = std::find(imp.input_names.begin(), imp.input_names.end(), feat.column);
        if (pos == imp.input_names.end())
          throw Error(ErrorCode::MissingFeature,
                      o.imputer + " feature " + feat.column + " is not an input of " + fn.name);
        const Value& v = in[static_cast<std::size_t>(pos - imp.input_names.begin())];
        complete = complete && !v.is_null();
        features.push_back(v);
      }
      out.push_back(complete ? impute::impute(*fitted, features) : nulls_.fresh());
    }
    return out;
  }

  bool filter(const Atom& atom) const {
    if (auto* c = std::get_if<CompareAtom>(&atom)) {
      auto ord = compare_values(term_value(c->lhs), term_value(c->rhs));
      return ord && holds(c->op, *ord);
    }
    if (auto* a = std::get_if<AbsDiffAtom>(&atom)) {
      auto diff = abs_difference(term_value(a->a), term_value(a->b));
      if (!diff || !a->bound.value.is_numeric()) return false;
      return holds(a->op, *diff <=> a->bound.value.numeric());
    }
    if (auto* m = std::get_if<MemberAtom>(&atom)) {
      const Value& v = term_value(m->term);
      return std::any_of(m->set.begin(), m->set.end(),
                         [&](const Lit& l) { return join_equal(v, l.value); });
    }
    return false;
  }

  const std::vector<Atom>& body_;
  RelationLookup lookup_;
  const FunctionRegistry& registry_;
  QueryMode mode_;
  NullCounter& nulls_;
  std::map<std::string, std::size_t> ids_;
  std::vector<std::string> names_;
  std::vector<Step> steps_;
  std::vector<Value> binding_;
  std::vector<bool> bound_;
  std::vector<Origin> origin_;
  const std::function<void(const std::vector<Value>&, const std::vector<Origin>&)>* emit_ = nullptr;
  Value missing_{Missing{}};
};

const RelationSchema& global_schema(const std::vector<RelationSchema>& global,
                                    const std::string& name) {
  for (const auto& s : global)
    if (s.name() == name) return s;
  throw Error(ErrorCode::UnknownRelation, name + " is not a global relation");
}

}  // namespace

std::vector<Fact> apply_rule(const MappingRule& rule, const SourceMap& sources,
                             const FunctionRegistry& registry, NullCounter& nulls,
                             const std::vector<RelationSchema>& global, QueryMode mode) {
  RelationLookup lookup = [&](const std::string& name) -> const Relation* {
    auto it = sources.find(name);
    return it == sources.end() ? nullptr : &it->second;
  };
  BodyEvaluator eval(rule.body, lookup, registry, mode, nulls);
  std::vector<const RelationSchema*> head_schemas;
  for (const auto& h : rule.head) {
    head_schemas.push_back(&global_schema(global, h.name));
    if (head_schemas.back()->arity() != h.terms.size())
      throw Error(ErrorCode::TypeMismatch, "head " + h.name + " arity mismatch");
  }
  std::vector<Fact> facts;
  eval.run([&](const std::vector<Value>& binding, const std::vector<Origin>&) {
    std::map<std::string, Value> existentials;
    for (const auto& name : rule.existential_vars) existentials.emplace(name, nulls.fresh());
    for (std::size_t h = 0; h < rule.head.size(); ++h) {
      const auto& atom = rule.head[h];
      const auto& schema = *head_schemas[h];
      Tuple t;
      t.reserve(atom.terms.size());
      for (std::size_t c = 0; c < atom.terms.size(); ++c) {
        const Term& term = atom.terms[c];
        Value v;
        if (auto* var = as_var(term)) {
          auto ex = existentials.find(var->name);
          v = ex != existentials.end() ? ex->second : binding[*eval.find_var(var->name)];
        } else {
          v = std::get<Lit>(term).value;
        }
        t.push_back(coerce(v, schema.columns()[c].type, atom.name + "." + schema.columns()[c].name));
      }
      facts.emplace_back(atom.name, std::move(t));
    }
  });
  return facts;
}

namespace {

struct TupleLess {
  bool operator()(const Tuple& a, const Tuple& b) const { return tuple_less(a, b); }
};

void dedup(Relation& rel) {
  Relation out(rel.schema());
  std::set<Tuple, TupleLess> seen;
  for (const auto& row : rel.rows())
    if (seen.insert(row).second) out.add(row);
  rel = std::move(out);
}

}  // namespace

TargetInstance materialize(const MappingProgram& program, const SourceMap& sources,
                           const FunctionRegistry& registry,
                           const std::vector<RelationSchema>& global, QueryMode mode,
                           std::uint64_t null_start) {
  TargetInstance inst;
  for (const auto& s : global) inst.relations.emplace(s.name(), Relation(s));
  NullCounter nulls(null_start);
  std::map<std::string, std::set<Tuple, TupleLess>> seen;
  for (const auto& rule : program.rules) {
    for (auto& [name, tuple] : apply_rule(rule, sources, registry, nulls, global, mode)) {
      if (seen[name].insert(tuple).second) inst.relations.at(name).add(std::move(tuple));
    }
  }
  if (mode == QueryMode::Impute) {
    for (const auto& imputer : registry.column_imputer_names()) {
      const auto* spec = registry.imputer_spec(imputer);
      if (!spec) continue;
      auto it = inst.relations.find(spec->relation);
      if (it == inst.relations.end()) continue;
      const auto* fitted = registry.fitted(imputer);
      if (!fitted) throw Error(ErrorCode::ImputerNotFitted, imputer);
      Relation& rel = it->second;
      auto col = rel.schema().index_of(spec->target);
      if (!col)
        throw Error(ErrorCode::TypeMismatch, spec->relation + " has no column " + spec->target);
      Relation filled(rel.schema());
      for (Tuple row : rel.rows()) {
        if (row[*col].is_null()) {
          auto features = impute::features_from_row(*fitted, rel.schema(), row);
          if (std::none_of(features.begin(), features.end(),
                           [](const Value& v) { return v.is_null(); }))
            row[*col] = coerce(impute::impute(*fitted, features), rel.schema().columns()[*col].type,
                               spec->relation + "." + spec->target);
        }
        filled.add(std::move(row));
      }
      rel = std::move(filled);
      dedup(rel);
    }
  }
  inst.null_count = nulls.next() - null_start;
  return inst;
}

namespace {

/// Static type of every variable bound in a query body.
std::map<std::string, ColumnType> infer_types(const std::vector<Atom>& body,
                                              const TargetInstance& instance,
                                              const FunctionRegistry& registry) {
  std::map<std::string, ColumnType> types;
  for (const auto& atom : body)
    if (auto* rel = std::get_if<RelAtom>(&atom)) {
      const Relation& r = instance.at(rel->name);
      for (std::size_t c = 0; c < rel->terms.size() && c < r.schema().arity(); ++c)
        if (auto* v = as_var(rel->terms[c])) types.emplace(v->name, r.schema().columns()[c].type);
    }
  auto type_of = [&](const Term& t) -> std::optional<ColumnType> {
    if (auto* v = as_var(t)) {
      auto it = types.find(v->name);
      if (it == types.end()) return std::nullopt;
      return it->second;
    }
    const Value& lit = std::get<Lit>(t).value;
    if (lit.is_int()) return ColumnType::Int;
    if (lit.is_float()) return ColumnType::Float;
    if (lit.is_date()) return ColumnType::Date;
    return ColumnType::Str;
  };
  for (std::size_t i : function_order(body)) {
    const auto& fn = std::get<FuncAtom>(body[i]);
    if (fn.name == "minus" && fn.inputs.size() == 2 && fn.outputs.size() == 1) {
      auto a = type_of(fn.inputs[0]);
      auto b = type_of(fn.inputs[1]);
      const bool integral = a && b &&
                            ((*a == ColumnType::Date && *b == ColumnType::Date) ||
                             (*a == ColumnType::Int && *b == ColumnType::Int));
      types.emplace(fn.outputs[0].name, integral ? ColumnType::Int : ColumnType::Float);
    } else if (registry.normalizer(fn.name)) {
      for (const auto& o : fn.outputs) types.emplace(o.name, ColumnType::Str);
    } else if (const auto* imp = registry.impute_function(fn.name)) {
      for (std::size_t k = 0; k < fn.outputs.size() && k < imp->outputs.size(); ++k) {
        const auto* spec = registry.imputer_spec(imp->outputs[k].imputer);
        types.emplace(fn.outputs[k].name, spec ? spec->target_type : ColumnType::Float);
      }
    }
  }
  return types;
}

}  // namespace

Relation evaluate_query(const QueryDef& query, const TargetInstance& instance, QueryMode mode,
                        const FunctionRegistry& registry) {
  const auto types = infer_types(query.body, instance, registry);
  std::vector<Column> columns;
  for (const auto& v : query.head_vars) {
    auto it = types.find(v.name);
    if (it == types.end())
      throw Error(ErrorCode::UnknownRelation,
                  "query " + query.name + ": head variable " + v.name + " is unbound");
    columns.push_back({v.name, it->second});
  }
  Relation out(RelationSchema(query.name, columns));

  RelationLookup lookup = [&](const std::string& name) -> const Relation* {
    return &instance.at(name);
  };
  NullCounter scratch(instance.null_count + (std::uint64_t{1} << 62));
  BodyEvaluator eval(query.body, lookup, registry, mode, scratch);
  std::vector<std::size_t> head_ids;
  for (const auto& v : query.head_vars) head_ids.push_back(*eval.find_var(v.name));

  eval.run([&](const std::vector<Value>& binding, const std::vector<Origin>& origins) {
    Tuple t;
    t.reserve(head_ids.size());
    for (std::size_t i = 0; i < head_ids.size(); ++i) {
      const std::size_t id = head_ids[i];
      Value v = binding[id];
      if (v.is_null()) {
        if (mode == QueryMode::CertainAnswers) return;
        const Origin& o = origins[id];
        if (!o.relation) return;
        const auto& schema = o.relation->schema();
        const auto* fitted = registry.column_imputer(schema.name(), schema.columns()[o.column].name);
        if (!fitted) return;
        auto features = impute::features_from_row(*fitted, schema, o.relation->rows()[o.row]);
        if (std::any_of(features.begin(), features.end(),
                        [](const Value& f) { return f.is_null(); }))
          return;
        v = impute::impute(*fitted, features);
      }
      t.push_back(coerce(v, columns[i].type, query.name + "." + columns[i].name));
    }
    out.add(std::move(t));
  });
  return out;
}

void write_instance(const TargetInstance& instance, const std::filesystem::path& dir,
                    std::string_view null_token) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, rel] : instance.relations)
    write_csv(dir / (name + ".csv"), rel, null_token);
}

}  // namespace fedint::exchange
