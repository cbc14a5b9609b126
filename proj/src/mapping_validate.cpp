#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fedint/mapping.hpp"

namespace fedint::mapping {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string literal_text(const Value& v) {
  if (v.is_str()) return quote(v.as_str());
  if (v.is_float()) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v.as_float());
    std::string s(buf, res.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
  }
  return v.to_string();
}

std::string join_terms(const std::vector<Term>& terms) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += ", ";
    out += pretty_print(terms[i]);
  }
  return out;
}

std::string join_atoms(const std::vector<Atom>& atoms) {
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += " & ";
    out += pretty_print(atoms[i]);
  }
  return out;
}

}  // namespace

std::string pretty_print(const Term& term) {
  if (auto* v = as_var(term)) return v->name;
  return literal_text(std::get<Lit>(term).value);
}

std::string pretty_print(const Atom& atom) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, RelAtom>) {
          return a.name + "(" + join_terms(a.terms) + ")";
        } else if constexpr (std::is_same_v<T, FuncAtom>) {
          std::vector<Term> all = a.inputs;
          for (const auto& o : a.outputs) all.push_back(o);
          return a.name + "(" + join_terms(all) + ")";
        } else if constexpr (std::is_same_v<T, CompareAtom>) {
          return pretty_print(a.lhs) + " " + std::string(to_string(a.op)) + " " +
                 pretty_print(a.rhs);
        } else if constexpr (std::is_same_v<T, AbsDiffAtom>) {
          return "|" + pretty_print(a.a) + " - " + pretty_print(a.b) + "| " +
                 std::string(to_string(a.op)) + " " + literal_text(a.bound.value);
        } else {
          std::string out = pretty_print(a.term) + " in [";
          for (std::size_t i = 0; i < a.set.size(); ++i) {
            if (i) out += ", ";
            out += literal_text(a.set[i].value);
          }
          return out + "]";
        }
      },
      atom);
}

std::string pretty_print(const MappingProgram& program) {
  std::string out;
  for (const auto& rule : program.rules) {
    out += join_atoms(rule.body);
    out += "\n  -> ";
    for (std::size_t i = 0; i < rule.head.size(); ++i) {
      if (i) out += " & ";
      out += pretty_print(Atom(rule.head[i]));
    }
    out += ".\n";
  }
  for (const auto& q : program.queries) {
    out += q.name + "(";
    for (std::size_t i = 0; i < q.head_vars.size(); ++i) {
      if (i) out += ", ";
      out += q.head_vars[i].name;
    }
    out += ") <- " + join_atoms(q.body) + ".\n";
  }
  return out;
}

std::vector<std::string> unsafe_function_inputs(const std::vector<Atom>& body) {
  std::vector<std::string> bound;
  std::vector<const FuncAtom*> pending;
  for (const auto& atom : body) {
    if (auto* rel = std::get_if<RelAtom>(&atom)) {
      for (const auto& t : rel->terms)
        if (auto* v = as_var(t)) bound.push_back(v->name);
    } else if (auto* fn = std::get_if<FuncAtom>(&atom)) {
      pending.push_back(fn);
    }
  }
  auto is_bound = [&](const std::string& n) {
    return std::find(bound.begin(), bound.end(), n) != bound.end();
  };
  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      const bool ready = std::all_of((*it)->inputs.begin(), (*it)->inputs.end(),
                                     [&](const Term& t) {
                                       auto* v = as_var(t);
                                       return !v || is_bound(v->name);
                                     });
      if (ready) {
        for (const auto& o : (*it)->outputs) bound.push_back(o.name);
        it = pending.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  std::vector<std::string> unsafe;
  for (const auto* fn : pending)
    for (const auto& t : fn->inputs)
      if (auto* v = as_var(t))
        if (!is_bound(v->name) &&
            std::find(unsafe.begin(), unsafe.end(), v->name) == unsafe.end())
          unsafe.push_back(v->name);
  return unsafe;
}

std::vector<std::size_t> function_order(const std::vector<Atom>& body) {
  std::vector<std::string> bound;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (auto* rel = std::get_if<RelAtom>(&body[i])) {
      for (const auto& t : rel->terms)
        if (auto* v = as_var(t)) bound.push_back(v->name);
    } else if (std::holds_alternative<FuncAtom>(body[i])) {
      pending.push_back(i);
    }
  }
  std::vector<std::size_t> order;
  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      const auto& fn = std::get<FuncAtom>(body[*it]);
      const bool ready = std::all_of(fn.inputs.begin(), fn.inputs.end(), [&](const Term& t) {
        auto* v = as_var(t);
        return !v || std::find(bound.begin(), bound.end(), v->name) != bound.end();
      });
      if (ready) {
        for (const auto& o : fn.outputs) bound.push_back(o.name);
        order.push_back(*it);
        it = pending.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  // Unsafe leftovers keep source order; validation rejects such programs.
  order.insert(order.end(), pending.begin(), pending.end());
  return order;
}

std::size_t ValidationReport::error_count() const {
  std::size_t n = 0;
  for (const auto& s : statements)
    for (const auto& f : s.findings)
      if (f.severity == Severity::Error) ++n;
  return n;
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  for (const auto& s : statements) {
    out << s.label << ": existential {";
    for (std::size_t i = 0; i < s.existential_vars.size(); ++i)
      out << (i ? ", " : "") << s.existential_vars[i];
    out << "}";
    std::size_t errors = 0;
    for (const auto& f : s.findings)
      if (f.severity == Severity::Error) ++errors;
    out << (errors ? "" : " ok") << "\n";
    for (const auto& f : s.findings)
      out << "  " << (f.severity == Severity::Error ? "error " : "info ") << f.kind << ": "
          << f.message << "\n";
  }
  out << error_count() << " error(s)\n";
  return out.str();
}

namespace {

const RelationSchema* find_schema(const std::vector<RelationSchema>& schemas,
                                  std::string_view name) {
  for (const auto& s : schemas)
    if (s.name() == name) return &s;
  return nullptr;
}

void error(StatementReport& r, std::string kind, std::string message, std::string subject = {}) {
  r.findings.push_back({Severity::Error, std::move(kind), std::move(message), std::move(subject)});
}

bool has_labeled_null(const Term& t) {
  auto* l = std::get_if<Lit>(&t);
  return l && l->value.is_null();
}

/// Shared body checks. `relations` are the schemas body atoms may reference.
void check_body(StatementReport& r, const std::vector<Atom>& body,
                const std::vector<RelationSchema>& relations,
                const std::vector<RelationSchema>& other_side, const char* side,
                const FunctionSignatures& sigs) {
  const auto bound = bound_vars(body);
  auto is_bound = [&](const Term& t) {
    auto* v = as_var(t);
    return !v || std::find(bound.begin(), bound.end(), v->name) != bound.end();
  };
  for (const auto& atom : body) {
    if (auto* rel = std::get_if<RelAtom>(&atom)) {
      auto sig = sigs.find(rel->name);
      if (sig != sigs.end()) {
        error(r, "FunctionArity",
              rel->name + " declared with " + std::to_string(sig->second.in_arity) + " input(s) and " +
                  std::to_string(sig->second.out_arity) + " variable output(s), used with " +
                  std::to_string(rel->terms.size()) + " argument(s)",
              rel->name);
        continue;
      }
      const RelationSchema* schema = find_schema(relations, rel->name);
      if (!schema) {
        if (find_schema(other_side, rel->name))
          error(r, "WrongSideRelation", rel->name + " is not a " + side + " relation", rel->name);
        else
          error(r, "UnknownFunction",
                rel->name + " is neither a " + side + " relation nor a declared function",
                rel->name);
        continue;
      }
      if (schema->arity() != rel->terms.size())
        error(r, "ArityMismatch",
              rel->name + " has " + std::to_string(schema->arity()) + " column(s), used with " +
                  std::to_string(rel->terms.size()),
              rel->name);
    } else if (auto* c = std::get_if<CompareAtom>(&atom)) {
      for (const Term* t : {&c->lhs, &c->rhs}) {
        if (!is_bound(*t))
          error(r, "UnsafeComparison", "variable " + as_var(*t)->name + " is never bound",
                as_var(*t)->name);
        if (has_labeled_null(*t)) error(r, "NullLiteral", "comparison with a null literal");
      }
    } else if (auto* a = std::get_if<AbsDiffAtom>(&atom)) {
      for (const Term* t : {&a->a, &a->b})
        if (!is_bound(*t))
          error(r, "UnsafeComparison", "variable " + as_var(*t)->name + " is never bound",
                as_var(*t)->name);
      if (!a->bound.value.is_numeric())
        error(r, "BadBound", "absolute-difference bound must be numeric");
    } else if (auto* m = std::get_if<MemberAtom>(&atom)) {
      if (!is_bound(m->term))
        error(r, "UnsafeComparison", "variable " + as_var(m->term)->name + " is never bound",
              as_var(m->term)->name);
    }
  }
  for (const auto& name : unsafe_function_inputs(body))
    error(r, "UnsafeFunctionInput", "function input " + name + " is never bound before use",
          name);
}

}  // namespace

ValidationReport validate_program(const MappingProgram& program,
                                  const std::vector<RelationSchema>& sources,
                                  const std::vector<RelationSchema>& global) {
  ValidationReport report;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    const auto& rule = program.rules[i];
    StatementReport r;
    r.label = "rule " + std::to_string(i + 1);
    r.existential_vars = existential_vars(rule);
    check_body(r, rule.body, sources, global, "source", program.function_signatures);
    for (const auto& h : rule.head) {
      const RelationSchema* schema = find_schema(global, h.name);
      if (!schema) {
        error(r, "HeadNotInGlobal", h.name + " is not a global relation", h.name);
        continue;
      }
      if (schema->arity() != h.terms.size())
        error(r, "ArityMismatch",
              h.name + " has " + std::to_string(schema->arity()) + " column(s), head uses " +
                  std::to_string(h.terms.size()),
              h.name);
    }
    if (!r.existential_vars.empty()) {
      std::string vars;
      for (const auto& v : r.existential_vars) vars += (vars.empty() ? "" : ", ") + v;
      r.findings.push_back({Severity::Info, "Existential",
                            "{" + vars + "} become labeled nulls", {}});
    }
    report.statements.push_back(std::move(r));
  }
  std::vector<std::string> names;
  for (const auto& q : program.queries) {
    StatementReport r;
    r.label = "query " + q.name;
    if (std::find(names.begin(), names.end(), q.name) != names.end())
      error(r, "DuplicateQuery", "query name " + q.name + " defined twice", q.name);
    names.push_back(q.name);
    check_body(r, q.body, global, sources, "global", program.function_signatures);
    const auto bound = bound_vars(q.body);
    for (const auto& v : q.head_vars)
      if (std::find(bound.begin(), bound.end(), v.name) == bound.end())
        error(r, "UnboundHeadVar", "head variable " + v.name + " is not bound in the body",
              v.name);
    report.statements.push_back(std::move(r));
  }
  return report;
}

}  // namespace fedint::mapping
