#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedint/relation.hpp"
#include "fedint/value.hpp"

namespace fedint::mapping {

struct Var {
  std::string name;
  bool operator==(const Var&) const = default;
};

struct Lit {
  Value value;
  bool operator==(const Lit& o) const { return value.identical(o.value); }
};

using Term = std::variant<Var, Lit>;

inline const Var* as_var(const Term& t) { return std::get_if<Var>(&t); }

enum class CompareOp { Lt, Le, Gt, Ge, Eq, Ne };
std::string_view to_string(CompareOp op);
bool holds(CompareOp op, std::partial_ordering ord);

struct RelAtom {
  std::string name;
  std::vector<Term> terms;
  bool operator==(const RelAtom&) const = default;
};

struct FuncAtom {
  std::string name;
  std::vector<Term> inputs;
  std::vector<Var> outputs;
  bool operator==(const FuncAtom&) const = default;
};

struct CompareAtom {
  Term lhs;
  CompareOp op = CompareOp::Eq;
  Term rhs;
  bool operator==(const CompareAtom&) const = default;
};

/// `|a - b| op bound`
struct AbsDiffAtom {
  Term a;
  Term b;
  CompareOp op = CompareOp::Lt;
  Lit bound;
  bool operator==(const AbsDiffAtom&) const = default;
};

struct MemberAtom {
  Term term;
  std::vector<Lit> set;
  bool operator==(const MemberAtom&) const = default;
};

using Atom = std::variant<RelAtom, FuncAtom, CompareAtom, AbsDiffAtom, MemberAtom>;

enum class FunctionKind { Builtin, Normalize, Impute };
std::string_view to_string(FunctionKind kind);

struct FunctionSignature {
  std::size_t in_arity = 0;
  std::size_t out_arity = 0;
  FunctionKind kind = FunctionKind::Builtin;
  bool operator==(const FunctionSignature&) const = default;
};

using FunctionSignatures = std::map<std::string, FunctionSignature, std::less<>>;

/// `minus` is always available; everything else is declared by the experiment.
FunctionSignatures builtin_signatures();

struct MappingRule {
  std::vector<Atom> body;
  std::vector<RelAtom> head;
  /// Head variables bound nowhere in the body; filled by the parser.
  std::vector<std::string> existential_vars;
  std::size_t line = 0;
  bool operator==(const MappingRule& o) const {
    return body == o.body && head == o.head && existential_vars == o.existential_vars;
  }
};

struct QueryDef {
  std::string name;
  std::vector<Var> head_vars;
  std::vector<Atom> body;
  std::size_t line = 0;
  bool operator==(const QueryDef& o) const {
    return name == o.name && head_vars == o.head_vars && body == o.body;
  }
};

struct MappingProgram {
  std::vector<MappingRule> rules;
  std::vector<QueryDef> queries;
  FunctionSignatures function_signatures;

  const QueryDef* find_query(std::string_view name) const;
  bool operator==(const MappingProgram&) const = default;
};

/// Variables bound by Rel atoms or Func outputs, in first-occurrence order.
std::vector<std::string> bound_vars(const std::vector<Atom>& body);
std::vector<std::string> existential_vars(const MappingRule& rule);

/// Parses mapping text. `ident(...)` atoms in bodies whose name is a declared
/// function become Func atoms split by the declared input arity; all others
/// are relation atoms. Throws SyntaxError.
MappingProgram parse_program(std::string_view text,
                             const FunctionSignatures& signatures = builtin_signatures());

/// Canonical text; parse(pretty_print(p)) == p under the same signatures.
std::string pretty_print(const MappingProgram& program);
std::string pretty_print(const Atom& atom);
std::string pretty_print(const Term& term);

enum class Severity { Error, Info };

struct Finding {
  Severity severity = Severity::Error;
  /// Short machine-readable tag, e.g. "UnsafeFunctionInput".
  std::string kind;
  std::string message;
  /// Offending name (variable, relation or function), when there is one.
  std::string subject;
};

struct StatementReport {
  std::string label;  // "rule 1" or "query q"
  std::vector<std::string> existential_vars;
  std::vector<Finding> findings;
};

struct ValidationReport {
  std::vector<StatementReport> statements;
  std::size_t error_count() const;
  bool ok() const { return error_count() == 0; }
  std::string to_text() const;
};

ValidationReport validate_program(const MappingProgram& program,
                                  const std::vector<RelationSchema>& sources,
                                  const std::vector<RelationSchema>& global);

/// Fixpoint test: do the Func atoms admit an order where every input is
/// bound by a Rel atom or an earlier Func output? Returns unbound inputs.
std::vector<std::string> unsafe_function_inputs(const std::vector<Atom>& body);

/// Safe evaluation order of the Func atoms (indices into `body`).
std::vector<std::size_t> function_order(const std::vector<Atom>& body);

}  // namespace fedint::mapping
