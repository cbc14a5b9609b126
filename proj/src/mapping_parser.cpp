#include <cctype>
#include <charconv>
#include <cmath>

#include "fedint/error.hpp"
#include "fedint/mapping.hpp"

namespace fedint::mapping {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

bool holds(CompareOp op, std::partial_ordering ord) {
  switch (op) {
    case CompareOp::Lt: return ord == std::partial_ordering::less;
    case CompareOp::Le: return ord == std::partial_ordering::less || ord == 0;
    case CompareOp::Gt: return ord == std::partial_ordering::greater;
    case CompareOp::Ge: return ord == std::partial_ordering::greater || ord == 0;
    case CompareOp::Eq: return ord == 0;
    case CompareOp::Ne: return ord == std::partial_ordering::less ||
                               ord == std::partial_ordering::greater;
  }
  return false;
}

std::string_view to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::Builtin: return "builtin";
    case FunctionKind::Normalize: return "normalize";
    case FunctionKind::Impute: return "impute";
  }
  return "?";
}

FunctionSignatures builtin_signatures() {
  return {{"minus", FunctionSignature{2, 1, FunctionKind::Builtin}}};
}

const QueryDef* MappingProgram::find_query(std::string_view name) const {
  for (const auto& q : queries)
    if (q.name == name) return &q;
  return nullptr;
}

namespace {

void add_unique(std::vector<std::string>& out, const std::string& name) {
  for (const auto& n : out)
    if (n == name) return;
  out.push_back(name);
}

}  // namespace

std::vector<std::string> bound_vars(const std::vector<Atom>& body) {
  std::vector<std::string> out;
  for (const auto& atom : body) {
    if (auto* rel = std::get_if<RelAtom>(&atom)) {
      for (const auto& t : rel->terms)
        if (auto* v = as_var(t)) add_unique(out, v->name);
    } else if (auto* fn = std::get_if<FuncAtom>(&atom)) {
      for (const auto& v : fn->outputs) add_unique(out, v.name);
    }
  }
  return out;
}

std::vector<std::string> existential_vars(const MappingRule& rule) {
  const auto bound = bound_vars(rule.body);
  std::vector<std::string> out;
  for (const auto& h : rule.head)
    for (const auto& t : h.terms)
      if (auto* v = as_var(t))
        if (std::find(bound.begin(), bound.end(), v->name) == bound.end())
          add_unique(out, v->name);
  return out;
}

namespace {

enum class Tok {
  Ident,
  String,
  Int,
  Float,
  Date,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Amp,
  Dot,
  Arrow,   // ->
  LArrow,  // <-
  Bar,
  Minus,
  Op,
  In,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Value literal;
  CompareOp op = CompareOp::Eq;
  std::size_t line = 1;
  std::size_t col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (ident_start(c)) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) advance();
        t.text = std::string(text_.substr(start, pos_ - start));
        t.kind = t.text == "in" ? Tok::In : Tok::Ident;
      } else if (c == '"') {
        lex_string(t);
      } else if (digit(c)) {
        lex_number(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void lex_string(Token& t) {
    advance();  // opening quote
    std::string s;
    while (true) {
      if (pos_ >= text_.size()) throw SyntaxError(t.line, t.col, "closing '\"'");
      const char c = text_[pos_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) throw SyntaxError(line_, col_, "escape character");
        const char e = text_[pos_];
        if (e == 'n') s.push_back('\n');
        else if (e == 't') s.push_back('\t');
        else s.push_back(e);
        advance();
        continue;
      }
      s.push_back(c);
      advance();
    }
    t.kind = Tok::String;
    t.literal = Value(std::move(s));
  }

  void lex_number(Token& t) {
    // ISO date: exactly NNNN-NN-NN not followed by an identifier character.
    if (pos_ + 10 <= text_.size() && digit(peek(1)) && digit(peek(2)) && digit(peek(3)) &&
        peek(4) == '-' && digit(peek(5)) && digit(peek(6)) && peek(7) == '-' &&
        digit(peek(8)) && digit(peek(9)) && !ident_char(peek(10)) &&
        !(peek(10) == '.' && digit(peek(11)))) {
      auto d = Date::parse(text_.substr(pos_, 10));
      if (!d) throw SyntaxError(t.line, t.col, "valid calendar date");
      for (int i = 0; i < 10; ++i) advance();
      t.kind = Tok::Date;
      t.literal = Value(*d);
      return;
    }
    std::size_t start = pos_;
    bool is_float = false;
    while (digit(peek())) advance();
    if (peek() == '.' && digit(peek(1))) {
      is_float = true;
      advance();
      while (digit(peek())) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (digit(peek(1)) || ((peek(1) == '-' || peek(1) == '+') && digit(peek(2))))) {
      is_float = true;
      advance();
      if (peek() == '-' || peek() == '+') advance();
      while (digit(peek())) advance();
    }
    if (ident_char(peek())) throw SyntaxError(line_, col_, "end of number");
    const std::string_view s = text_.substr(start, pos_ - start);
    t.text = std::string(s);
    if (is_float) {
      double v = 0;
      if (std::from_chars(s.data(), s.data() + s.size(), v).ec != std::errc{})
        throw SyntaxError(t.line, t.col, "number");
      t.kind = Tok::Float;
      t.literal = Value(v);
    } else {
      std::int64_t v = 0;
      if (std::from_chars(s.data(), s.data() + s.size(), v).ec != std::errc{})
        throw SyntaxError(t.line, t.col, "integer in 64-bit range");
      t.kind = Tok::Int;
      t.literal = Value(v);
    }
  }

  void lex_punct(Token& t) {
    const char c = text_[pos_];
    const char n = peek(1);
    auto take = [&](Tok kind, int len) {
      t.kind = kind;
      t.text = std::string(text_.substr(pos_, static_cast<std::size_t>(len)));
      for (int i = 0; i < len; ++i) advance();
    };
    auto take_op = [&](CompareOp op, int len) {
      take(Tok::Op, len);
      t.op = op;
    };
    switch (c) {
      case '(': return take(Tok::LParen, 1);
      case ')': return take(Tok::RParen, 1);
      case '[': return take(Tok::LBracket, 1);
      case ']': return take(Tok::RBracket, 1);
      case ',': return take(Tok::Comma, 1);
      case '&': return take(Tok::Amp, 1);
      case '.': return take(Tok::Dot, 1);
      case '|': return take(Tok::Bar, 1);
      case '-': return n == '>' ? take(Tok::Arrow, 2) : take(Tok::Minus, 1);
      case '<':
        if (n == '-') return take(Tok::LArrow, 2);
        if (n == '=') return take_op(CompareOp::Le, 2);
        return take_op(CompareOp::Lt, 1);
      case '>':
        if (n == '=') return take_op(CompareOp::Ge, 2);
        return take_op(CompareOp::Gt, 1);
      case '=': return take_op(CompareOp::Eq, 1);
      case '!':
        if (n == '=') return take_op(CompareOp::Ne, 2);
        break;
      default: break;
    }
    throw SyntaxError(t.line, t.col, std::string("token, found '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const FunctionSignatures& sigs)
      : toks_(std::move(tokens)), sigs_(sigs) {}

  MappingProgram run() {
    MappingProgram program;
    program.function_signatures = sigs_;
    while (cur().kind != Tok::End) statement(program);
    return program;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t k) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(cur().line, cur().col, expected);
  }

  Token expect(Tok kind, const char* what) {
    if (cur().kind != kind) fail(what);
    return take();
  }

  void statement(MappingProgram& program) {
    const std::size_t line = cur().line;
    std::vector<Atom> first = body();
    if (cur().kind == Tok::Arrow) {
      take();
      MappingRule rule;
      rule.line = line;
      rule.body = std::move(first);
      rule.head.push_back(rel_atom());
      while (cur().kind == Tok::Amp) {
        take();
        rule.head.push_back(rel_atom());
      }
      expect(Tok::Dot, "'.'");
      resolve_functions(rule.body);
      rule.existential_vars = existential_vars(rule);
      program.rules.push_back(std::move(rule));
      return;
    }
    if (cur().kind == Tok::LArrow) {
      // The parsed "body" was the query head: a single atom of variables.
      if (first.size() != 1 || !std::holds_alternative<RelAtom>(first[0])) fail("'->'");
      auto& head = std::get<RelAtom>(first[0]);
      QueryDef q;
      q.line = line;
      q.name = head.name;
      for (const auto& t : head.terms) {
        auto* v = as_var(t);
        if (!v) fail("query head of variables");
        q.head_vars.push_back(*v);
      }
      take();
      q.body = body();
      expect(Tok::Dot, "'.'");
      resolve_functions(q.body);
      program.queries.push_back(std::move(q));
      return;
    }
    fail("'->' or '<-'");
  }

  std::vector<Atom> body() {
    std::vector<Atom> atoms;
    atoms.push_back(body_atom());
    while (cur().kind == Tok::Amp) {
      take();
      atoms.push_back(body_atom());
    }
    return atoms;
  }

  Atom body_atom() {
    if (cur().kind == Tok::Bar) {
      take();
      AbsDiffAtom a;
      a.a = term();
      expect(Tok::Minus, "'-'");
      a.b = term();
      expect(Tok::Bar, "'|'");
      if (cur().kind != Tok::Op) fail("comparison operator");
      a.op = take().op;
      a.bound = literal();
      return a;
    }
    if (cur().kind == Tok::Ident && ahead(1).kind == Tok::LParen) return rel_atom();
    Term lhs = term();
    if (cur().kind == Tok::In) {
      take();
      MemberAtom m;
      m.term = std::move(lhs);
      expect(Tok::LBracket, "'['");
      m.set.push_back(literal());
      while (cur().kind == Tok::Comma) {
        take();
        m.set.push_back(literal());
      }
      expect(Tok::RBracket, "']'");
      return m;
    }
    if (cur().kind != Tok::Op) fail("comparison operator, 'in' or '('");
    CompareAtom c;
    c.lhs = std::move(lhs);
    c.op = take().op;
    c.rhs = term();
    return c;
  }

  RelAtom rel_atom() {
    RelAtom atom;
    atom.name = expect(Tok::Ident, "identifier").text;
    expect(Tok::LParen, "'('");
    atom.terms.push_back(term());
    while (cur().kind == Tok::Comma) {
      take();
      atom.terms.push_back(term());
    }
    expect(Tok::RParen, "',' or ')'");
    return atom;
  }

  Term term() {
    if (cur().kind == Tok::Ident) return Var{take().text};
    return literal();
  }

  Lit literal() {
    bool negative = false;
    if (cur().kind == Tok::Minus && (ahead(1).kind == Tok::Int || ahead(1).kind == Tok::Float)) {
      take();
      negative = true;
    }
    switch (cur().kind) {
      case Tok::String:
      case Tok::Date:
        return Lit{take().literal};
      case Tok::Int: {
        auto v = take().literal.as_int();
        return Lit{Value(negative ? -v : v)};
      }
      case Tok::Float: {
        auto v = take().literal.as_float();
        return Lit{Value(negative ? -v : v)};
      }
      default:
        fail("term");
    }
  }

  void resolve_functions(std::vector<Atom>& atoms) {
    for (auto& atom : atoms) {
      auto* rel = std::get_if<RelAtom>(&atom);
      if (!rel) continue;
      auto it = sigs_.find(rel->name);
      if (it == sigs_.end()) continue;
      const auto& sig = it->second;
      if (rel->terms.size() != sig.in_arity + sig.out_arity) continue;
      FuncAtom fn;
      fn.name = rel->name;
      bool outputs_are_vars = true;
      for (std::size_t i = 0; i < rel->terms.size(); ++i) {
        if (i < sig.in_arity) {
          fn.inputs.push_back(rel->terms[i]);
        } else if (auto* v = as_var(rel->terms[i])) {
          fn.outputs.push_back(*v);
        } else {
          outputs_are_vars = false;
        }
      }
      if (outputs_are_vars) atom = std::move(fn);
    }
  }

  std::vector<Token> toks_;
  const FunctionSignatures& sigs_;
  std::size_t pos_ = 0;
};

}  // namespace

MappingProgram parse_program(std::string_view text, const FunctionSignatures& signatures) {
  return Parser(Lexer(text).run(), signatures).run();
}

}  // namespace fedint::mapping
