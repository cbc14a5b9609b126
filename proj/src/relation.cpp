#include "fedint/relation.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fedint/error.hpp"
#include "fedint/io_audit.hpp"

namespace fedint {

RelationSchema::RelationSchema(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  if (name_.empty()) throw Error(ErrorCode::TypeMismatch, "relation name is empty");
  std::set<std::string_view> seen;
  for (const auto& c : columns_)
    if (!seen.insert(c.name).second)
      throw Error(ErrorCode::TypeMismatch, "duplicate column '" + c.name + "' in " + name_);
}

std::optional<std::size_t> RelationSchema::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == column) return i;
  return std::nullopt;
}

bool tuples_identical(const Tuple& a, const Tuple& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].identical(b[i])) return false;
  return true;
}

bool tuple_less(const Tuple& a, const Tuple& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = a[i].order(b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

void Relation::add(Tuple row) {
  if (row.size() != schema_.arity())
    throw Error(ErrorCode::TypeMismatch, "arity " + std::to_string(row.size()) + " != " +
                                             std::to_string(schema_.arity()) + " for " +
                                             schema_.name());
  for (std::size_t i = 0; i < row.size(); ++i)
    if (!value_matches_type(row[i], schema_.columns()[i].type))
      throw Error(ErrorCode::TypeMismatch, schema_.name() + "." + schema_.columns()[i].name +
                                               " expects " +
                                               std::string(to_string(schema_.columns()[i].type)) +
                                               ", got '" + row[i].to_string() + "'");
  rows_.push_back(std::move(row));
}

bool Relation::add_unique(Tuple row) {
  for (const auto& r : rows_)
    if (tuples_identical(r, row)) return false;
  add(std::move(row));
  return true;
}

Relation Relation::sorted() const {
  Relation out = *this;
  std::sort(out.rows_.begin(), out.rows_.end(), tuple_less);
  return out;
}

bool Relation::same_rows(const Relation& other) const {
  if (rows_.size() != other.rows_.size()) return false;
  auto a = sorted();
  auto b = other.sorted();
  for (std::size_t i = 0; i < a.rows_.size(); ++i)
    if (!tuples_identical(a.rows_[i], b.rows_[i])) return false;
  return true;
}

bool Relation::operator==(const Relation& other) const {
  if (!(schema_ == other.schema_) || rows_.size() != other.rows_.size()) return false;
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (!tuples_identical(rows_[i], other.rows_[i])) return false;
  return true;
}

std::vector<std::vector<CsvField>> split_csv_records(std::string_view text) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> record;
  std::string field;
  bool in_quotes = false;
  bool quoted = false;
  bool field_started = false;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  auto end_field = [&] {
    record.push_back(CsvField{std::move(field), quoted});
    field.clear();
    field_started = false;
    quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallowed; \n ends the record
    } else if (c == '\n') {
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

Value parse_cell(const CsvField& field, const Column& column, std::size_t row,
                 const CsvOptions& options) {
  const std::string& cell = field.text;
  if (!field.quoted && cell == options.null_token) return Missing{};
  if (options.parse_labeled_nulls && cell.size() > 2 && cell[0] == '_' && cell[1] == 'N') {
    std::uint64_t id = 0;
    auto res = std::from_chars(cell.data() + 2, cell.data() + cell.size(), id);
    if (res.ec == std::errc{} && res.ptr == cell.data() + cell.size()) return LabeledNull{id};
  }
  switch (column.type) {
    case ColumnType::Int: {
      std::int64_t v = 0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || cell.empty())
        throw CsvParseError(row, column.name, "not an int: '" + cell + "'");
      return v;
    }
    case ColumnType::Float: {
      double v = 0;
      const char* first = cell.data();
      if (!cell.empty() && cell[0] == '+') ++first;
      auto res = std::from_chars(first, cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || cell.empty())
        throw CsvParseError(row, column.name, "not a float: '" + cell + "'");
      return v;
    }
    case ColumnType::Str:
      return cell;
    case ColumnType::Date: {
      auto d = Date::parse(cell);
      if (!d) throw CsvParseError(row, column.name, "not a YYYY-MM-DD date: '" + cell + "'");
      return *d;
    }
  }
  return Missing{};
}

bool needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos ||
         (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void append_field(std::string& out, std::string_view s) {
  if (!needs_quoting(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Relation parse_csv(std::string_view text, const RelationSchema& schema,
                   const CsvOptions& options) {
  auto records = split_csv_records(text);
  if (records.empty())
    throw Error(ErrorCode::HeaderMismatch, "missing header row for " + schema.name());
  const auto& header = records.front();
  bool header_ok = header.size() == schema.arity();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i)
    header_ok = header[i].text == schema.columns()[i].name;
  if (!header_ok) {
    std::string got;
    for (const auto& h : header) got += (got.empty() ? "" : ",") + h.text;
    throw Error(ErrorCode::HeaderMismatch, schema.name() + ": header '" + got + "'");
  }
  Relation rel(schema);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    // A lone empty field is a blank line unless the relation is unary.
    if (rec.size() == 1 && rec[0].text.empty() && !rec[0].quoted && schema.arity() != 1) continue;
    if (rec.size() != schema.arity())
      throw CsvParseError(r, rec.size() < schema.arity() ? schema.columns()[rec.size()].name
                                                         : schema.columns().back().name,
                          "expected " + std::to_string(schema.arity()) + " fields, got " +
                              std::to_string(rec.size()));
    Tuple row;
    row.reserve(rec.size());
    for (std::size_t c = 0; c < rec.size(); ++c)
      row.push_back(parse_cell(rec[c], schema.columns()[c], r, options));
    rel.add(std::move(row));
  }
  return rel;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Relation load_csv(const std::filesystem::path& path, const RelationSchema& schema,
                  const CsvOptions& options) {
  IoAudit::record(path);
  return parse_csv(read_text_file(path), schema, options);
}

std::string format_csv(const Relation& relation, std::string_view null_token) {
  std::string out;
  const auto& cols = relation.schema().columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out.push_back(',');
    append_field(out, cols[i].name);
  }
  out.push_back('\n');
  for (const auto& row : relation.rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      const std::string cell = row[i].to_string(null_token);
      // An empty string that is not a null must stay distinguishable from
      // the default (empty) null token.
      if (row[i].is_str() && cell == null_token) {
        out.push_back('"');
        out.append(cell);
        out.push_back('"');
      } else
        append_field(out, cell);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Relation& relation,
               std::string_view null_token) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << format_csv(relation, null_token);
}

}  // namespace fedint
