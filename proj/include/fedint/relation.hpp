#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedint/value.hpp"

namespace fedint {

struct Column {
  std::string name;
  ColumnType type = ColumnType::Str;
  bool operator==(const Column&) const = default;
};

class RelationSchema {
 public:
  RelationSchema() = default;
  /// Throws Error(TypeMismatch) on an empty name or duplicate column names.
  RelationSchema(std::string name, std::vector<Column> columns);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t arity() const { return columns_.size(); }
  std::optional<std::size_t> index_of(std::string_view column) const;

  bool operator==(const RelationSchema&) const = default;

 private:
  std::string name_;
  std::vector<Column> columns_;
};

using Tuple = std::vector<Value>;

bool tuples_identical(const Tuple& a, const Tuple& b);
/// Lexicographic total order over tuples using Value::order.
bool tuple_less(const Tuple& a, const Tuple& b);

class Relation {
 public:
  Relation() = default;
  explicit Relation(RelationSchema schema) : schema_(std::move(schema)) {}

  const RelationSchema& schema() const { return schema_; }
  const std::vector<Tuple>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  /// Appends after checking arity and per-column type soundness.
  void add(Tuple row);
  /// Appends unless an identical tuple is already present.
  bool add_unique(Tuple row);

  /// Row multiset equality (order-insensitive, representation equality).
  bool same_rows(const Relation& other) const;
  /// Copy with rows in canonical order.
  Relation sorted() const;

  bool operator==(const Relation& other) const;

 private:
  RelationSchema schema_;
  std::vector<Tuple> rows_;
};

struct CsvOptions {
  std::string null_token;
  /// Reads `_N<id>` cells as labeled nulls (materialized-instance exports).
  bool parse_labeled_nulls = false;
};

/// RFC-4180-ish reader. The header row must match the schema's column names
/// in order. Cells equal to the null token become Missing.
Relation load_csv(const std::filesystem::path& path, const RelationSchema& schema,
                  const CsvOptions& options = {});
Relation parse_csv(std::string_view text, const RelationSchema& schema,
                   const CsvOptions& options = {});

void write_csv(const std::filesystem::path& path, const Relation& relation,
               std::string_view null_token = "");
std::string format_csv(const Relation& relation, std::string_view null_token = "");

struct CsvField {
  std::string text;
  /// Quoted fields never match the null token.
  bool quoted = false;
};

/// Splits CSV text into records of raw fields; exposed for the table loaders.
std::vector<std::vector<CsvField>> split_csv_records(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fedint
