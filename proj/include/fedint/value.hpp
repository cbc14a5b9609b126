#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace fedint {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
struct Date {
  std::int32_t days = 0;

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Parses strict `YYYY-MM-DD`; returns nullopt on any deviation or invalid day.
  static std::optional<Date> parse(std::string_view text);

  void to_ymd(int& year, unsigned& month, unsigned& day) const;
  std::string to_string() const;

  auto operator<=>(const Date&) const = default;
};

/// Completed years between two dates (anniversary rule), order-insensitive.
std::int64_t whole_years_between(Date a, Date b);

struct Missing {
  bool operator==(const Missing&) const = default;
};

struct LabeledNull {
  std::uint64_t id = 0;
  bool operator==(const LabeledNull&) const = default;
};

enum class ColumnType { Int, Float, Str, Date };

std::string_view to_string(ColumnType type);
std::optional<ColumnType> column_type_from_string(std::string_view text);

/// A relational cell. `Missing` comes from source data; `LabeledNull` is
/// minted for existential variables during exchange.
class Value {
 public:
  using Storage = std::variant<std::int64_t, double, std::string, Date, Missing, LabeledNull>;

  Value() : v_(Missing{}) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(double d) : v_(d) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(Date d) : v_(d) {}
  Value(Missing m) : v_(m) {}
  Value(LabeledNull n) : v_(n) {}

  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_str() const { return std::holds_alternative<std::string>(v_); }
  bool is_date() const { return std::holds_alternative<Date>(v_); }
  bool is_missing() const { return std::holds_alternative<Missing>(v_); }
  bool is_labeled_null() const { return std::holds_alternative<LabeledNull>(v_); }
  bool is_null() const { return is_missing() || is_labeled_null(); }
  bool is_numeric() const { return is_int() || is_float(); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  const std::string& as_str() const { return std::get<std::string>(v_); }
  Date as_date() const { return std::get<Date>(v_); }
  std::uint64_t null_id() const { return std::get<LabeledNull>(v_).id; }
  /// Int or Float widened to double.
  double numeric() const { return is_int() ? static_cast<double>(as_int()) : as_float(); }

  const Storage& storage() const { return v_; }

  /// Representation equality: Missing is identical to Missing, nulls by id.
  /// Used for deduplication and structural comparisons.
  bool identical(const Value& other) const { return v_ == other.v_; }

  /// Total order over representations, for canonical sorting.
  std::strong_ordering order(const Value& other) const;

  /// Human-readable rendering; labeled nulls render as `_N<id>`.
  std::string to_string(std::string_view null_token = "") const;

 private:
  Storage v_;
};

/// Join/comparison equality: Missing equals nothing (including Missing);
/// labeled nulls equal only themselves; Int and Float compare numerically.
bool join_equal(const Value& a, const Value& b);

/// Ordering for `<`-style comparisons. nullopt when either side is null or
/// the types are not comparable.
std::optional<std::partial_ordering> compare_values(const Value& a, const Value& b);

bool value_matches_type(const Value& v, ColumnType type);

/// Issues strictly increasing labeled-null ids. Thread-safe; counters are
/// scoped to one materialization and ids from distinct counters may collide.
class NullCounter {
 public:
  explicit NullCounter(std::uint64_t start = 0) : next_(start) {}
  NullCounter(const NullCounter&) = delete;
  NullCounter& operator=(const NullCounter&) = delete;

  Value fresh() { return Value(LabeledNull{next_.fetch_add(1, std::memory_order_relaxed)}); }
  std::uint64_t issued_from(std::uint64_t start) const { return next_.load() - start; }
  std::uint64_t next() const { return next_.load(); }

 private:
  std::atomic<std::uint64_t> next_;
};

inline Value fresh_labeled_null(NullCounter& counter) { return counter.fresh(); }

}  // namespace fedint
