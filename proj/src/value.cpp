#include "fedint/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "fedint/error.hpp"

namespace fedint {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::MissingNormalizationEntry: return "MissingNormalizationEntry";
    case ErrorCode::ImputerNotFitted: return "ImputerNotFitted";
    case ErrorCode::UnknownRelation: return "UnknownRelation";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyStats: return "EmptyStats";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::ResidualNull: return "ResidualNull";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::EmptyEntrySet: return "EmptyEntrySet";
    case ErrorCode::IncompatibleShapes: return "IncompatibleShapes";
    case ErrorCode::ZeroTotalContribution: return "ZeroTotalContribution";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::LearnerFailure: return "LearnerFailure";
    case ErrorCode::MissingSubmission: return "MissingSubmission";
    case ErrorCode::OverflowRisk: return "OverflowRisk";
    case ErrorCode::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

// Civil-calendar conversions after H. Hinnant's public-domain algorithms.
Date Date::from_ymd(int year, unsigned month, unsigned day) {
  year -= month <= 2;
  const int era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return Date{static_cast<std::int32_t>(era * 146097 + static_cast<int>(doe) - 719468)};
}

void Date::to_ymd(int& year, unsigned& month, unsigned& day) const {
  const int z = days + 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp < 10 ? mp + 3 : mp - 9;
  year = static_cast<int>(yoe) + era * 400 + (month <= 2);
}

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t from, std::size_t len, int& out) {
    const char* first = text.data() + from;
    const char* last = first + len;
    for (const char* p = first; p != last; ++p)
      if (*p < '0' || *p > '9') return false;
    return std::from_chars(first, last, out).ec == std::errc{};
  };
  int y = 0, m = 0, d = 0;
  if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  Date out = from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
  int ry;
  unsigned rm, rd;
  out.to_ymd(ry, rm, rd);
  if (ry != y || rm != static_cast<unsigned>(m) || rd != static_cast<unsigned>(d))
    return std::nullopt;
  return out;
}

std::string Date::to_string() const {
  int y;
  unsigned m, d;
  to_ymd(y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::int64_t whole_years_between(Date a, Date b) {
  if (b < a) std::swap(a, b);
  int ya, yb;
  unsigned ma, mb, da, db;
  a.to_ymd(ya, ma, da);
  b.to_ymd(yb, mb, db);
  std::int64_t years = yb - ya;
  if (mb < ma || (mb == ma && db < da)) --years;
  return years;
}

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Int: return "int";
    case ColumnType::Float: return "float";
    case ColumnType::Str: return "str";
    case ColumnType::Date: return "date";
  }
  return "?";
}

std::optional<ColumnType> column_type_from_string(std::string_view text) {
  if (text == "int") return ColumnType::Int;
  if (text == "float") return ColumnType::Float;
  if (text == "str") return ColumnType::Str;
  if (text == "date") return ColumnType::Date;
  return std::nullopt;
}

std::strong_ordering Value::order(const Value& other) const {
  if (v_.index() != other.v_.index()) return v_.index() <=> other.v_.index();
  return std::visit(
      [&](const auto& lhs) -> std::strong_ordering {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(other.v_);
        if constexpr (std::is_same_v<T, double>) {
          // Bitwise-stable order for doubles, NaN included.
          if (lhs < rhs) return std::strong_ordering::less;
          if (rhs < lhs) return std::strong_ordering::greater;
          return std::strong_ordering::equal;
        } else if constexpr (std::is_same_v<T, Missing>) {
          return std::strong_ordering::equal;
        } else if constexpr (std::is_same_v<T, LabeledNull>) {
          return lhs.id <=> rhs.id;
        } else if constexpr (std::is_same_v<T, std::string>) {
          return lhs.compare(rhs) <=> 0;
        } else {
          return lhs <=> rhs;
        }
      },
      v_);
}

namespace {

std::string format_double(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, res.ptr);
  // Keep floats visibly floats so a reload under a float column is unambiguous.
  if (std::isfinite(d) && s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string Value::to_string(std::string_view null_token) const {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, Date>) return v.to_string();
        else if constexpr (std::is_same_v<T, Missing>) return std::string(null_token);
        else return "_N" + std::to_string(v.id);
      },
      v_);
}

bool join_equal(const Value& a, const Value& b) {
  if (a.is_missing() || b.is_missing()) return false;
  if (a.is_labeled_null() || b.is_labeled_null())
    return a.is_labeled_null() && b.is_labeled_null() && a.null_id() == b.null_id();
  if (a.is_numeric() && b.is_numeric()) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    return a.numeric() == b.numeric();
  }
  return a.identical(b);
}

std::optional<std::partial_ordering> compare_values(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  if (a.is_numeric() && b.is_numeric()) {
    if (a.is_int() && b.is_int()) return a.as_int() <=> b.as_int();
    return a.numeric() <=> b.numeric();
  }
  if (a.is_str() && b.is_str()) return a.as_str().compare(b.as_str()) <=> 0;
  if (a.is_date() && b.is_date()) return a.as_date() <=> b.as_date();
  return std::nullopt;
}

bool value_matches_type(const Value& v, ColumnType type) {
  if (v.is_null()) return true;
  switch (type) {
    case ColumnType::Int: return v.is_int();
    case ColumnType::Float: return v.is_float();
    case ColumnType::Str: return v.is_str();
    case ColumnType::Date: return v.is_date();
  }
  return false;
}

}  // namespace fedint
