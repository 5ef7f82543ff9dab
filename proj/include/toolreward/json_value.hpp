#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace toolreward {

/// Exact decimal number: (-1)^negative * digits * 10^exponent.
///
/// Normalized on construction: `digits` has no leading or trailing zeros and
/// zero is represented by empty digits with exponent 0 and positive sign, so
/// 7, 7.0, 70e-1 and 0.7e1 all compare equal with the defaulted operator==.
class Decimal {
 public:
  Decimal() = default;

  static Decimal from_int(std::int64_t value);
  static Decimal from_uint(std::uint64_t value);
  /// Parses a JSON number lexeme. Throws std::invalid_argument on bad syntax.
  static Decimal from_lexeme(std::string_view lexeme);

  bool is_zero() const { return digits_.empty(); }
  bool negative() const { return negative_; }
  const std::string& digits() const { return digits_; }
  std::int64_t exponent() const { return exponent_; }

  /// Shortest JSON lexeme that parses back to this value.
  std::string to_string() const;
  double to_double() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;

 private:
  Decimal(bool negative, std::string digits, std::int64_t exponent);

  bool negative_ = false;
  std::string digits_;
  std::int64_t exponent_ = 0;
};

class JsonValue {
 public:
  using Array = std::vector<JsonValue>;
  using Member = std::pair<std::string, JsonValue>;
  /// Insertion-ordered; keys are unique, order is ignored by equality.
  using Object = std::vector<Member>;

  enum class Kind { Null, Boolean, Number, String, Array, Object };

  JsonValue() = default;
  JsonValue(std::nullptr_t) {}
  JsonValue(bool b) : data_(b) {}
  JsonValue(Decimal d) : data_(std::move(d)) {}
  JsonValue(int v) : data_(Decimal::from_int(v)) {}
  JsonValue(std::int64_t v) : data_(Decimal::from_int(v)) {}
  JsonValue(std::string s) : data_(std::move(s)) {}
  JsonValue(const char* s) : data_(std::string(s)) {}
  JsonValue(Array a) : data_(std::move(a)) {}
  JsonValue(Object o) : data_(std::move(o)) {}

  /// Number from a JSON lexeme, e.g. JsonValue::number("0.30").
  static JsonValue number(std::string_view lexeme);

  Kind kind() const { return static_cast<Kind>(data_.index()); }
  bool is_null() const { return kind() == Kind::Null; }
  bool is_bool() const { return kind() == Kind::Boolean; }
  bool is_number() const { return kind() == Kind::Number; }
  bool is_string() const { return kind() == Kind::String; }
  bool is_array() const { return kind() == Kind::Array; }
  bool is_object() const { return kind() == Kind::Object; }

  bool as_bool() const { return std::get<bool>(data_); }
  const Decimal& as_number() const { return std::get<Decimal>(data_); }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const Array& as_array() const { return std::get<Array>(data_); }
  const Object& as_object() const { return std::get<Object>(data_); }
  Array& as_array() { return std::get<Array>(data_); }
  Object& as_object() { return std::get<Object>(data_); }

  /// Member lookup on objects; nullptr when absent or not an object.
  const JsonValue* find(std::string_view key) const;

  friend bool operator==(const JsonValue& a, const JsonValue& b);

 private:
  std::variant<std::nullptr_t, bool, Decimal, std::string, Array, Object> data_;
};

/// Structural equality: numbers by value, strings case-sensitive, arrays
/// ordered, objects unordered.
bool canonical_equal(const JsonValue& a, const JsonValue& b);

struct JsonParseError {
  std::size_t offset = 0;
  std::string message;
};

class JsonSyntaxError : public std::runtime_error {
 public:
  explicit JsonSyntaxError(JsonParseError e)
      : std::runtime_error("JSON syntax error at offset " + std::to_string(e.offset) + ": " + e.message),
        error_(std::move(e)) {}
  std::size_t offset() const { return error_.offset; }

 private:
  JsonParseError error_;
};

struct ParsedJson {
  JsonValue value;
  /// Set when some object repeated a key; the last occurrence wins.
  bool has_duplicate_keys = false;
};

/// Maximum container nesting accepted by the parser.
inline constexpr std::size_t kMaxJsonDepth = 512;

/// Strict RFC 8259 parse of exactly one value, surrounding JSON whitespace
/// allowed. Returns nullopt on failure and fills `error` when given.
std::optional<ParsedJson> try_parse_json(std::string_view text, JsonParseError* error = nullptr);

/// Throwing variant of try_parse_json.
JsonValue parse_json(std::string_view text);

/// Compact serialization in the `{"k": v, "k2": [1, 2]}` style.
std::string serialize(const JsonValue& value);

}  // namespace toolreward
