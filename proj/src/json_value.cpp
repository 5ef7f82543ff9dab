#include "toolreward/json_value.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include <json.hpp>

namespace toolreward {

namespace {

// Exponents beyond this magnitude saturate; no double or realistic argument
// value gets anywhere near it.
constexpr std::int64_t kExponentLimit = 1'000'000'000'000'000LL;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

Decimal::Decimal(bool negative, std::string digits, std::int64_t exponent) {
  auto first = digits.find_first_not_of('0');
  if (first == std::string::npos) {
    return;  // zero
  }
  auto last = digits.find_last_not_of('0');
  exponent += static_cast<std::int64_t>(digits.size() - 1 - last);
  digits_ = digits.substr(first, last - first + 1);
  exponent_ = std::clamp(exponent, -kExponentLimit, kExponentLimit);
  negative_ = negative;
}

Decimal Decimal::from_int(std::int64_t value) {
  if (value < 0) {
    // Negate in unsigned arithmetic so INT64_MIN is representable.
    auto magnitude = static_cast<std::uint64_t>(0) - static_cast<std::uint64_t>(value);
    return Decimal(true, std::to_string(magnitude), 0);
  }
  return Decimal(false, std::to_string(value), 0);
}

Decimal Decimal::from_uint(std::uint64_t value) { return Decimal(false, std::to_string(value), 0); }

Decimal Decimal::from_lexeme(std::string_view lexeme) {
  std::size_t i = 0;
  const std::size_t n = lexeme.size();
  bool negative = false;
  if (i < n && lexeme[i] == '-') {
    negative = true;
    ++i;
  }
  std::string digits;
  const std::size_t int_begin = i;
  while (i < n && is_digit(lexeme[i])) digits.push_back(lexeme[i++]);
  if (i == int_begin) throw std::invalid_argument("number lexeme has no integer part");
  std::int64_t exponent = 0;
  if (i < n && lexeme[i] == '.') {
    ++i;
    const std::size_t frac_begin = i;
    while (i < n && is_digit(lexeme[i])) digits.push_back(lexeme[i++]);
    if (i == frac_begin) throw std::invalid_argument("number lexeme has empty fraction");
    exponent -= static_cast<std::int64_t>(i - frac_begin);
  }
  if (i < n && (lexeme[i] == 'e' || lexeme[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < n && (lexeme[i] == '+' || lexeme[i] == '-')) exp_negative = lexeme[i++] == '-';
    const std::size_t exp_begin = i;
    std::int64_t e = 0;
    while (i < n && is_digit(lexeme[i])) {
      if (e < kExponentLimit) e = e * 10 + (lexeme[i] - '0');
      ++i;
    }
    if (i == exp_begin) throw std::invalid_argument("number lexeme has empty exponent");
    exponent += exp_negative ? -e : e;
  }
  if (i != n) throw std::invalid_argument("trailing characters in number lexeme");
  return Decimal(negative, std::move(digits), exponent);
}

std::string Decimal::to_string() const {
  if (is_zero()) return "0";
  std::string out = negative_ ? "-" : "";
  const auto len = static_cast<std::int64_t>(digits_.size());
  const std::int64_t e = exponent_;
  if (e >= 0 && len + e <= 21) {
    out += digits_;
    out.append(static_cast<std::size_t>(e), '0');
  } else if (e < 0 && -e < len) {
    out += digits_.substr(0, static_cast<std::size_t>(len + e));
    out += '.';
    out += digits_.substr(static_cast<std::size_t>(len + e));
  } else if (e < 0 && -e - len < 6) {
    out += "0.";
    out.append(static_cast<std::size_t>(-e - len), '0');
    out += digits_;
  } else {
    out += digits_[0];
    if (len > 1) {
      out += '.';
      out += digits_.substr(1);
    }
    out += 'e';
    out += std::to_string(e + len - 1);
  }
  return out;
}

double Decimal::to_double() const { return std::strtod(to_string().c_str(), nullptr); }

JsonValue JsonValue::number(std::string_view lexeme) { return JsonValue(Decimal::from_lexeme(lexeme)); }

const JsonValue* JsonValue::find(std::string_view key) const {
  if (!is_object()) return nullptr;
  for (const auto& [k, v] : as_object()) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

bool object_contains(const JsonValue::Object& haystack, const JsonValue::Object& needles) {
  for (const auto& [key, value] : needles) {
    auto it = std::find_if(haystack.begin(), haystack.end(), [&](const auto& m) { return m.first == key; });
    if (it == haystack.end() || !canonical_equal(it->second, value)) return false;
  }
  return true;
}

}  // namespace

bool canonical_equal(const JsonValue& a, const JsonValue& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case JsonValue::Kind::Null:
      return true;
    case JsonValue::Kind::Boolean:
      return a.as_bool() == b.as_bool();
    case JsonValue::Kind::Number:
      return a.as_number() == b.as_number();
    case JsonValue::Kind::String:
      return a.as_string() == b.as_string();
    case JsonValue::Kind::Array: {
      const auto& x = a.as_array();
      const auto& y = b.as_array();
      return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                        [](const JsonValue& l, const JsonValue& r) { return canonical_equal(l, r); });
    }
    case JsonValue::Kind::Object: {
      const auto& x = a.as_object();
      const auto& y = b.as_object();
      return x.size() == y.size() && object_contains(y, x) && object_contains(x, y);
    }
  }
  return false;
}

bool operator==(const JsonValue& a, const JsonValue& b) { return canonical_equal(a, b); }

namespace {

// SAX consumer turning nlohmann's event stream into JsonValue with exact
// decimal numbers (float lexemes are kept verbatim).
class ValueBuilder {
 public:
  using json = nlohmann::json;

  bool null() { return put(JsonValue(nullptr)); }
  bool boolean(bool b) { return put(JsonValue(b)); }
  bool number_integer(json::number_integer_t v) { return put(JsonValue(Decimal::from_int(v))); }
  bool number_unsigned(json::number_unsigned_t v) { return put(JsonValue(Decimal::from_uint(v))); }
  bool number_float(json::number_float_t, const json::string_t& lexeme) {
    return put(JsonValue(Decimal::from_lexeme(lexeme)));
  }
  bool string(json::string_t& s) { return put(JsonValue(std::move(s))); }
  bool binary(json::binary_t&) { return false; }

  bool start_object(std::size_t) { return open(JsonValue::Object{}); }
  bool key(json::string_t& k) {
    frames_.back().pending_key = std::move(k);
    return true;
  }
  bool end_object() { return close(); }
  bool start_array(std::size_t) { return open(JsonValue::Array{}); }
  bool end_array() { return close(); }

  bool parse_error(std::size_t position, const std::string&, const nlohmann::detail::exception& ex) {
    error_ = JsonParseError{position, ex.what()};
    return false;
  }

  std::optional<JsonValue>& root() { return root_; }
  const std::optional<JsonParseError>& error() const { return error_; }
  bool duplicate_keys() const { return duplicate_keys_; }

 private:
  struct Frame {
    JsonValue container;
    std::string pending_key;
  };

  bool open(JsonValue container) {
    if (frames_.size() >= kMaxJsonDepth) {
      error_ = JsonParseError{0, "nesting deeper than " + std::to_string(kMaxJsonDepth)};
      return false;
    }
    frames_.push_back(Frame{std::move(container), {}});
    return true;
  }

  bool close() {
    JsonValue done = std::move(frames_.back().container);
    frames_.pop_back();
    return put(std::move(done));
  }

  bool put(JsonValue v) {
    if (frames_.empty()) {
      root_ = std::move(v);
      return true;
    }
    auto& top = frames_.back();
    if (top.container.is_array()) {
      top.container.as_array().push_back(std::move(v));
      return true;
    }
    auto& members = top.container.as_object();
    auto it = std::find_if(members.begin(), members.end(),
                           [&](const auto& m) { return m.first == top.pending_key; });
    if (it != members.end()) {
      duplicate_keys_ = true;
      it->second = std::move(v);
    } else {
      members.emplace_back(std::move(top.pending_key), std::move(v));
    }
    return true;
  }

  std::vector<Frame> frames_;
  std::optional<JsonValue> root_;
  std::optional<JsonParseError> error_;
  bool duplicate_keys_ = false;
};

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          static constexpr char kHex[] = "0123456789abcdef";
          out += "\\u00";
          out += kHex[c >> 4];
          out += kHex[c & 0xF];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void write_value(std::string& out, const JsonValue& v) {
  switch (v.kind()) {
    case JsonValue::Kind::Null: out += "null"; break;
    case JsonValue::Kind::Boolean: out += v.as_bool() ? "true" : "false"; break;
    case JsonValue::Kind::Number: out += v.as_number().to_string(); break;
    case JsonValue::Kind::String: append_escaped(out, v.as_string()); break;
    case JsonValue::Kind::Array: {
      out += '[';
      bool first = true;
      for (const auto& item : v.as_array()) {
        if (!first) out += ", ";
        first = false;
        write_value(out, item);
      }
      out += ']';
      break;
    }
    case JsonValue::Kind::Object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.as_object()) {
        if (!first) out += ", ";
        first = false;
        append_escaped(out, key);
        out += ": ";
        write_value(out, item);
      }
      out += '}';
      break;
    }
  }
}

}  // namespace

std::optional<ParsedJson> try_parse_json(std::string_view text, JsonParseError* error) {
  ValueBuilder builder;
  bool ok = false;
  try {
    ok = nlohmann::json::sax_parse(text.begin(), text.end(), &builder, nlohmann::json::input_format_t::json,
                                   /*strict=*/true);
  } catch (const std::exception& ex) {
    // from_lexeme only throws on lexemes nlohmann already rejected; keep the
    // classification total regardless.
    if (error) *error = JsonParseError{0, ex.what()};
    return std::nullopt;
  }
  if (!ok || !builder.root()) {
    if (error) *error = builder.error().value_or(JsonParseError{text.size(), "incomplete JSON value"});
    return std::nullopt;
  }
  return ParsedJson{std::move(*builder.root()), builder.duplicate_keys()};
}

JsonValue parse_json(std::string_view text) {
  JsonParseError error;
  auto parsed = try_parse_json(text, &error);
  if (!parsed) throw JsonSyntaxError(std::move(error));
  return std::move(parsed->value);
}

std::string serialize(const JsonValue& value) {
  std::string out;
  write_value(out, value);
  return out;
}

}  // namespace toolreward
