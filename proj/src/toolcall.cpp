#include "toolreward/toolcall.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "toolreward/io.hpp"

namespace toolreward {

const JsonValue* ToolCall::argument(std::string_view key) const {
  for (const auto& [k, v] : arguments) {
    if (k == key) return &v;
  }
  return nullptr;
}

bool operator==(const ToolCall& a, const ToolCall& b) {
  return a.name == b.name && canonical_equal(JsonValue(a.arguments), JsonValue(b.arguments));
}

namespace {

constexpr std::array<std::string_view, 5> kOutcomeNames = {"calls", "extraneous_text", "invalid_json", "empty",
                                                          "non_conforming"};


std::string_view kind_label(JsonValue::Kind k) {
  switch (k) {
    case JsonValue::Kind::Null: return "null";
    case JsonValue::Kind::Boolean: return "boolean";
    case JsonValue::Kind::Number: return "number";
    case JsonValue::Kind::String: return "string";
    case JsonValue::Kind::Array: return "array";
    case JsonValue::Kind::Object: return "object";
  }
  return "unknown";
}

// Position of the bracket closing the container opened at `open`, skipping
// string contents. npos when the text ends first.
std::size_t matching_close(std::string_view s, std::size_t open) {
  std::size_t depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

// Does `s` contain a JSON object/array that begins at bracket depth zero?
bool contains_framed_payload(std::string_view s) {
  std::size_t depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      if (depth == 0) {
        const std::size_t close = matching_close(s, i);
        if (close == std::string_view::npos) return false;
        if (try_parse_json(s.substr(i, close - i + 1))) return true;
      }
      ++depth;
    } else if ((c == '}' || c == ']') && depth > 0) {
      --depth;
    }
  }
  return false;
}

ParseOutcome classify_value(const ParsedJson& parsed) {
  if (parsed.has_duplicate_keys) return NonConforming{"duplicate object key"};
  const JsonValue& v = parsed.value;
  std::string reason;
  if (v.is_object()) {
    auto call = to_tool_call(v, &reason);
    if (!call) return NonConforming{std::move(reason)};
    return CallList{{std::move(*call)}};
  }
  if (!v.is_array()) return NonConforming{"top-level value is a " + std::string(kind_label(v.kind()))};
  CallList out;
  out.calls.reserve(v.as_array().size());
  for (std::size_t i = 0; i < v.as_array().size(); ++i) {
    auto call = to_tool_call(v.as_array()[i], &reason);
    if (!call) return NonConforming{"element " + std::to_string(i) + ": " + reason};
    out.calls.push_back(std::move(*call));
  }
  return out;
}

}  // namespace

std::string_view outcome_name(OutcomeKind kind) { return kOutcomeNames.at(static_cast<std::size_t>(kind)); }

std::optional<OutcomeKind> outcome_from_name(std::string_view name) {
  auto it = std::find(kOutcomeNames.begin(), kOutcomeNames.end(), name);
  if (it == kOutcomeNames.end()) return std::nullopt;
  return static_cast<OutcomeKind>(it - kOutcomeNames.begin());
}

std::optional<ToolCall> to_tool_call(const JsonValue& value, std::string* reason) {
  auto fail = [&](std::string why) -> std::optional<ToolCall> {
    if (reason) *reason = std::move(why);
    return std::nullopt;
  };
  if (!value.is_object()) return fail("call is a " + std::string(kind_label(value.kind())) + ", not an object");
  const auto& members = value.as_object();
  const JsonValue* name = value.find("name");
  const JsonValue* args = value.find("arguments");
  if (members.size() != 2 || !name || !args) return fail("call keys must be exactly {name, arguments}");
  if (!name->is_string() || name->as_string().empty()) return fail("name must be a non-empty string");
  if (!args->is_object()) return fail("arguments must be an object");
  return ToolCall{name->as_string(), args->as_object()};
}

ParseOutcome parse_completion(std::string_view raw) {
  const std::string_view text = trim(raw);
  if (text.empty()) return EmptyOutput{};
  if (auto parsed = try_parse_json(text)) return classify_value(*parsed);
  if (contains_framed_payload(text)) return ExtraneousText{};
  return InvalidJson{};
}

JsonValue to_json(const ToolCall& call) {
  return JsonValue::Object{{"name", JsonValue(call.name)}, {"arguments", JsonValue(call.arguments)}};
}

JsonValue to_json(const std::vector<ToolCall>& calls) {
  JsonValue::Array out;
  out.reserve(calls.size());
  for (const auto& c : calls) out.push_back(to_json(c));
  return out;
}

std::string serialize_calls(const std::vector<ToolCall>& calls) { return serialize(to_json(calls)); }

std::vector<ToolCall> call_list_from_json(const JsonValue& value) {
  auto outcome = classify_value(ParsedJson{value, false});
  if (auto* list = std::get_if<CallList>(&outcome)) return std::move(list->calls);
  throw std::invalid_argument("expected answer is not a call list: " + std::get<NonConforming>(outcome).reason);
}

std::vector<ToolCall> parse_call_list(std::string_view json_text) {
  JsonParseError error;
  auto parsed = try_parse_json(trim(json_text), &error);
  if (!parsed) throw JsonSyntaxError(std::move(error));
  if (parsed->has_duplicate_keys) throw std::invalid_argument("expected answer has a duplicate object key");
  return call_list_from_json(parsed->value);
}

namespace {

std::string string_field(const JsonValue& obj, std::string_view key) {
  const JsonValue* v = obj.find(key);
  return v && v->is_string() ? v->as_string() : std::string{};
}

}  // namespace

std::vector<ToolSpec> tools_from_json(const JsonValue& value) {
  if (!value.is_array()) throw std::invalid_argument("tools must be an array");
  std::vector<ToolSpec> tools;
  for (const auto& item : value.as_array()) {
    if (!item.is_object()) throw std::invalid_argument("tool entry must be an object");
    ToolSpec spec;
    spec.name = string_field(item, "name");
    if (spec.name.empty()) throw std::invalid_argument("tool entry lacks a name");
    spec.description = string_field(item, "description");
    const JsonValue* params = item.find("parameters");
    if (params && params->is_object()) {
      const JsonValue* props = params->find("properties");
      const bool schema_style = props && props->is_object();
      const JsonValue* required_list = schema_style ? params->find("required") : nullptr;
      for (const auto& [pname, pval] : schema_style ? props->as_object() : params->as_object()) {
        ParamSpec p;
        p.name = pname;
        p.type = string_field(pval, "type");
        p.description = string_field(pval, "description");
        if (schema_style) {
          p.required = false;
          if (required_list && required_list->is_array()) {
            for (const auto& r : required_list->as_array()) {
              if (r.is_string() && r.as_string() == pname) p.required = true;
            }
          }
        } else if (const JsonValue* req = pval.find("required"); req && req->is_bool()) {
          p.required = req->as_bool();
        } else {
          p.required = p.type.find("optional") == std::string::npos;
        }
        spec.parameters.push_back(std::move(p));
      }
    }
    tools.push_back(std::move(spec));
  }
  return tools;
}

JsonValue to_json(const std::vector<ToolSpec>& tools) {
  JsonValue::Array out;
  for (const auto& t : tools) {
    JsonValue::Object params;
    for (const auto& p : t.parameters) {
      JsonValue::Object entry{{"description", JsonValue(p.description)}, {"type", JsonValue(p.type)}};
      const bool implied = p.type.find("optional") == std::string::npos;
      if (implied != p.required) entry.emplace_back("required", JsonValue(p.required));
      params.emplace_back(p.name, JsonValue(std::move(entry)));
    }
    out.push_back(JsonValue::Object{{"name", JsonValue(t.name)},
                                    {"description", JsonValue(t.description)},
                                    {"parameters", JsonValue(std::move(params))}});
  }
  return out;
}

}  // namespace toolreward
