#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolreward/json_value.hpp"

namespace toolreward {

/// One function invocation. `arguments` keeps insertion order for
/// serialization; comparison ignores it.
struct ToolCall {
  std::string name;
  JsonValue::Object arguments;

  const JsonValue* argument(std::string_view key) const;

  friend bool operator==(const ToolCall& a, const ToolCall& b);
};

struct ParamSpec {
  std::string name;
  std::string type;  // free-form tag as the catalog spells it, e.g. "str, optional"
  bool required = true;
  std::string description;
};

/// Catalog entry for an available tool. Carried for dataset fidelity; the
/// reward does not consult it.
struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ParamSpec> parameters;
};

// ParseOutcome variants.
struct CallList {
  std::vector<ToolCall> calls;
};
struct ExtraneousText {};
struct InvalidJson {};
struct EmptyOutput {};
struct NonConforming {
  std::string reason;
};

using ParseOutcome = std::variant<CallList, ExtraneousText, InvalidJson, EmptyOutput, NonConforming>;

/// Index-aligned with ParseOutcome alternatives.
enum class OutcomeKind { Calls, ExtraneousText, InvalidJson, Empty, NonConforming };

inline OutcomeKind kind_of(const ParseOutcome& o) { return static_cast<OutcomeKind>(o.index()); }

/// Stable snake_case tag used in reports: "calls", "extraneous_text", ...
std::string_view outcome_name(OutcomeKind kind);
std::optional<OutcomeKind> outcome_from_name(std::string_view name);

/// True for outcomes whose whole trimmed text is one JSON value.
inline bool is_syntactically_valid(OutcomeKind k) { return k == OutcomeKind::Calls || k == OutcomeKind::NonConforming; }

/// Classifies a raw model completion.
///
/// Leading and trailing whitespace is ignored. The remainder must be exactly
/// one JSON value: an array of call objects, or a single call object (which
/// normalizes to a one-element list). A call object has exactly the keys
/// "name" (non-empty string) and "arguments" (object).
///
/// When the whole text is not JSON but contains a JSON object or array that
/// starts outside any other bracket, the completion is ExtraneousText (e.g.
/// prose around a call, markdown fences, two concatenated payloads).
/// Anything else that fails to parse is InvalidJson. Never throws.
ParseOutcome parse_completion(std::string_view raw);

/// Converts a parsed JSON value into a call if it conforms; otherwise returns
/// nullopt and, when given, writes the reason.
std::optional<ToolCall> to_tool_call(const JsonValue& value, std::string* reason = nullptr);

JsonValue to_json(const ToolCall& call);
JsonValue to_json(const std::vector<ToolCall>& calls);

/// `[{"name": "f", "arguments": {...}}, ...]`
std::string serialize_calls(const std::vector<ToolCall>& calls);

/// Decodes an expected-answer list (array of call objects, or one object).
/// Throws JsonSyntaxError (carrying the byte offset) on malformed JSON and
/// std::invalid_argument on a non-conforming payload.
std::vector<ToolCall> parse_call_list(std::string_view json_text);
std::vector<ToolCall> call_list_from_json(const JsonValue& value);

/// Accepts the flat catalog shape ({"name": {"type", "description"}}) and the
/// JSON-schema shape ({"type": "object", "properties": ..., "required": [...]}).
std::vector<ToolSpec> tools_from_json(const JsonValue& value);
JsonValue to_json(const std::vector<ToolSpec>& tools);

}  // namespace toolreward
