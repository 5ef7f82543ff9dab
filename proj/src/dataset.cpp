#include "toolreward/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "toolreward/errors.hpp"
#include "toolreward/io.hpp"
#include "toolreward/rng.hpp"

namespace toolreward {

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl" || name == "json-lines") return DatasetFormat::JsonLines;
  if (name == "json" || name == "json-array") return DatasetFormat::JsonArray;
  throw ValidationError("unknown dataset format '" + std::string(name) + "' (want jsonl or json)");
}

namespace {

std::optional<std::int64_t> as_int64(const JsonValue& v) {
  if (!v.is_number()) return std::nullopt;
  const Decimal& d = v.as_number();
  if (d.is_zero()) return 0;
  if (d.exponent() < 0 || d.exponent() > 18) return std::nullopt;
  const std::string text = (d.negative() ? "-" : "") + d.digits() + std::string(static_cast<std::size_t>(d.exponent()), '0');
  try {
    std::size_t used = 0;
    const long long value = std::stoll(text, &used);
    if (used != text.size()) return std::nullopt;
    return value;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// A field that is either in-line JSON or a string holding JSON text.
JsonValue decode_embedded(const JsonValue& field, std::string_view name) {
  if (!field.is_string()) return field;
  JsonParseError error;
  auto parsed = try_parse_json(field.as_string(), &error);
  if (!parsed) {
    throw ValidationError("field '" + std::string(name) + "' holds invalid JSON at offset " +
                          std::to_string(error.offset));
  }
  return std::move(parsed->value);
}

const JsonValue& require(const JsonValue& row, std::string_view key) {
  const JsonValue* v = row.find(key);
  if (!v) throw ValidationError("missing required field '" + std::string(key) + "'");
  return *v;
}

DatasetRecord decode_record(const JsonValue& row) {
  if (!row.is_object()) throw ValidationError("record is not a JSON object");
  DatasetRecord rec;
  auto id = as_int64(require(row, "id"));
  if (!id) throw ValidationError("field 'id' is not an integer");
  rec.id = *id;
  const JsonValue& query = require(row, "query");
  if (!query.is_string()) throw ValidationError("field 'query' is not a string");
  rec.query = query.as_string();
  try {
    rec.answers = call_list_from_json(decode_embedded(require(row, "answers"), "answers"));
    rec.tools = tools_from_json(decode_embedded(require(row, "tools"), "tools"));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& ex) {
    throw ValidationError(ex.what());
  }
  return rec;
}

std::string raw_id(const JsonValue& row) {
  const JsonValue* id = row.find("id");
  return id ? serialize(*id) : std::string{};
}

void accept(LoadResult& result, std::set<std::int64_t>& seen, const JsonValue& row, std::size_t line) {
  try {
    DatasetRecord rec = decode_record(row);
    if (!seen.insert(rec.id).second) throw ValidationError("duplicate id " + std::to_string(rec.id));
    result.records.push_back(std::move(rec));
  } catch (const ValidationError& ex) {
    result.malformed.push_back(MalformedRecord{line, raw_id(row), ex.what()});
  }
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    ++line_no;
    const std::string_view line = text.substr(pos, nl - pos);
    if (!is_blank(line)) fn(line, line_no);
    pos = nl + 1;
  }
}

}  // namespace

LoadResult parse_dataset(std::string_view text, DatasetFormat format) {
  LoadResult result;
  std::set<std::int64_t> seen;
  if (format == DatasetFormat::JsonLines) {
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
      JsonParseError error;
      auto parsed = try_parse_json(line, &error);
      if (!parsed) {
        result.malformed.push_back(
            MalformedRecord{line_no, {}, "invalid JSON at offset " + std::to_string(error.offset)});
        return;
      }
      accept(result, seen, parsed->value, line_no);
    });
    return result;
  }
  if (is_blank(text)) return result;
  JsonParseError error;
  auto parsed = try_parse_json(text, &error);
  if (!parsed) throw ValidationError("dataset is not valid JSON (offset " + std::to_string(error.offset) + ")");
  if (!parsed->value.is_array()) throw ValidationError("json-array dataset must be a top-level array");
  const auto& rows = parsed->value.as_array();
  for (std::size_t i = 0; i < rows.size(); ++i) accept(result, seen, rows[i], i);
  return result;
}

LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return parse_dataset(read_text_file(path), format);
}

void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records, bool stringify) {
  for (const auto& rec : records) {
    JsonValue answers = to_json(rec.answers);
    JsonValue tools = to_json(rec.tools);
    if (stringify) {
      answers = JsonValue(serialize(answers));
      tools = JsonValue(serialize(tools));
    }
    JsonValue row = JsonValue::Object{{"id", JsonValue(rec.id)},
                                      {"query", JsonValue(rec.query)},
                                      {"answers", std::move(answers)},
                                      {"tools", std::move(tools)}};
    out << serialize(row) << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records, bool stringify) {
  std::ostringstream buf;
  write_dataset(buf, records, stringify);
  write_text_file(path, buf.str());
}

std::map<std::int64_t, std::string> parse_completions(std::string_view text) {
  std::map<std::int64_t, std::string> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto where = "completions line " + std::to_string(line_no);
    auto parsed = try_parse_json(line);
    if (!parsed || !parsed->value.is_object()) throw ValidationError(where + ": not a JSON object");
    const JsonValue* id = parsed->value.find("id");
    const JsonValue* completion = parsed->value.find("completion");
    auto id_value = id ? as_int64(*id) : std::nullopt;
    if (!id_value) throw ValidationError(where + ": missing integer 'id'");
    if (!completion || !completion->is_string()) throw ValidationError(where + ": missing string 'completion'");
    out[*id_value] = completion->as_string();
  });
  return out;
}

std::map<std::int64_t, std::string> load_completions(const std::filesystem::path& path) {
  return parse_completions(read_text_file(path));
}

void write_completions(std::ostream& out, const std::vector<std::pair<std::int64_t, std::string>>& rows) {
  for (const auto& [id, text] : rows) {
    out << serialize(JsonValue::Object{{"id", JsonValue(id)}, {"completion", JsonValue(text)}}) << '\n';
  }
}

Split split_sample(const std::vector<DatasetRecord>& records, std::size_t train_n, std::size_t test_n,
                   std::uint64_t seed) {
  if (train_n > records.size() || test_n > records.size() - train_n) {
    throw ValidationError("split oversubscribed: train " + std::to_string(train_n) + " + test " +
                          std::to_string(test_n) + " > " + std::to_string(records.size()) + " records");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  Split split;
  split.train.reserve(train_n);
  split.test.reserve(test_n);
  for (std::size_t i = 0; i < train_n; ++i) split.train.push_back(records[order[i]]);
  for (std::size_t i = train_n; i < train_n + test_n; ++i) split.test.push_back(records[order[i]]);
  return split;
}

}  // namespace toolreward
