#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "toolreward/toolcall.hpp"

namespace toolreward {

/// One xLAM-style row.
struct DatasetRecord {
  std::int64_t id = 0;
  std::string query;
  std::vector<ToolCall> answers;
  std::vector<ToolSpec> tools;
};

enum class DatasetFormat { JsonLines, JsonArray };

/// "jsonl" / "json-lines" or "json" / "json-array"; throws ValidationError otherwise.
DatasetFormat parse_dataset_format(std::string_view name);

struct MalformedRecord {
  std::size_t line = 0;  // 1-based line (json-lines) or element index (array)
  std::string id;        // raw id if one could be read
  std::string message;
};

struct LoadResult {
  std::vector<DatasetRecord> records;
  std::vector<MalformedRecord> malformed;
};

/// Parses records. `answers` and `tools` may be in-line JSON or JSON-encoded
/// strings. Bad rows (missing field, bad JSON, duplicate id) are collected in
/// `malformed` and skipped. Throws IoError when the file cannot be read and
/// ValidationError when a json-array file is not a JSON array.
LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format);
LoadResult parse_dataset(std::string_view text, DatasetFormat format);

/// Writes one JSON object per line. With `stringify`, answers and tools are
/// JSON-encoded strings as in the upstream dataset.
void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records, bool stringify = true);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records,
                   bool stringify = true);

/// Completions file: JSON-lines of {"id": <int>, "completion": <string>}.
/// Extra fields are ignored; a repeated id keeps the last line.
std::map<std::int64_t, std::string> load_completions(const std::filesystem::path& path);
std::map<std::int64_t, std::string> parse_completions(std::string_view text);
void write_completions(std::ostream& out, const std::vector<std::pair<std::int64_t, std::string>>& rows);

struct Split {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;
};

/// Seeded, disjoint train/test subsets drawn without replacement. Throws
/// ValidationError when train_n + test_n exceeds the record count.
Split split_sample(const std::vector<DatasetRecord>& records, std::size_t train_n, std::size_t test_n,
                   std::uint64_t seed);

}  // namespace toolreward
