#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "toolreward/dataset.hpp"
#include "toolreward/grpo.hpp"
#include "toolreward/reward.hpp"
#include "toolreward/synth.hpp"

namespace toolreward {

struct EvalOptions {
  RewardWeights weights;
  /// Count prose-wrapped JSON as valid. Off by default; for comparison only.
  bool lenient_json_validity = false;
};

struct RecordResult {
  std::int64_t id = 0;
  double r_final = 0.0;
  OutcomeKind outcome = OutcomeKind::Empty;
  bool exact_match = false;
  bool json_valid = false;
  std::size_t completion_chars = 0;
  bool missing = false;  // no completion supplied; scored as empty
};

struct EvalReport {
  std::size_t n_records = 0;
  double json_validity = 0.0;
  double overall_accuracy = 0.0;
  double mean_reward = 0.0;
  double mean_completion_chars = 0.0;
  std::size_t n_missing = 0;
  std::size_t n_unknown_ids = 0;  // completions whose id is not in the dataset
  std::vector<RecordResult> records;
};

/// Recomputes every aggregate from `rows`. Sums run in a canonical order, so
/// the result does not depend on row order.
EvalReport summarize(std::vector<RecordResult> rows);

/// Scores every record. Overall accuracy counts exact call-set matches
/// (reward 1 with no extra argument keys); JSON validity counts completions
/// whose whole trimmed text is one JSON value.
EvalReport evaluate(const std::vector<DatasetRecord>& records, const std::map<std::int64_t, std::string>& completions,
                    const EvalOptions& options = {});

EvalReport evaluate(const PlantedCorpus& corpus, const EvalOptions& options = {});

enum class ReportFormat { HumanTable, Json, Csv };

/// "table" / "human-table", "json", "csv"; throws ValidationError otherwise.
ReportFormat parse_report_format(std::string_view name);

std::string render_report(const EvalReport& report, ReportFormat format, std::string_view label = "completions");

/// Writes render_report output; throws IoError when the path is unwritable.
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path,
                 std::string_view label = "completions");

/// Inverse of the json and csv renderings. The csv carries per-record rows
/// only; aggregates are recomputed.
EvalReport parse_report_json(std::string_view text);
EvalReport parse_report_csv(std::string_view text);

std::string render_curve_stats(const std::vector<WindowStats>& windows, ReportFormat format);

}  // namespace toolreward
