#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toolreward/dataset.hpp"
#include "toolreward/rng.hpp"
#include "toolreward/toolcall.hpp"

namespace toolreward {

struct SynthTool {
  ToolSpec spec;
  /// Candidate values per parameter, index-aligned with spec.parameters.
  std::vector<std::vector<JsonValue>> value_pools;
};

/// One call slot of a query template: a tool and the parameters it sets.
struct TemplateCall {
  std::size_t tool = 0;
  std::vector<std::size_t> params;
};

struct QueryTemplate {
  std::string text;  // "{...}" is replaced by the rendered arguments
  std::vector<TemplateCall> calls;
};

/// A template with concrete values: value_choice[call][param] indexes the
/// parameter's pool.
struct QueryInstance {
  std::size_t template_index = 0;
  std::vector<std::vector<std::size_t>> value_choice;
  std::string query;
  std::vector<ToolCall> answer;
};

struct SynthUniverse {
  std::vector<SynthTool> tools;
  std::vector<QueryTemplate> templates;

  std::vector<ToolSpec> catalog() const;

  /// Builds the expected answer and query text for explicit value choices.
  QueryInstance instantiate(std::size_t template_index, std::vector<std::vector<std::size_t>> value_choice) const;
  /// Draws value choices uniformly from the pools.
  QueryInstance instantiate(std::size_t template_index, Rng& rng) const;

  /// Throws ValidationError if a template references a missing tool or
  /// parameter, or a parameter has an empty pool.
  void validate() const;
};

/// Deterministic universe: each tool gets 0..max_params parameters with
/// `values_per_param` candidate values, one single-call template per tool and
/// one two-call template per adjacent tool pair. Tool and parameter names come
/// from disjoint vocabularies. Throws ValidationError when n_tools == 0.
SynthUniverse generate_universe(std::uint64_t seed, std::size_t n_tools, std::size_t max_params,
                                std::size_t values_per_param = 4);

/// Environment used by the trainer and acceptance runs: generate_universe(7, 8, 3).
SynthUniverse default_universe();

enum class ErrorMode { Perfect, ExtraneousText, InvalidJson, WrongName, WrongArgValue, MissingArg, ExtraCall };

inline constexpr std::size_t kErrorModeCount = 7;

std::string_view error_mode_name(ErrorMode mode);
/// Accepts the names from error_mode_name plus the alias "extraneous".
std::optional<ErrorMode> error_mode_from_name(std::string_view name);

using ErrorMix = std::map<ErrorMode, double>;

/// Parses "invalid-json=0.1,extraneous=0.1". Throws ValidationError.
ErrorMix parse_error_mix(std::string_view text);

/// Throws ValidationError unless fractions lie in [0, 1], sum to at most 1 and skip 'perfect'.
void check_error_mix(const ErrorMix& mix);

struct PlantedRecord {
  DatasetRecord record;
  std::string completion;
  ErrorMode planted = ErrorMode::Perfect;
};

struct PlantedCorpus {
  std::vector<PlantedRecord> records;
  /// Empirical tag frequencies over `records`, every mode present (zero if unused).
  std::map<ErrorMode, double> planted_rates;
};

/// Plants exactly one behaviour per record. Per-mode counts are fixed by
/// largest-remainder rounding of fraction * n_records; Perfect takes the
/// remainder. Throws ValidationError when a fraction is outside [0,1], the
/// fractions sum above 1, or an argument-level mode is requested but no
/// template has arguments.
PlantedCorpus plant_corpus(const SynthUniverse& universe, std::uint64_t seed, std::size_t n_records,
                           const ErrorMix& mix);

/// Per-mode record counts for a mix, as used by plant_corpus.
std::map<ErrorMode, std::size_t> quota_counts(const ErrorMix& mix, std::size_t n_records);

}  // namespace toolreward
