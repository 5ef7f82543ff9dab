#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toolreward/errors.hpp"
#include "toolreward/toolcall.hpp"

namespace toolreward {

/// Component weights. Defaults are the final curriculum stage; an early
/// stage that pays mostly for well-formed JSON is e.g. {0.5, 0.25, 0.25}.
struct RewardWeights {
  double json = 0.125;
  double fn = 0.375;
  double args = 0.5;

  bool operator==(const RewardWeights&) const = default;
};

/// Parses "w_json,w_fn,w_args". Throws ValidationError on malformed or
/// negative input.
RewardWeights parse_weights(std::string_view text);

/// Exact non-negative rational, kept in lowest terms.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Ratio of(std::int64_t num, std::int64_t den);
  Ratio operator+(const Ratio& other) const;
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Ratio&, const Ratio&) = default;
  friend bool operator<(const Ratio& a, const Ratio& b);
};

/// Argument score of a predicted call against a name-equal expected call:
/// the fraction of expected argument keys whose predicted value is
/// canonically equal. Extra predicted keys are ignored. Zero expected
/// arguments score 1.
Ratio argument_score(const ToolCall& expected, const ToolCall& predicted);

struct MatchedPair {
  std::size_t expected_index;
  std::size_t predicted_index;
  std::size_t matched_args;   // numerator of A_i
  std::size_t expected_args;  // denominator of A_i (0 means A_i = 1)
  double score;               // A_i

  Ratio exact_score() const;
};

struct MatchReport {
  std::size_t n_expected = 0;
  std::size_t n_predicted = 0;
  std::size_t n_correct_functions = 0;
  std::vector<MatchedPair> pairs;  // sorted by expected_index
  Ratio argument_sum;              // sum of A_i
  double scaling_factor = 1.0;
};

/// Pairs predicted calls with name-equal expected calls one-to-one.
///
/// Every name contributes min(#expected, #predicted) pairs. Within that, the
/// pairing maximizes the sum of argument scores; among optimal pairings the
/// lexicographically smallest (expected, predicted) sequence wins. Exact up
/// to kExactMatchStates search states per name, greedy by score beyond.
MatchReport match_calls(std::span<const ToolCall> expected, std::span<const ToolCall> predicted);

inline constexpr std::size_t kExactMatchStates = 1u << 20;

struct RewardBreakdown {
  double r_json = 0.0;
  double r_fn = 0.0;
  double r_args = 0.0;
  double r_fn_scaled = 0.0;
  double r_args_scaled = 0.0;
  double r_final = 0.0;
  OutcomeKind outcome = OutcomeKind::Empty;
  bool has_match = false;
  MatchReport match;  // meaningful only when has_match
  /// Same calls as expected with identical argument maps and nothing extra.
  bool exact_match = false;
};

RewardBreakdown compute_reward(std::string_view raw, std::span<const ToolCall> expected,
                               const RewardWeights& weights = {});

RewardBreakdown score_outcome(const ParseOutcome& outcome, std::span<const ToolCall> expected,
                              const RewardWeights& weights = {});

/// Element-wise compute_reward. Throws SizeMismatchError on unequal lengths.
std::vector<RewardBreakdown> reward_batch(std::span<const std::string> raws,
                                          std::span<const std::vector<ToolCall>> expected,
                                          const RewardWeights& weights = {});

/// Single JSON object with every breakdown field, numbers printed with
/// round-trip precision. Used by the CLI `score` command.
std::string breakdown_to_json(const RewardBreakdown& b);

}  // namespace toolreward
