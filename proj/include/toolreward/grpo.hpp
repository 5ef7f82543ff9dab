#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "toolreward/reward.hpp"
#include "toolreward/rng.hpp"
#include "toolreward/synth.hpp"

namespace toolreward {

inline constexpr double kAdvantageEpsilon = 1e-8;

/// Group-relative advantages: (r_i - mean) / population_std. A group whose
/// std is below kAdvantageEpsilon gets all-zero advantages. Throws
/// ValidationError for groups smaller than two.
std::vector<double> group_advantages(std::span<const double> rewards);

/// G completions for one query, with their rewards and advantages.
struct GroupSample {
  std::size_t query_id = 0;
  std::vector<std::string> completions;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<OutcomeKind> outcomes;
};

/// Scores each completion against `expected` and standardizes within the group.
GroupSample score_group(std::size_t query_id, std::vector<std::string> completions,
                        std::span<const ToolCall> expected, const RewardWeights& weights);

/// Which failure behaviours the toy policy can exhibit. A disabled mode is
/// a single-option categorical, so the policy cannot err that way.
struct ErrorModes {
  bool extraneous_text = true;
  bool malformed_json = true;
  bool over_generation = true;
};

struct TrainerConfig {
  std::size_t group_size = 8;
  double learning_rate = 0.5;
  std::size_t max_steps = 2000;
  std::uint64_t seed = 42;
  RewardWeights weights;
  ErrorModes error_modes;

  /// Throws ValidationError on group_size < 2, learning_rate < 0 or
  /// non-finite, or max_steps == 0.
  void validate() const;
};

/// Softmax over a logit vector.
class Categorical {
 public:
  explicit Categorical(std::size_t n_options) : logits_(n_options, 0.0) {}

  std::size_t size() const { return logits_.size(); }
  std::span<const double> logits() const { return logits_; }
  std::vector<double> probs() const;
  std::size_t sample(Rng& rng) const;
  double log_prob(std::size_t choice) const;
  /// logits += step * (onehot(choice) - probs), with probs taken before the
  /// group's update.
  void ascend(std::size_t choice, double step, std::span<const double> probs);

 private:
  std::vector<double> logits_;
};

/// Choices made while sampling one completion.
struct SampledCompletion {
  std::string text;
  std::size_t format = 0;      // 0 well-formed, 1 truncated
  std::size_t extraneous = 0;  // 0 bare, 1 wrapped in prose
  std::size_t call_count = 0;  // 0 exact, 1 one extra call
  std::vector<std::size_t> names;
  std::vector<std::vector<std::size_t>> values;
};

/// Parameter table for one prompt (template instance).
struct PromptPolicy {
  QueryInstance prompt;
  std::vector<std::vector<std::vector<JsonValue>>> value_pools;  // per call slot, per argument
  Categorical format{1};
  Categorical extraneous{1};
  Categorical call_count{1};
  std::vector<Categorical> names;                // per call slot, over universe tools
  std::vector<std::vector<Categorical>> values;  // per call slot, per argument, over its value pool
};

/// Tabular stand-in for a language model: independent categoricals for the
/// output format, prose wrapping, call count, tool name per slot and value
/// per argument. All logits start at zero (uniform).
class ToyPolicy {
 public:
  ToyPolicy(const SynthUniverse& universe, const ErrorModes& modes, Rng& rng);

  std::size_t prompt_count() const { return prompts_.size(); }
  const PromptPolicy& prompt(std::size_t i) const { return prompts_.at(i); }

  SampledCompletion sample(std::size_t prompt_index, Rng& rng) const;

  /// log pi(completion | prompt): sum of the log-probs of every choice.
  double log_prob(std::size_t prompt_index, const SampledCompletion& c) const;

  /// One policy-gradient step: logits += lr / G * sum_i A_i * grad log pi(c_i).
  void update(std::size_t prompt_index, std::span<const SampledCompletion> group, std::span<const double> advantages,
              double learning_rate);

 private:
  std::vector<std::string> tool_names_;
  std::vector<PromptPolicy> prompts_;
};

struct StepRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double extraneous_rate = 0.0;
  double mean_completion_chars = 0.0;
};

struct TrainingCurve {
  std::vector<StepRecord> steps;
};

struct TrainingRun {
  TrainingCurve curve;
  ToyPolicy policy;
};

/// Group-relative REINFORCE on the toy policy: per step, draw a prompt,
/// sample group_size completions, score them with the reward engine,
/// standardize within the group and ascend. Deterministic given the config.
/// No KL term and no ratio clipping.
TrainingRun train_toy_policy(const TrainerConfig& config, const SynthUniverse& universe);

struct WindowStats {
  std::size_t first_step = 0;
  std::size_t last_step = 0;
  double mean_reward = 0.0;
  double min_reward = 0.0;
  double max_reward = 0.0;
  double extraneous_rate = 0.0;
  double mean_completion_chars = 0.0;
};

/// Consecutive windows of `window` steps (the last may be shorter); a window
/// larger than the curve yields one window. Throws ValidationError on an
/// empty curve or window == 0.
std::vector<WindowStats> curve_stats(const TrainingCurve& curve, std::size_t window = 100);

/// Tab-separated columns with a header row:
/// step, mean_reward, extraneous_rate, mean_completion_chars.
void write_curve(std::ostream& out, const TrainingCurve& curve);
void write_curve(const std::filesystem::path& path, const TrainingCurve& curve);
TrainingCurve parse_curve(std::string_view text);
TrainingCurve read_curve(const std::filesystem::path& path);

}  // namespace toolreward
