#include "toolreward/grpo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "toolreward/errors.hpp"
#include "toolreward/io.hpp"

namespace toolreward {

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ValidationError("a group needs at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(sq / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (std_dev < kAdvantageEpsilon) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std_dev;
  return out;
}

GroupSample score_group(std::size_t query_id, std::vector<std::string> completions,
                        std::span<const ToolCall> expected, const RewardWeights& weights) {
  GroupSample g;
  g.query_id = query_id;
  g.rewards.reserve(completions.size());
  for (const auto& text : completions) {
    const RewardBreakdown b = compute_reward(text, expected, weights);
    g.rewards.push_back(b.r_final);
    g.outcomes.push_back(b.outcome);
  }
  g.advantages = group_advantages(g.rewards);
  g.completions = std::move(completions);
  return g;
}

void TrainerConfig::validate() const {
  if (group_size < 2) throw ValidationError("group_size must be >= 2");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) throw ValidationError("learning_rate must be finite and >= 0");
  if (max_steps == 0) throw ValidationError("max_steps must be >= 1");
}

std::vector<double> Categorical::probs() const {
  const double hi = *std::max_element(logits_.begin(), logits_.end());
  std::vector<double> p(logits_.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(logits_[i] - hi);
  for (double& v : p) v /= z;
  return p;
}

std::size_t Categorical::sample(Rng& rng) const {
  if (logits_.size() == 1) return 0;
  const auto p = probs();
  return rng.categorical(p);
}

double Categorical::log_prob(std::size_t choice) const {
  const double hi = *std::max_element(logits_.begin(), logits_.end());
  double z = 0.0;
  for (double l : logits_) z += std::exp(l - hi);
  return logits_.at(choice) - hi - std::log(z);
}

void Categorical::ascend(std::size_t choice, double step, std::span<const double> probs) {
  for (std::size_t i = 0; i < logits_.size(); ++i) logits_[i] += step * ((i == choice ? 1.0 : 0.0) - probs[i]);
}

namespace {

constexpr std::string_view kProsePrefix = "This is the correct tool call: ";

}  // namespace

ToyPolicy::ToyPolicy(const SynthUniverse& universe, const ErrorModes& modes, Rng& rng) {
  universe.validate();
  if (universe.templates.empty()) throw ValidationError("universe has no query templates");
  for (const auto& t : universe.tools) tool_names_.push_back(t.spec.name);
  for (std::size_t t = 0; t < universe.templates.size(); ++t) {
    PromptPolicy pp;
    pp.prompt = universe.instantiate(t, rng);
    pp.format = Categorical(modes.malformed_json ? 2 : 1);
    pp.extraneous = Categorical(modes.extraneous_text ? 2 : 1);
    pp.call_count = Categorical(modes.over_generation ? 2 : 1);
    for (const auto& slot : universe.templates[t].calls) {
      const SynthTool& tool = universe.tools[slot.tool];
      pp.names.emplace_back(tool_names_.size());
      std::vector<Categorical> per_arg;
      std::vector<std::vector<JsonValue>> pools;
      for (auto p : slot.params) {
        per_arg.emplace_back(tool.value_pools[p].size());
        pools.push_back(tool.value_pools[p]);
      }
      pp.values.push_back(std::move(per_arg));
      pp.value_pools.push_back(std::move(pools));
    }
    prompts_.push_back(std::move(pp));
  }
}

SampledCompletion ToyPolicy::sample(std::size_t prompt_index, Rng& rng) const {
  const PromptPolicy& pp = prompts_.at(prompt_index);
  SampledCompletion c;
  c.format = pp.format.sample(rng);
  c.extraneous = pp.extraneous.sample(rng);
  c.call_count = pp.call_count.sample(rng);
  std::vector<ToolCall> calls;
  for (std::size_t slot = 0; slot < pp.names.size(); ++slot) {
    const std::size_t name = pp.names[slot].sample(rng);
    c.names.push_back(name);
    const ToolCall& expected = pp.prompt.answer[slot];
    ToolCall call{tool_names_[name], {}};
    std::vector<std::size_t> picks;
    for (std::size_t k = 0; k < pp.values[slot].size(); ++k) {
      const std::size_t v = pp.values[slot][k].sample(rng);
      picks.push_back(v);
      call.arguments.emplace_back(expected.arguments[k].first, pp.value_pools[slot][k][v]);
    }
    c.values.push_back(std::move(picks));
    calls.push_back(std::move(call));
  }
  if (c.call_count == 1) calls.push_back(calls.empty() ? ToolCall{tool_names_.front(), {}} : calls.front());
  c.text = serialize_calls(calls);
  if (c.format == 1) c.text.pop_back();
  if (c.extraneous == 1) c.text.insert(0, kProsePrefix);
  return c;
}

double ToyPolicy::log_prob(std::size_t prompt_index, const SampledCompletion& c) const {
  const PromptPolicy& pp = prompts_.at(prompt_index);
  double lp = pp.format.log_prob(c.format) + pp.extraneous.log_prob(c.extraneous) + pp.call_count.log_prob(c.call_count);
  for (std::size_t slot = 0; slot < pp.names.size(); ++slot) {
    lp += pp.names[slot].log_prob(c.names[slot]);
    for (std::size_t k = 0; k < pp.values[slot].size(); ++k) lp += pp.values[slot][k].log_prob(c.values[slot][k]);
  }
  return lp;
}

void ToyPolicy::update(std::size_t prompt_index, std::span<const SampledCompletion> group,
                       std::span<const double> advantages, double learning_rate) {
  if (group.size() != advantages.size()) throw SizeMismatchError(group.size(), advantages.size());
  if (group.empty()) return;
  PromptPolicy& pp = prompts_.at(prompt_index);

  // Every sample's gradient uses the pre-update distribution.
  const auto p_format = pp.format.probs();
  const auto p_extra = pp.extraneous.probs();
  const auto p_count = pp.call_count.probs();
  std::vector<std::vector<double>> p_names;
  std::vector<std::vector<std::vector<double>>> p_values;
  for (std::size_t slot = 0; slot < pp.names.size(); ++slot) {
    p_names.push_back(pp.names[slot].probs());
    std::vector<std::vector<double>> per_arg;
    for (const auto& cat : pp.values[slot]) per_arg.push_back(cat.probs());
    p_values.push_back(std::move(per_arg));
  }

  const double scale = learning_rate / static_cast<double>(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double step = scale * advantages[i];
    if (step == 0.0) continue;
    const SampledCompletion& c = group[i];
    pp.format.ascend(c.format, step, p_format);
    pp.extraneous.ascend(c.extraneous, step, p_extra);
    pp.call_count.ascend(c.call_count, step, p_count);
    for (std::size_t slot = 0; slot < pp.names.size(); ++slot) {
      pp.names[slot].ascend(c.names[slot], step, p_names[slot]);
      for (std::size_t k = 0; k < pp.values[slot].size(); ++k)
        pp.values[slot][k].ascend(c.values[slot][k], step, p_values[slot][k]);
    }
  }
}

TrainingRun train_toy_policy(const TrainerConfig& config, const SynthUniverse& universe) {
  config.validate();
  Rng rng(config.seed);
  TrainingRun run{TrainingCurve{}, ToyPolicy(universe, config.error_modes, rng)};
  run.curve.steps.reserve(config.max_steps);

  std::vector<SampledCompletion> samples(config.group_size);
  std::vector<std::string> texts(config.group_size);
  for (std::size_t step = 0; step < config.max_steps; ++step) {
    const auto prompt = static_cast<std::size_t>(rng.below(run.policy.prompt_count()));
    std::size_t chars = 0;
    for (std::size_t i = 0; i < config.group_size; ++i) {
      samples[i] = run.policy.sample(prompt, rng);
      texts[i] = samples[i].text;
      chars += texts[i].size();
    }
    const GroupSample group = score_group(prompt, texts, run.policy.prompt(prompt).prompt.answer, config.weights);
    run.policy.update(prompt, samples, group.advantages, config.learning_rate);

    const double g = static_cast<double>(config.group_size);
    const auto extraneous = std::count(group.outcomes.begin(), group.outcomes.end(), OutcomeKind::ExtraneousText);
    run.curve.steps.push_back(StepRecord{step,
                                         std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) / g,
                                         static_cast<double>(extraneous) / g, static_cast<double>(chars) / g});
  }
  return run;
}

std::vector<WindowStats> curve_stats(const TrainingCurve& curve, std::size_t window) {
  if (curve.steps.empty()) throw ValidationError("curve is empty");
  if (window == 0) throw ValidationError("window must be >= 1");
  std::vector<WindowStats> out;
  for (std::size_t begin = 0; begin < curve.steps.size(); begin += window) {
    const std::size_t end = std::min(begin + window, curve.steps.size());
    WindowStats w;
    w.first_step = curve.steps[begin].step;
    w.last_step = curve.steps[end - 1].step;
    w.min_reward = std::numeric_limits<double>::infinity();
    w.max_reward = -std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < end; ++i) {
      const StepRecord& s = curve.steps[i];
      w.mean_reward += s.mean_reward;
      w.extraneous_rate += s.extraneous_rate;
      w.mean_completion_chars += s.mean_completion_chars;
      w.min_reward = std::min(w.min_reward, s.mean_reward);
      w.max_reward = std::max(w.max_reward, s.mean_reward);
    }
    const double n = static_cast<double>(end - begin);
    w.mean_reward /= n;
    w.extraneous_rate /= n;
    w.mean_completion_chars /= n;
    out.push_back(w);
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view token, std::size_t line) {
  const std::string s(token);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ValidationError("curve line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

constexpr std::string_view kCurveHeader = "step\tmean_reward\textraneous_rate\tmean_completion_chars";

}  // namespace

void write_curve(std::ostream& out, const TrainingCurve& curve) {
  out << kCurveHeader << '\n';
  for (const auto& s : curve.steps) {
    out << s.step << '\t' << format_double(s.mean_reward) << '\t' << format_double(s.extraneous_rate) << '\t'
        << format_double(s.mean_completion_chars) << '\n';
  }
}

void write_curve(const std::filesystem::path& path, const TrainingCurve& curve) {
  std::ostringstream buf;
  write_curve(buf, curve);
  write_text_file(path, buf.str());
}

TrainingCurve parse_curve(std::string_view text) {
  TrainingCurve curve;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCurveHeader) throw ValidationError("curve file lacks the expected header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4) throw ValidationError("curve line " + std::to_string(line_no) + ": expected 4 columns");
    StepRecord s;
    auto [ptr, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), s.step);
    if (ec != std::errc() || ptr != cols[0].data() + cols[0].size())
      throw ValidationError("curve line " + std::to_string(line_no) + ": bad step");
    s.mean_reward = parse_double(cols[1], line_no);
    s.extraneous_rate = parse_double(cols[2], line_no);
    s.mean_completion_chars = parse_double(cols[3], line_no);
    curve.steps.push_back(s);
  }
  if (!header_seen) throw ValidationError("curve file is empty");
  return curve;
}

TrainingCurve read_curve(const std::filesystem::path& path) { return parse_curve(read_text_file(path)); }

}  // namespace toolreward
