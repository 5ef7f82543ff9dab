// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "toolreward/dataset.hpp"
#include "toolreward/eval.hpp"
#include "toolreward/grpo.hpp"
#include "toolreward/reward.hpp"
#include "toolreward/synth.hpp"

using namespace toolreward;

namespace {

constexpr double kAdvantageTol = 1e-9;
constexpr double kWorkedGroupTol = 1e-4;
constexpr double kMatchingBudgetSec = 10.0;
constexpr double kFuzzBudgetSec = 30.0;
constexpr double kTrainingBudgetSec = 60.0;
constexpr double kInitialRewardCeiling = 0.3;
constexpr double kFinalRewardFloor = 0.9;
constexpr double kFinalExtraneousCeiling = 0.01;
constexpr std::size_t kCurveWindow = 100;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] %s%s%s\n", o.pass ? "PASS" : "FAIL", name, o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

const char* kTableExpected =
    R"([{"name": "qr_code_image", "arguments": {"size": 7, "url": "example.com"}},
        {"name": "ec", "arguments": {"password": "Secure123", "penalty": 0.3, "format": "json"}}])";
const char* kTableBase =
    R"([{"name": "qr_code_image_generator", "arguments": {"url": "example.com"}},
        {"name": "ec", "arguments": {"password": "Secure123", "penalty": 0.3, "format": "json"}}])";
const char* kTableFinetuned =
    R"([{"name": "qr_code_image", "arguments": {"size": 7, "url": "example.com"}},
        {"name": "ec", "arguments": {"password": "Secure123", "penalty": 0.3, "format": "json"}}])";

Outcome golden_table() {
  Outcome o;
  const auto expected = parse_call_list(kTableExpected);
  const auto base = compute_reward(kTableBase, expected);
  const auto tuned = compute_reward(kTableFinetuned, expected);
  o.require(base.r_json == 0.125 && base.r_fn == 0.1875 && base.r_args == 0.25 && base.match.scaling_factor == 1.0,
            fmt("base components %.17g %.17g %.17g", base.r_json, base.r_fn, base.r_args));
  o.require(base.r_final == 0.5625, fmt("base r_final %.17g", base.r_final));
  o.require(tuned.r_final == 1.0, fmt("finetuned r_final %.17g", tuned.r_final));
  if (o.pass) o.detail = "base 0.5625, finetuned 1.0";
  return o;
}

// Random prose-like framing of at least one non-whitespace character.
std::string framing(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"Sure!", "Here", "is", "the", "call:", "```json", "```", "Answer",
                                                 "->",    "Done.", "<tool>", "</tool>", "Note", "(json)", "OK", "#"};
  std::string s;
  const int kind = static_cast<int>(rng() % 3);
  if (kind == 0) {
    const std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + words[rng() % words.size()];
  } else {
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<char>(0x21 + rng() % 94);
  }
  return s;
}

Outcome zero_rule() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::size_t wrapped = 0, broken = 0;
  while (wrapped < 1000) {
    const auto calls = oracle::random_calls(rng, 4, 5, 4, 3);
    const std::string payload = oracle::render(calls, rng, true);
    std::string text;
    const int side = static_cast<int>(rng() % 3);
    const std::string sep = rng() % 2 ? " " : "\n";
    if (side != 1) text += framing(rng) + sep;
    text += payload;
    if (side != 0) text += sep + framing(rng);
    // A framing that turns the whole text into one JSON document is not
    // extra text; skip those rare draws.
    if (nlohmann::json::accept(text)) continue;
    ++wrapped;
    const auto b = compute_reward(text, parse_call_list(oracle::render(calls)));
    o.require(b.r_final == 0.0, "wrapped completion scored " + fmt("%.17g", b.r_final) + ": " + text);

    const std::size_t cut = rng() % payload.size();
    const auto t = compute_reward(payload.substr(0, cut), parse_call_list(oracle::render(calls)));
    o.require(t.r_final == 0.0, "truncated completion scored nonzero");
    ++broken;
  }
  for (const char* raw : {"", " ", "\n\t", "{", "[{\"name\": ", "nul", "[1,]", "{'name': 'f'}"}) {
    o.require(compute_reward(raw, parse_call_list(kTableExpected)).r_final == 0.0,
              std::string("broken completion scored nonzero: ") + raw);
  }
  if (o.pass) o.detail = std::to_string(wrapped) + " wrapped and " + std::to_string(broken) + " truncated, all 0";
  return o;
}

Outcome matching_oracle() {
  Outcome o;
  std::mt19937_64 rng(202);
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    const auto e = oracle::random_calls(rng, 5, 2, 3, 3);
    oracle::Calls p;
    const int n = static_cast<int>(rng() % 6);
    for (int k = 0; k < n; ++k) {
      if (!e.empty() && rng() % 4) p.push_back(oracle::perturb(e[rng() % e.size()], rng, 3));
      else p.push_back(oracle::random_call(rng, 2, 3, 3));
    }
    const auto m = match_calls(parse_call_list(oracle::render(e)), parse_call_list(oracle::render(p, rng, true)));
    const auto best = oracle::best_matching(e, p);
    o.require(oracle::Frac(m.argument_sum.num, m.argument_sum.den) == best.sum,
              "sum differs on " + oracle::render(e) + " vs " + oracle::render(p));
  }
  const double secs = seconds_since(t0);
  o.require(secs < kMatchingBudgetSec, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("1000 cases equal the exhaustive optimum in %.3f s", secs);
  return o;
}

Outcome bounds_and_monotonicity() {
  Outcome o;
  std::mt19937_64 rng(303);
  const auto t0 = Clock::now();
  std::size_t cases = 0, fixes = 0, appends = 0;
  while (cases < 10000) {
    const auto e = oracle::random_calls(rng, 4, 3, 3, 3);
    oracle::Calls p;
    for (const auto& c : e)
      if (rng() % 5) p.push_back(oracle::perturb(c, rng, 3));
    while (rng() % 3 == 0) p.push_back(oracle::random_call(rng, 4, 3, 3));
    std::shuffle(p.begin(), p.end(), rng);
    const auto expected = parse_call_list(oracle::render(e));
    const auto base = compute_reward(oracle::render(p), expected);
    ++cases;
    o.require(base.r_final >= 0.0 && base.r_final <= 1.0, fmt("r_final %.17g out of range", base.r_final));

    for (const auto& pr : base.match.pairs) {
      const auto& want = e[pr.expected_index].args;
      auto& have = p[pr.predicted_index].args;
      for (const auto& [k, v] : want) {
        auto it = have.find(k);
        if (it != have.end() && it->second == v) continue;
        auto fixed = p;
        fixed[pr.predicted_index].args[k] = v;
        const auto after = compute_reward(oracle::render(fixed), expected);
        ++fixes;
        o.require(after.r_final >= base.r_final, "fixing an argument lowered r_final on " + oracle::render(p));
        break;
      }
    }

    if (p.size() >= e.size()) {
      auto longer = p;
      longer.push_back(oracle::Call{7, {{0, 0}}});
      const auto after = compute_reward(oracle::render(longer), expected);
      const double s0 = base.r_fn_scaled + base.r_args_scaled;
      const double s1 = after.r_fn_scaled + after.r_args_scaled;
      if (s0 > 0.0) {
        ++appends;
        o.require(s1 < s0, "extra call did not lower the scaled sum on " + oracle::render(p));
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < kFuzzBudgetSec, fmt("took %.2f s", secs));
  if (o.pass) {
    o.detail = std::to_string(cases) + " cases, " + std::to_string(fixes) + " argument fixes, " +
               std::to_string(appends) + " extra-call checks" + fmt(" in %.3f s", secs);
  }
  return o;
}

Outcome advantage_normalization() {
  Outcome o;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_mean = 0, worst_std = 0, worst_shift = 0;
  int groups = 0;
  while (groups < 1000) {
    const std::size_t n = 2 + rng() % 63;
    std::vector<double> r(n);
    for (auto& v : r) v = groups % 2 ? u(rng) : static_cast<double>(rng() % 9) / 8.0;
    if (oracle::population_std(r) < 1e-6) continue;
    ++groups;
    const auto a = group_advantages(r);
    worst_mean = std::max(worst_mean, std::abs(oracle::mean_of(a)));
    worst_std = std::max(worst_std, std::abs(oracle::population_std(a) - 1.0));
    std::vector<double> shifted = r;
    const double c = u(rng) * 4 - 2;
    for (auto& v : shifted) v += c;
    const auto as = group_advantages(shifted);
    for (std::size_t i = 0; i < n; ++i) worst_shift = std::max(worst_shift, std::abs(as[i] - a[i]));
  }
  o.require(worst_mean < kAdvantageTol, fmt("mean off by %.3g", worst_mean));
  o.require(worst_std < kAdvantageTol, fmt("std off by %.3g", worst_std));
  o.require(worst_shift < kAdvantageTol, fmt("shift changed advantages by %.3g", worst_shift));
  for (std::size_t n : {2, 8, 64}) {
    for (double v : group_advantages(std::vector<double>(n, 0.625))) o.require(v == 0.0, "flat group not all zero");
  }
  const auto w = group_advantages(std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0});
  o.require(std::abs(w[0] - 2.6458) < kWorkedGroupTol && std::abs(w[1] + 0.37796) < kWorkedGroupTol,
            fmt("worked group gave %.6f / %.6f", w[0], w[1]));
  if (o.pass) {
    o.detail = fmt("max |mean| %.2g, max |std-1| %.2g, max shift delta %.2g; worked group %.4f", worst_mean, worst_std,
                   worst_shift, w[0]);
  }
  return o;
}

Outcome toy_convergence() {
  Outcome o;
  TrainerConfig cfg;
  cfg.seed = 42;
  cfg.group_size = 8;
  const auto universe = default_universe();
  const auto t0 = Clock::now();
  const auto run = train_toy_policy(cfg, universe);
  const double secs = seconds_since(t0);
  const auto again = train_toy_policy(cfg, universe);

  const auto w = curve_stats(run.curve, kCurveWindow);
  const auto& first = w.front();
  const auto& last = w.back();
  o.require(first.mean_reward < kInitialRewardCeiling, fmt("initial window mean %.4f", first.mean_reward));
  o.require(last.mean_reward >= kFinalRewardFloor, fmt("final window mean %.4f", last.mean_reward));
  o.require(last.extraneous_rate < kFinalExtraneousCeiling, fmt("final extraneous rate %.4f", last.extraneous_rate));
  o.require(last.mean_reward >= first.mean_reward, "final window below initial window");
  bool identical = run.curve.steps.size() == again.curve.steps.size();
  for (std::size_t i = 0; identical && i < run.curve.steps.size(); ++i) {
    identical = run.curve.steps[i].mean_reward == again.curve.steps[i].mean_reward &&
                run.curve.steps[i].extraneous_rate == again.curve.steps[i].extraneous_rate &&
                run.curve.steps[i].mean_completion_chars == again.curve.steps[i].mean_completion_chars;
  }
  o.require(identical, "rerun produced a different curve");
  o.require(secs < kTrainingBudgetSec, fmt("took %.2f s", secs));
  if (o.pass) {
    o.detail = fmt("mean reward %.4f -> %.4f, final extraneous %.2f%%, %.2f s", first.mean_reward, last.mean_reward,
                   100.0 * last.extraneous_rate, secs);
  }
  return o;
}

Outcome metric_calibration() {
  Outcome o;
  const ErrorMix mix = {{ErrorMode::InvalidJson, 0.10},
                        {ErrorMode::ExtraneousText, 0.10},
                        {ErrorMode::WrongName, 0.20},
                        {ErrorMode::ExtraCall, 0.10}};
  const auto report = evaluate(plant_corpus(default_universe(), 0, 1000, mix));
  o.require(report.json_validity == 0.80, fmt("json_validity %.17g", report.json_validity));
  o.require(report.overall_accuracy == 0.50, fmt("overall_accuracy %.17g", report.overall_accuracy));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ErrorMix varied = {{ErrorMode::InvalidJson, 0.01 * static_cast<double>(seed)},
                             {ErrorMode::WrongArgValue, 0.02 * static_cast<double>(seed % 7)},
                             {ErrorMode::MissingArg, 0.05},
                             {ErrorMode::ExtraneousText, 0.03 * static_cast<double>(seed % 5)}};
    const auto r = evaluate(plant_corpus(generate_universe(seed, 10, 3), seed, 300, varied));
    o.require(r.json_validity >= r.overall_accuracy, "validity below accuracy for seed " + std::to_string(seed));
  }
  if (o.pass) o.detail = fmt("json_validity %.2f, overall_accuracy %.2f", report.json_validity, report.overall_accuracy);
  return o;
}

Outcome split_fidelity() {
  Outcome o;
  const auto corpus = plant_corpus(default_universe(), 5, 5000, {});
  std::vector<DatasetRecord> records;
  for (const auto& p : corpus.records) records.push_back(p.record);
  const auto a = split_sample(records, 4000, 1000, 0);
  const auto b = split_sample(records, 4000, 1000, 0);
  o.require(a.train.size() == 4000 && a.test.size() == 1000, "wrong split sizes");
  std::set<std::int64_t> train_ids, test_ids;
  for (const auto& r : a.train) train_ids.insert(r.id);
  for (const auto& r : a.test) test_ids.insert(r.id);
  o.require(train_ids.size() == 4000 && test_ids.size() == 1000, "duplicate ids within a split");
  std::size_t overlap = 0;
  for (auto id : test_ids) overlap += train_ids.count(id);
  o.require(overlap == 0, std::to_string(overlap) + " ids in both splits");
  bool same = true;
  for (std::size_t i = 0; i < a.train.size(); ++i) same = same && a.train[i].id == b.train[i].id;
  for (std::size_t i = 0; i < a.test.size(); ++i) same = same && a.test[i].id == b.test[i].id;
  o.require(same, "same seed gave different splits");
  if (o.pass) o.detail = "4000/1000 disjoint, identical on rerun";
  return o;
}

}  // namespace

int main() {
  report("golden reward on the sample tool calls", golden_table);
  report("zero reward for framed, empty and broken completions", zero_rule);
  report("matching equals exhaustive permutation search", matching_oracle);
  report("reward bounds and monotonicity", bounds_and_monotonicity);
  report("group advantage normalization", advantage_normalization);
  report("toy policy convergence", toy_convergence);
  report("metric calibration on a planted corpus", metric_calibration);
  report("train/test split fidelity", split_fidelity);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
