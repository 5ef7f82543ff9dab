#include <doctest.h>

#include <json.hpp>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "toolreward/reward.hpp"

using namespace toolreward;

namespace {

const char* kTableExpected =
    R"([{"name": "qr_code_image", "arguments": {"size": 7, "url": "example.com"}},
        {"name": "ec", "arguments": {"password": "Secure123", "penalty": 0.3, "format": "json"}}])";
const char* kTableBase =
    R"([{"name": "qr_code_image_generator", "arguments": {"url": "example.com"}},
        {"name": "ec", "arguments": {"password": "Secure123", "penalty": 0.3, "format": "json"}}])";
const char* kTableFinetuned =
    R"([{"name": "qr_code_image", "arguments": {"size": 7, "url": "example.com"}},
        {"name": "ec", "arguments": {"password": "Secure123", "penalty": 0.3, "format": "json"}}])";

RewardBreakdown score(const oracle::Calls& e, const std::string& raw) {
  return compute_reward(raw, parse_call_list(oracle::render(e)));
}

}  // namespace

TEST_CASE("table 1 base output") {
  const auto b = compute_reward(kTableBase, parse_call_list(kTableExpected));
  CHECK(b.outcome == OutcomeKind::Calls);
  CHECK(b.r_json == 0.125);
  CHECK(b.r_fn == 0.1875);
  CHECK(b.r_args == 0.25);
  CHECK(b.match.scaling_factor == 1.0);
  CHECK(b.r_final == 0.5625);
  CHECK_FALSE(b.exact_match);
  CHECK(b.match.n_correct_functions == 1);
  REQUIRE(b.match.pairs.size() == 1);
  CHECK(b.match.pairs[0].expected_index == 1);
  CHECK(b.match.pairs[0].predicted_index == 1);
  CHECK(b.match.pairs[0].score == 1.0);
}

TEST_CASE("table 1 finetuned output") {
  const auto b = compute_reward(kTableFinetuned, parse_call_list(kTableExpected));
  CHECK(b.r_final == 1.0);
  CHECK(b.exact_match);
}

TEST_CASE("prose-wrapped output scores zero") {
  const auto b = compute_reward(std::string("This is the correct tool call: ") + kTableFinetuned,
                                parse_call_list(kTableExpected));
  CHECK(b.outcome == OutcomeKind::ExtraneousText);
  CHECK(b.r_final == 0.0);
  CHECK(b.r_json == 0.0);
  CHECK_FALSE(b.has_match);
}

TEST_CASE("over-generation scaling example") {
  const auto expected = parse_call_list(R"([{"name": "f", "arguments": {"x": 1}}])");
  const auto b = compute_reward(R"([{"name": "f", "arguments": {"x": 1}}, {"name": "g", "arguments": {}}])", expected);
  CHECK(b.match.scaling_factor == 0.5);
  CHECK(b.r_fn_scaled == 0.1875);
  CHECK(b.r_args_scaled == 0.25);
  CHECK(b.r_final == 0.5625);
}

TEST_CASE("pairing maximizes argument agreement") {
  const auto expected = parse_call_list(R"([{"name": "f", "arguments": {"x": 1}}, {"name": "f", "arguments": {"x": 2}}])");
  const auto predicted = parse_call_list(R"([{"name": "f", "arguments": {"x": 2}}])");
  const auto m = match_calls(expected, predicted);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].expected_index == 1);
  CHECK(m.pairs[0].predicted_index == 0);
  CHECK(m.pairs[0].score == 1.0);
  CHECK(m.argument_sum == Ratio::of(1, 1));
}

TEST_CASE("ties go to the lexicographically smallest pairing") {
  const auto expected = parse_call_list(R"([{"name": "f", "arguments": {}}, {"name": "f", "arguments": {}}])");
  const auto predicted = parse_call_list(R"([{"name": "f", "arguments": {}}, {"name": "f", "arguments": {}}])");
  const auto m = match_calls(expected, predicted);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0].expected_index == 0);
  CHECK(m.pairs[0].predicted_index == 0);
  CHECK(m.pairs[1].expected_index == 1);
  CHECK(m.pairs[1].predicted_index == 1);

  const auto one = match_calls(expected, std::vector<ToolCall>(predicted.begin(), predicted.begin() + 1));
  REQUIRE(one.pairs.size() == 1);
  CHECK(one.pairs[0].expected_index == 0);
}

TEST_CASE("empty lists") {
  const std::vector<ToolCall> none;
  const auto m = match_calls(none, none);
  CHECK(m.n_expected == 0);
  CHECK(m.n_predicted == 0);
  CHECK(m.pairs.empty());
  CHECK(m.scaling_factor == 1.0);
  CHECK(compute_reward("[]", none).r_final == 1.0);
  CHECK(compute_reward("[]", none).exact_match);

  const auto extra = compute_reward(R"([{"name": "f", "arguments": {}}])", none);
  CHECK(extra.r_final == 0.125);
  CHECK(extra.match.scaling_factor == 1.0);
  CHECK_FALSE(extra.exact_match);

  const auto expected = parse_call_list(R"([{"name": "f", "arguments": {}}])");
  CHECK(compute_reward("[]", expected).r_final == 0.125);
}

TEST_CASE("argument score details") {
  const auto e = parse_call_list(R"([{"name": "f", "arguments": {"a": 1, "b": "x", "c": [1]}}])")[0];
  auto p = parse_call_list(R"([{"name": "f", "arguments": {"a": 1.0, "b": "X", "c": [1], "z": 9}}])")[0];
  CHECK(argument_score(e, p) == Ratio::of(2, 3));
  const auto none = parse_call_list(R"([{"name": "f", "arguments": {}}])")[0];
  CHECK(argument_score(none, p) == Ratio::of(1, 1));
  CHECK(argument_score(e, none) == Ratio::of(0, 1));
}

TEST_CASE("extra argument keys keep full credit but block an exact match") {
  const auto expected = parse_call_list(R"([{"name": "f", "arguments": {"a": 1}}])");
  const auto b = compute_reward(R"([{"name": "f", "arguments": {"a": 1, "b": 2}}])", expected);
  CHECK(b.r_final == 1.0);
  CHECK_FALSE(b.exact_match);
}

TEST_CASE("non-conforming output earns the json component only") {
  const auto expected = parse_call_list(kTableExpected);
  for (const char* raw : {"{}", "42", R"([{"name": "f"}])", R"({"name": "ec", "arguments": {}, "x": 1})"}) {
    const auto b = compute_reward(raw, expected);
    CHECK(b.outcome == OutcomeKind::NonConforming);
    CHECK(b.r_final == 0.125);
    CHECK(b.r_fn == 0.0);
    CHECK(b.r_args == 0.0);
  }
}

TEST_CASE("zero rule for broken and framed outputs") {
  const auto expected = parse_call_list(kTableExpected);
  for (const char* raw : {"", "   ", "[{", "not json", "```json\n[]\n```", "[] []", R"({"name": "ec"} trailing)"}) {
    const auto b = compute_reward(raw, expected);
    CAPTURE(raw);
    CHECK(b.r_final == 0.0);
    CHECK(b.r_json == 0.0);
    CHECK(b.r_fn_scaled == 0.0);
  }
}

TEST_CASE("weights") {
  CHECK(parse_weights("0.125,0.375,0.5") == RewardWeights{});
  CHECK(parse_weights(" 0.5 , 0.25,0.25") == RewardWeights{0.5, 0.25, 0.25});
  for (const char* bad : {"", "1,2", "1,2,3,4", "a,b,c", "-0.1,0.5,0.6", "0.1,,0.2", "nan,0,0", "inf,0,0"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_weights(bad), ValidationError);
  }
  const auto expected = parse_call_list(kTableExpected);
  const auto early = compute_reward(kTableBase, expected, RewardWeights{0.5, 0.25, 0.25});
  CHECK(early.r_final == doctest::Approx(0.5 + 0.125 + 0.125).epsilon(1e-15));
}

TEST_CASE("matching equals the exhaustive optimum") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const auto e = oracle::random_calls(rng, 5, 3, 3, 3);
    oracle::Calls p;
    const int n_pred = static_cast<int>(rng() % 6);
    for (int k = 0; k < n_pred; ++k) {
      if (!e.empty() && rng() % 3 != 0) {
        p.push_back(oracle::perturb(e[rng() % e.size()], rng, 3));
      } else {
        p.push_back(oracle::random_call(rng, 3, 3, 3));
      }
    }
    const auto ee = parse_call_list(oracle::render(e));
    const auto pp = parse_call_list(oracle::render(p, rng, true));
    const auto m = match_calls(ee, pp);
    const auto best = oracle::best_matching(e, p);
    CAPTURE(oracle::render(e));
    CAPTURE(oracle::render(p));
    CHECK(oracle::Frac(m.argument_sum.num, m.argument_sum.den) == best.sum);
    CHECK(static_cast<int>(m.n_correct_functions) == oracle::max_pairs(e, p));
    CHECK(m.pairs.size() == m.n_correct_functions);

    Ratio total;
    std::vector<bool> used_e(e.size()), used_p(p.size());
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      const auto& pr = m.pairs[k];
      if (k) CHECK(m.pairs[k - 1].expected_index < pr.expected_index);
      CHECK_FALSE(used_e[pr.expected_index]);
      CHECK_FALSE(used_p[pr.predicted_index]);
      used_e[pr.expected_index] = used_p[pr.predicted_index] = true;
      CHECK(e[pr.expected_index].name == p[pr.predicted_index].name);
      const auto a = oracle::arg_score(e[pr.expected_index], p[pr.predicted_index]);
      CHECK(oracle::Frac(pr.exact_score().num, pr.exact_score().den) == a);
      total = total + pr.exact_score();
    }
    CHECK(total == m.argument_sum);
  }
}

TEST_CASE("reward equals the component formulas") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 3000; ++i) {
    const auto e = oracle::random_calls(rng, 4, 3, 3, 3);
    oracle::Calls p;
    for (const auto& c : e)
      if (rng() % 4) p.push_back(oracle::perturb(c, rng, 3));
    while (rng() % 3 == 0) p.push_back(oracle::random_call(rng, 4, 3, 2));
    std::shuffle(p.begin(), p.end(), rng);
    const auto expect = oracle::reward(e, p);
    const auto b = score(e, oracle::render(p, rng, true));
    CAPTURE(oracle::render(e));
    CAPTURE(oracle::render(p));
    CHECK(b.r_json == expect.r_json);
    CHECK(b.r_fn == doctest::Approx(expect.r_fn).epsilon(1e-12));
    CHECK(b.r_args == doctest::Approx(expect.r_args).epsilon(1e-12));
    CHECK(b.match.scaling_factor == doctest::Approx(expect.scaling).epsilon(1e-15));
    CHECK(b.r_final == doctest::Approx(expect.r_final).epsilon(1e-12));
    CHECK(b.exact_match == expect.exact);
    CHECK(b.r_final >= 0.0);
    CHECK(b.r_final <= 1.0);
    if (expect.exact) CHECK(b.r_final == 1.0);
    if (p.size() <= e.size()) {
      CHECK(b.r_fn_scaled == b.r_fn);
      CHECK(b.r_args_scaled == b.r_args);
    }
  }
}

TEST_CASE("reward of one means every expected argument reproduced and nothing extra") {
  std::mt19937_64 rng(5);
  int hits = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto e = oracle::random_calls(rng, 3, 2, 2, 2);
    oracle::Calls p = e;
    if (rng() % 2 && !p.empty()) p[rng() % p.size()] = oracle::perturb(p[0], rng, 2);
    std::shuffle(p.begin(), p.end(), rng);
    const auto b = score(e, oracle::render(p, rng, true));
    if (b.r_final != 1.0) continue;
    ++hits;
    CHECK(p.size() == e.size());
    CHECK(b.match.n_correct_functions == e.size());
    CHECK(b.match.argument_sum == Ratio::of(static_cast<std::int64_t>(e.size()), 1));
  }
  CHECK(hits > 100);
}

TEST_CASE("correcting an argument never lowers the reward") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 3000; ++i) {
    const auto e = oracle::random_calls(rng, 4, 3, 3, 3);
    if (e.empty()) continue;
    oracle::Calls p;
    for (const auto& c : e) p.push_back(oracle::perturb(c, rng, 3));
    std::shuffle(p.begin(), p.end(), rng);
    const auto before = score(e, oracle::render(p));
    for (const auto& pr : before.match.pairs) {
      const auto& ec = e[pr.expected_index];
      for (const auto& [k, v] : ec.args) {
        auto fixed = p;
        auto& target = fixed[pr.predicted_index].args;
        if (target.count(k) && target.at(k) == v) continue;
        target[k] = v;
        const auto after = score(e, oracle::render(fixed));
        CHECK(after.r_final >= before.r_final);
      }
    }
  }
}

TEST_CASE("appending an unmatched call strictly lowers the scaled sum") {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto e = oracle::random_calls(rng, 4, 3, 3, 2);
    oracle::Calls p;
    for (const auto& c : e) p.push_back(oracle::perturb(c, rng, 3));
    while (rng() % 2) p.push_back(oracle::random_call(rng, 3, 3, 2));
    if (p.size() < e.size()) continue;
    const auto before = score(e, oracle::render(p));
    auto longer = p;
    longer.push_back(oracle::Call{9, {}});
    const auto after = score(e, oracle::render(longer));
    const double s0 = before.r_fn_scaled + before.r_args_scaled;
    const double s1 = after.r_fn_scaled + after.r_args_scaled;
    if (s0 > 0.0) {
      CHECK(s1 < s0);
      ++checked;
    } else {
      CHECK(s1 == 0.0);
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("large name groups fall back without failing") {
  std::string expected = "[";
  std::string predicted = "[";
  for (int i = 0; i < 40; ++i) {
    if (i) {
      expected += ", ";
      predicted += ", ";
    }
    expected += R"({"name": "f", "arguments": {"i": )" + std::to_string(i) + "}}";
    predicted += R"({"name": "f", "arguments": {"i": )" + std::to_string(39 - i) + "}}";
  }
  expected += "]";
  predicted += "]";
  const auto b = compute_reward(predicted, parse_call_list(expected));
  CHECK(b.r_final == 1.0);
  CHECK(b.match.pairs.size() == 40);
}

TEST_CASE("batch scoring") {
  const auto expected = parse_call_list(kTableExpected);
  const std::vector<std::string> raws = {kTableFinetuned, std::string("x ") + kTableFinetuned};
  const std::vector<std::vector<ToolCall>> answers = {expected, expected};
  const auto out = reward_batch(raws, answers);
  REQUIRE(out.size() == 2);
  CHECK(out[0].r_final > 0.0);
  CHECK(out[1].r_final == 0.0);
  CHECK(reward_batch({}, {}).empty());
  CHECK_THROWS_AS(reward_batch(raws, std::vector<std::vector<ToolCall>>{expected}), SizeMismatchError);

  std::mt19937_64 rng(1);
  std::vector<std::string> many;
  std::vector<std::vector<ToolCall>> many_expected;
  for (int i = 0; i < 1000; ++i) {
    many_expected.push_back(parse_call_list(oracle::render(oracle::random_calls(rng, 3, 3, 3, 2))));
    many.push_back(oracle::render(oracle::random_calls(rng, 3, 3, 3, 2), rng, true));
  }
  const auto batch = reward_batch(many, many_expected);
  for (std::size_t i = 0; i < many.size(); ++i) {
    CHECK(batch[i].r_final == compute_reward(many[i], many_expected[i]).r_final);
  }
}

TEST_CASE("breakdown json") {
  const auto b = compute_reward(kTableBase, parse_call_list(kTableExpected));
  const auto j = nlohmann::json::parse(breakdown_to_json(b));
  CHECK(j["outcome"] == "calls");
  CHECK(j["r_final"].get<double>() == 0.5625);
  CHECK(j["n_correct_functions"] == 1);
  CHECK(j["pairs"].size() == 1);
  CHECK(j["pairs"][0]["expected"] == 1);
  CHECK(j["exact_match"] == false);

  const auto z = nlohmann::json::parse(breakdown_to_json(compute_reward("nope", {})));
  CHECK(z["outcome"] == "invalid_json");
  CHECK(z["r_final"].get<double>() == 0.0);
  CHECK(z["pairs"].is_null());
}

TEST_CASE("ratio arithmetic") {
  CHECK(Ratio::of(2, 4) == Ratio::of(1, 2));
  CHECK(Ratio::of(1, 3) + Ratio::of(1, 6) == Ratio::of(1, 2));
  CHECK(Ratio::of(1, 3) < Ratio::of(1, 2));
  CHECK_FALSE(Ratio::of(1, 2) < Ratio::of(2, 4));
  CHECK(Ratio::of(3, 4).to_double() == 0.75);
}
