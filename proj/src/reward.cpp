#include "toolreward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>

#include <json.hpp>

#include "toolreward/io.hpp"

namespace toolreward {

RewardWeights parse_weights(std::string_view text) {
  double parts[3];
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    if (count == 3) throw ValidationError("weights take exactly three values");
    const std::string token(trim(text.substr(pos, comma - pos)));
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size() || !std::isfinite(v) || v < 0.0) {
      throw ValidationError("bad weight '" + token + "': expected a finite value >= 0");
    }
    parts[count++] = v;
    pos = comma + 1;
  }
  if (count != 3) throw ValidationError("weights take exactly three values: w_json,w_fn,w_args");
  return RewardWeights{parts[0], parts[1], parts[2]};
}

namespace {

__extension__ typedef __int128 Wide;

}  // namespace

Ratio Ratio::of(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) throw std::invalid_argument("Ratio requires num >= 0 and den > 0");
  const std::int64_t g = std::gcd(num, den);
  return Ratio{num / g, den / g};
}

Ratio Ratio::operator+(const Ratio& other) const {
  const Wide n = static_cast<Wide>(num) * other.den + static_cast<Wide>(other.num) * den;
  const Wide d = static_cast<Wide>(den) * other.den;
  Wide a = n, b = d;
  while (b != 0) {
    const Wide t = a % b;
    a = b;
    b = t;
  }
  const Wide rn = n / a, rd = d / a;
  constexpr Wide kMax = std::numeric_limits<std::int64_t>::max();
  if (rn > kMax || rd > kMax) throw std::overflow_error("Ratio overflow");
  return Ratio{static_cast<std::int64_t>(rn), static_cast<std::int64_t>(rd)};
}

bool operator<(const Ratio& a, const Ratio& b) {
  return static_cast<Wide>(a.num) * b.den < static_cast<Wide>(b.num) * a.den;
}

namespace {

std::size_t matching_arguments(const ToolCall& expected, const ToolCall& predicted) {
  std::size_t hits = 0;
  for (const auto& [key, value] : expected.arguments) {
    const JsonValue* got = predicted.argument(key);
    if (got && canonical_equal(*got, value)) ++hits;
  }
  return hits;
}

}  // namespace

Ratio argument_score(const ToolCall& expected, const ToolCall& predicted) {
  if (expected.arguments.empty()) return Ratio{1, 1};
  return Ratio::of(static_cast<std::int64_t>(matching_arguments(expected, predicted)),
                   static_cast<std::int64_t>(expected.arguments.size()));
}

Ratio MatchedPair::exact_score() const {
  if (expected_args == 0) return Ratio{1, 1};
  return Ratio::of(static_cast<std::int64_t>(matched_args), static_cast<std::int64_t>(expected_args));
}

namespace {

// One name's share of the matching problem: rows are expected calls, columns
// predicted calls, all with the same name.
class NameGroupMatcher {
 public:
  NameGroupMatcher(std::vector<std::size_t> rows, std::vector<std::size_t> cols,
                   std::vector<std::vector<Ratio>> scores)
      : rows_(std::move(rows)),
        cols_(std::move(cols)),
        scores_(std::move(scores)),
        target_(std::min(rows_.size(), cols_.size())) {}

  // Returns (row position, column position) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> solve() {
    if (target_ == 0) return {};
    if (cols_.size() <= 63 && estimated_states() <= static_cast<double>(kExactMatchStates)) return exact();
    return greedy();
  }

 private:
  double estimated_states() const {
    // Reachable (row, used-column-set) states, bounded by sum of C(cols, m).
    double total = 0.0;
    const double n = static_cast<double>(cols_.size());
    for (std::size_t i = 0; i <= rows_.size(); ++i) {
      double binom = 1.0;
      for (std::size_t m = 0; m <= std::min(i, target_); ++m) {
        if (m > 0) binom = binom * (n - static_cast<double>(m - 1)) / static_cast<double>(m);
        total += binom;
      }
    }
    return total;
  }

  std::size_t needed(std::uint64_t mask) const {
    return target_ - static_cast<std::size_t>(__builtin_popcountll(mask));
  }

  // Best achievable score for rows [row, end) given the used-column mask, or
  // nullopt when the target cardinality can no longer be reached.
  std::optional<Ratio> best(std::size_t row, std::uint64_t mask) {
    const std::size_t need = needed(mask);
    if (need > rows_.size() - row) return std::nullopt;
    if (row == rows_.size()) return Ratio{0, 1};
    const auto key = std::make_pair(row, mask);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::optional<Ratio> result;
    if (need > 0) {
      for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (mask & (1ULL << c)) continue;
        if (auto rest = best(row + 1, mask | (1ULL << c))) {
          Ratio cand = scores_[row][c] + *rest;
          if (!result || *result < cand) result = cand;
        }
      }
    }
    if (auto rest = best(row + 1, mask)) {
      if (!result || *result < *rest) result = *rest;
    }
    memo_.emplace(key, result);
    return result;
  }

  std::vector<std::pair<std::size_t, std::size_t>> exact() {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::uint64_t mask = 0;
    for (std::size_t row = 0; row < rows_.size(); ++row) {
      const Ratio goal = *best(row, mask);
      bool taken = false;
      if (needed(mask) > 0) {
        for (std::size_t c = 0; c < cols_.size() && !taken; ++c) {
          if (mask & (1ULL << c)) continue;
          auto rest = best(row + 1, mask | (1ULL << c));
          if (rest && scores_[row][c] + *rest == goal) {
            out.emplace_back(row, c);
            mask |= 1ULL << c;
            taken = true;
          }
        }
      }
      // Otherwise skipping this row is optimal.
    }
    return out;
  }

  std::vector<std::pair<std::size_t, std::size_t>> greedy() const {
    std::vector<std::pair<std::size_t, std::size_t>> cand;
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t c = 0; c < cols_.size(); ++c) cand.emplace_back(r, c);
    std::stable_sort(cand.begin(), cand.end(), [&](const auto& x, const auto& y) {
      return scores_[y.first][y.second] < scores_[x.first][x.second];
    });
    std::vector<bool> row_used(rows_.size()), col_used(cols_.size());
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [r, c] : cand) {
      if (row_used[r] || col_used[c]) continue;
      row_used[r] = col_used[c] = true;
      out.emplace_back(r, c);
      if (out.size() == target_) break;
    }
    return out;
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<std::size_t, std::uint64_t>& k) const {
      return std::hash<std::uint64_t>{}(k.second * 0x9E3779B97F4A7C15ULL ^ k.first);
    }
  };

  std::vector<std::size_t> rows_;
  std::vector<std::size_t> cols_;
  std::vector<std::vector<Ratio>> scores_;
  std::size_t target_;
  std::unordered_map<std::pair<std::size_t, std::uint64_t>, std::optional<Ratio>, KeyHash> memo_;
};

bool same_multiset(std::span<const ToolCall> a, std::span<const ToolCall> b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& call : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j) {
      if (!used[j] && call == b[j]) used[j] = found = true;
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

MatchReport match_calls(std::span<const ToolCall> expected, std::span<const ToolCall> predicted) {
  MatchReport report;
  report.n_expected = expected.size();
  report.n_predicted = predicted.size();

  std::map<std::string_view, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < expected.size(); ++i) groups[expected[i].name].first.push_back(i);
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    auto it = groups.find(predicted[j].name);
    if (it != groups.end()) it->second.second.push_back(j);
  }

  for (auto& [name, group] : groups) {
    auto& [rows, cols] = group;
    if (cols.empty()) continue;
    std::vector<std::vector<Ratio>> scores(rows.size(), std::vector<Ratio>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        scores[r][c] = argument_score(expected[rows[r]], predicted[cols[c]]);
    NameGroupMatcher matcher(rows, cols, scores);
    for (const auto& [r, c] : matcher.solve()) {
      const ToolCall& e = expected[rows[r]];
      const std::size_t hits = matching_arguments(e, predicted[cols[c]]);
      report.pairs.push_back(MatchedPair{rows[r], cols[c], hits, e.arguments.size(), scores[r][c].to_double()});
    }
  }
  std::sort(report.pairs.begin(), report.pairs.end(),
            [](const MatchedPair& x, const MatchedPair& y) { return x.expected_index < y.expected_index; });
  report.n_correct_functions = report.pairs.size();
  for (const auto& p : report.pairs) report.argument_sum = report.argument_sum + p.exact_score();
  if (report.n_predicted > report.n_expected) {
    report.scaling_factor = static_cast<double>(std::max<std::size_t>(report.n_expected, 1)) /
                            static_cast<double>(report.n_predicted);
  }
  return report;
}

RewardBreakdown score_outcome(const ParseOutcome& outcome, std::span<const ToolCall> expected,
                              const RewardWeights& weights) {
  RewardBreakdown b;
  b.outcome = kind_of(outcome);
  if (b.outcome == OutcomeKind::NonConforming) {
    b.r_json = weights.json;
    b.r_final = b.r_fn_scaled + b.r_args_scaled + b.r_json;
    return b;
  }
  const auto* list = std::get_if<CallList>(&outcome);
  if (!list) return b;  // extraneous text, invalid JSON, empty: all zero

  const auto& predicted = list->calls;
  b.has_match = true;
  b.match = match_calls(expected, predicted);
  b.r_json = weights.json;
  if (expected.empty() && predicted.empty()) {
    b.r_fn = weights.fn;
    b.r_args = weights.args;
  } else {
    const double denom = static_cast<double>(std::max<std::size_t>(expected.size(), 1));
    b.r_fn = weights.fn * static_cast<double>(b.match.n_correct_functions) / denom;
    b.r_args = weights.args * static_cast<double>(b.match.argument_sum.num) /
               (static_cast<double>(b.match.argument_sum.den) * denom);
  }
  b.r_fn_scaled = b.r_fn * b.match.scaling_factor;
  b.r_args_scaled = b.r_args * b.match.scaling_factor;
  b.r_final = b.r_fn_scaled + b.r_args_scaled + b.r_json;
  b.exact_match = same_multiset(expected, predicted);
  return b;
}

RewardBreakdown compute_reward(std::string_view raw, std::span<const ToolCall> expected,
                               const RewardWeights& weights) {
  return score_outcome(parse_completion(raw), expected, weights);
}

std::vector<RewardBreakdown> reward_batch(std::span<const std::string> raws,
                                          std::span<const std::vector<ToolCall>> expected,
                                          const RewardWeights& weights) {
  if (raws.size() != expected.size()) throw SizeMismatchError(raws.size(), expected.size());
  std::vector<RewardBreakdown> out;
  out.reserve(raws.size());
  for (std::size_t i = 0; i < raws.size(); ++i) out.push_back(compute_reward(raws[i], expected[i], weights));
  return out;
}

std::string breakdown_to_json(const RewardBreakdown& b) {
  nlohmann::ordered_json j;
  j["outcome"] = std::string(outcome_name(b.outcome));
  j["r_json"] = b.r_json;
  j["r_fn"] = b.r_fn;
  j["r_args"] = b.r_args;
  j["scaling_factor"] = b.has_match ? b.match.scaling_factor : 1.0;
  j["r_fn_scaled"] = b.r_fn_scaled;
  j["r_args_scaled"] = b.r_args_scaled;
  j["r_final"] = b.r_final;
  j["exact_match"] = b.exact_match;
  if (b.has_match) {
    j["n_expected"] = b.match.n_expected;
    j["n_predicted"] = b.match.n_predicted;
    j["n_correct_functions"] = b.match.n_correct_functions;
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& p : b.match.pairs) {
      pairs.push_back({{"expected", p.expected_index}, {"predicted", p.predicted_index}, {"score", p.score}});
    }
    j["pairs"] = std::move(pairs);
  } else {
    j["n_expected"] = nullptr;
    j["n_predicted"] = nullptr;
    j["n_correct_functions"] = nullptr;
    j["pairs"] = nullptr;
  }
  return j.dump();
}

}  // namespace toolreward
