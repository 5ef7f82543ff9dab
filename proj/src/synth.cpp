#include "toolreward/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "toolreward/errors.hpp"
#include "toolreward/io.hpp"

namespace toolreward {

namespace {

constexpr std::array<std::string_view, 16> kVerbs = {"get",   "search",    "convert",  "fetch",   "list",     "create",
                                                     "check", "find",      "compute",  "track",   "book",     "translate",
                                                     "render", "validate", "estimate", "lookup"};
constexpr std::array<std::string_view, 16> kNouns = {"weather", "stock",   "flight",   "recipe",  "news",    "movie",
                                                     "hotel",   "qrcode",  "playlist", "timezone", "holiday", "invoice",
                                                     "vehicle", "podcast", "lyrics",   "airport"};
// Disjoint from kVerbs and kNouns.
constexpr std::array<std::string_view, 20> kParams = {"city",    "units",  "limit",    "query",    "currency",
                                                      "amount",  "date",   "language", "format",   "size",
                                                      "url",     "password", "penalty", "radius",  "category",
                                                      "page",    "symbol", "country",  "year",     "level"};
constexpr std::array<std::string_view, 24> kWords = {
    "paris", "tokyo",  "berlin", "json",     "csv",    "metric", "imperial",    "en",
    "fr",    "blue",   "alpha",  "beta",     "secure123", "example.com", "sports", "music",
    "usd",   "eur",    "daily",  "weekly",   "north",  "south",  "latest",      "archive"};
constexpr std::array<std::string_view, 4> kTypes = {"str", "int", "float", "bool"};
constexpr std::array<std::string_view, kErrorModeCount> kModeNames = {
    "perfect", "extraneous-text", "invalid-json", "wrong-name", "wrong-arg-value", "missing-arg", "extra-call"};

struct Framing {
  std::string_view prefix;
  std::string_view suffix;
};
constexpr std::array<Framing, 4> kExtraneousFramings = {{
    {"This is the correct tool call: ", ""},
    {"Sure! Here is the call:\n", ""},
    {"", "\nLet me know if you need anything else."},
    {"```json\n", "\n```"},
}};

// k distinct picks from [0, n) in draw order.
std::vector<std::size_t> distinct_indices(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  idx.resize(std::min(k, n));
  return idx;
}

std::vector<JsonValue> make_pool(Rng& rng, std::string_view type, std::size_t size) {
  std::vector<JsonValue> pool;
  if (type == "str") {
    for (auto i : distinct_indices(rng, kWords.size(), size)) pool.emplace_back(std::string(kWords[i]));
  } else if (type == "int") {
    for (auto i : distinct_indices(rng, 100, size)) pool.emplace_back(static_cast<std::int64_t>(i + 1));
  } else if (type == "float") {
    // k/10 for k in 1..99, never integer-valued so it cannot collide with int pools.
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k < 100; ++k)
      if (k % 10 != 0) ks.push_back(k);
    for (auto i : distinct_indices(rng, ks.size(), size)) {
      const std::size_t k = ks[i];
      pool.push_back(JsonValue::number(std::to_string(k / 10) + "." + std::to_string(k % 10)));
    }
  } else {
    pool.emplace_back(true);
    if (size > 1) pool.emplace_back(false);
  }
  return pool;
}

std::string render_args(const ToolCall& call) {
  if (call.arguments.empty()) return "no arguments";
  std::string out;
  for (const auto& [k, v] : call.arguments) {
    if (!out.empty()) out += ", ";
    out += k + "=" + serialize(v);
  }
  return out;
}

}  // namespace

std::vector<ToolSpec> SynthUniverse::catalog() const {
  std::vector<ToolSpec> out;
  out.reserve(tools.size());
  for (const auto& t : tools) out.push_back(t.spec);
  return out;
}

void SynthUniverse::validate() const {
  if (tools.empty()) throw ValidationError("universe has no tools");
  for (const auto& t : tools) {
    if (t.value_pools.size() != t.spec.parameters.size())
      throw ValidationError("tool '" + t.spec.name + "' has mismatched value pools");
    for (const auto& pool : t.value_pools)
      if (pool.empty()) throw ValidationError("tool '" + t.spec.name + "' has an empty value pool");
  }
  for (const auto& tpl : templates) {
    for (const auto& call : tpl.calls) {
      if (call.tool >= tools.size()) throw ValidationError("template references unknown tool");
      std::vector<std::size_t> seen;
      for (auto p : call.params) {
        if (p >= tools[call.tool].spec.parameters.size()) throw ValidationError("template references unknown parameter");
        if (std::find(seen.begin(), seen.end(), p) != seen.end()) throw ValidationError("template repeats a parameter");
        seen.push_back(p);
      }
    }
  }
}

QueryInstance SynthUniverse::instantiate(std::size_t template_index,
                                         std::vector<std::vector<std::size_t>> value_choice) const {
  const QueryTemplate& tpl = templates.at(template_index);
  if (value_choice.size() != tpl.calls.size()) throw ValidationError("value choice does not match template");
  QueryInstance inst;
  inst.template_index = template_index;
  inst.query = tpl.text;
  for (std::size_t c = 0; c < tpl.calls.size(); ++c) {
    const TemplateCall& slot = tpl.calls[c];
    const SynthTool& tool = tools.at(slot.tool);
    if (value_choice[c].size() != slot.params.size()) throw ValidationError("value choice does not match template");
    ToolCall call{tool.spec.name, {}};
    for (std::size_t k = 0; k < slot.params.size(); ++k) {
      const std::size_t p = slot.params[k];
      call.arguments.emplace_back(tool.spec.parameters[p].name, tool.value_pools[p].at(value_choice[c][k]));
    }
    const std::string marker = "{" + std::to_string(c) + "}";
    if (auto pos = inst.query.find(marker); pos != std::string::npos)
      inst.query.replace(pos, marker.size(), render_args(call));
    inst.answer.push_back(std::move(call));
  }
  inst.value_choice = std::move(value_choice);
  return inst;
}

QueryInstance SynthUniverse::instantiate(std::size_t template_index, Rng& rng) const {
  const QueryTemplate& tpl = templates.at(template_index);
  std::vector<std::vector<std::size_t>> choice;
  for (const auto& slot : tpl.calls) {
    std::vector<std::size_t> per_param;
    for (auto p : slot.params) per_param.push_back(static_cast<std::size_t>(rng.below(tools.at(slot.tool).value_pools.at(p).size())));
    choice.push_back(std::move(per_param));
  }
  return instantiate(template_index, std::move(choice));
}

SynthUniverse generate_universe(std::uint64_t seed, std::size_t n_tools, std::size_t max_params,
                                std::size_t values_per_param) {
  if (n_tools == 0) throw ValidationError("a universe needs at least one tool");
  if (max_params > kParams.size())
    throw ValidationError("max_params is limited to " + std::to_string(kParams.size()));
  if (values_per_param == 0) throw ValidationError("values_per_param must be >= 1");

  Rng rng(seed);
  std::vector<std::string> names;
  for (auto v : kVerbs)
    for (auto n : kNouns) names.push_back(std::string(v) + "_" + std::string(n));
  rng.shuffle(names);

  SynthUniverse u;
  for (std::size_t i = 0; i < n_tools; ++i) {
    SynthTool tool;
    tool.spec.name = names[i % names.size()];
    if (i >= names.size()) tool.spec.name += "_" + std::to_string(i / names.size() + 1);
    tool.spec.description = "Synthetic tool " + tool.spec.name + ".";
    const std::size_t n_params = static_cast<std::size_t>(rng.below(max_params + 1));
    for (auto p : distinct_indices(rng, kParams.size(), n_params)) {
      const std::string_view type = kTypes[rng.below(kTypes.size())];
      tool.spec.parameters.push_back(
          ParamSpec{std::string(kParams[p]), std::string(type), true, "The " + std::string(kParams[p]) + "."});
      tool.value_pools.push_back(make_pool(rng, type, values_per_param));
    }
    u.tools.push_back(std::move(tool));
  }

  auto all_params = [&](std::size_t t) {
    std::vector<std::size_t> ps(u.tools[t].spec.parameters.size());
    std::iota(ps.begin(), ps.end(), std::size_t{0});
    return ps;
  };
  for (std::size_t t = 0; t < n_tools; ++t) {
    u.templates.push_back(QueryTemplate{"Please call " + u.tools[t].spec.name + " with {0}.", {{t, all_params(t)}}});
  }
  for (std::size_t t = 0; t + 1 < n_tools; t += 2) {
    u.templates.push_back(QueryTemplate{"Please call " + u.tools[t].spec.name + " with {0}, then call " +
                                            u.tools[t + 1].spec.name + " with {1}.",
                                        {{t, all_params(t)}, {t + 1, all_params(t + 1)}}});
  }
  return u;
}

SynthUniverse default_universe() { return generate_universe(7, 8, 3); }

std::string_view error_mode_name(ErrorMode mode) { return kModeNames.at(static_cast<std::size_t>(mode)); }

std::optional<ErrorMode> error_mode_from_name(std::string_view name) {
  if (name == "extraneous") return ErrorMode::ExtraneousText;
  auto it = std::find(kModeNames.begin(), kModeNames.end(), name);
  if (it == kModeNames.end()) return std::nullopt;
  return static_cast<ErrorMode>(it - kModeNames.begin());
}

void check_error_mix(const ErrorMix& mix) {
  double total = 0.0;
  for (const auto& [mode, frac] : mix) {
    if (mode == ErrorMode::Perfect) throw ValidationError("'perfect' is the remainder and cannot be set");
    if (!(frac >= 0.0 && frac <= 1.0)) throw ValidationError("error fractions must lie in [0, 1]");
    total += frac;
  }
  if (total > 1.0 + 1e-12) throw ValidationError("error fractions sum to " + std::to_string(total) + " > 1");
}

ErrorMix parse_error_mix(std::string_view text) {
  ErrorMix mix;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = trim(text.substr(pos, comma - pos));
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw ValidationError("error mix entry '" + std::string(item) + "' lacks '='");
    const std::string_view key = trim(item.substr(0, eq));
    auto mode = error_mode_from_name(key);
    if (!mode) throw ValidationError("unknown error mode '" + std::string(key) + "'");
    const std::string value(trim(item.substr(eq + 1)));
    char* end = nullptr;
    const double frac = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size())
      throw ValidationError("bad fraction '" + value + "' in error mix");
    if (!mix.emplace(*mode, frac).second) throw ValidationError("error mode '" + std::string(key) + "' given twice");
    pos = comma + 1;
  }
  check_error_mix(mix);
  return mix;
}

std::map<ErrorMode, std::size_t> quota_counts(const ErrorMix& mix, std::size_t n_records) {
  check_error_mix(mix);

  const double n = static_cast<double>(n_records);
  auto snap = [](double q) {
    const double r = std::round(q);
    return std::abs(q - r) < 1e-9 ? r : q;
  };
  std::array<double, kErrorModeCount> quota{};
  double error_quota = 0.0;
  for (const auto& [mode, frac] : mix) {
    quota[static_cast<std::size_t>(mode)] = snap(frac * n);
    error_quota += frac * n;
  }
  quota[static_cast<std::size_t>(ErrorMode::Perfect)] = std::max(0.0, snap(n - error_quota));

  std::array<std::size_t, kErrorModeCount> seats{};
  std::size_t assigned = 0;
  for (std::size_t m = 0; m < kErrorModeCount; ++m) {
    seats[m] = static_cast<std::size_t>(std::floor(quota[m]));
    assigned += seats[m];
  }
  std::vector<std::size_t> order(kErrorModeCount);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
  });
  for (std::size_t k = 0; assigned < n_records && k < order.size(); ++k, ++assigned) ++seats[order[k]];

  std::map<ErrorMode, std::size_t> out;
  for (std::size_t m = 0; m < kErrorModeCount; ++m) out[static_cast<ErrorMode>(m)] = seats[m];
  return out;
}

PlantedCorpus plant_corpus(const SynthUniverse& universe, std::uint64_t seed, std::size_t n_records,
                           const ErrorMix& mix) {
  universe.validate();
  if (universe.templates.empty()) throw ValidationError("universe has no query templates");
  const auto counts = quota_counts(mix, n_records);

  std::vector<std::size_t> with_args;
  for (std::size_t t = 0; t < universe.templates.size(); ++t) {
    const auto& calls = universe.templates[t].calls;
    if (std::any_of(calls.begin(), calls.end(), [](const TemplateCall& c) { return !c.params.empty(); }))
      with_args.push_back(t);
  }
  if (with_args.empty() && (counts.at(ErrorMode::WrongArgValue) > 0 || counts.at(ErrorMode::MissingArg) > 0))
    throw ValidationError("argument-level error modes need a template with arguments");

  std::vector<ErrorMode> tags;
  tags.reserve(n_records);
  for (const auto& [mode, count] : counts) tags.insert(tags.end(), count, mode);
  Rng rng(seed);
  rng.shuffle(tags);

  PlantedCorpus corpus;
  corpus.records.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    const ErrorMode mode = tags[i];
    const bool needs_args = mode == ErrorMode::WrongArgValue || mode == ErrorMode::MissingArg;
    const std::size_t t = needs_args ? with_args[rng.below(with_args.size())]
                                     : static_cast<std::size_t>(rng.below(universe.templates.size()));
    QueryInstance inst = universe.instantiate(t, rng);
    const QueryTemplate& tpl = universe.templates[t];

    DatasetRecord rec;
    rec.id = static_cast<std::int64_t>(i);
    rec.query = inst.query;
    rec.answers = inst.answer;
    std::vector<std::size_t> listed;
    for (const auto& slot : tpl.calls)
      if (std::find(listed.begin(), listed.end(), slot.tool) == listed.end()) listed.push_back(slot.tool);
    if (listed.size() < universe.tools.size()) {
      // One distractor the answer does not use.
      std::size_t d;
      do {
        d = static_cast<std::size_t>(rng.below(universe.tools.size()));
      } while (std::find(listed.begin(), listed.end(), d) != listed.end());
      listed.push_back(d);
    }
    for (auto idx : listed) rec.tools.push_back(universe.tools[idx].spec);

    std::vector<ToolCall> predicted = inst.answer;
    std::string completion;
    auto call_with_args = [&]() {
      std::vector<std::size_t> c;
      for (std::size_t k = 0; k < predicted.size(); ++k)
        if (!predicted[k].arguments.empty()) c.push_back(k);
      return c[rng.below(c.size())];
    };
    switch (mode) {
      case ErrorMode::Perfect:
        completion = serialize_calls(predicted);
        break;
      case ErrorMode::ExtraneousText: {
        const Framing& f = kExtraneousFramings[rng.below(kExtraneousFramings.size())];
        completion = std::string(f.prefix) + serialize_calls(predicted) + std::string(f.suffix);
        break;
      }
      case ErrorMode::InvalidJson:
        completion = serialize_calls(predicted);
        completion.pop_back();  // drop the closing bracket
        break;
      case ErrorMode::WrongName:
        if (!predicted.empty()) predicted[rng.below(predicted.size())].name += "_generator";
        completion = serialize_calls(predicted);
        break;
      case ErrorMode::WrongArgValue: {
        const std::size_t c = call_with_args();
        const std::size_t slot_param = static_cast<std::size_t>(rng.below(predicted[c].arguments.size()));
        const std::size_t p = tpl.calls[c].params[slot_param];
        const auto& pool = universe.tools[tpl.calls[c].tool].value_pools[p];
        if (pool.size() > 1) {
          const std::size_t current = inst.value_choice[c][slot_param];
          std::size_t other = static_cast<std::size_t>(rng.below(pool.size() - 1));
          if (other >= current) ++other;
          predicted[c].arguments[slot_param].second = pool[other];
        } else {
          predicted[c].arguments[slot_param].second = JsonValue(nullptr);
        }
        completion = serialize_calls(predicted);
        break;
      }
      case ErrorMode::MissingArg: {
        const std::size_t c = call_with_args();
        auto& args = predicted[c].arguments;
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(rng.below(args.size())));
        completion = serialize_calls(predicted);
        break;
      }
      case ErrorMode::ExtraCall: {
        std::vector<std::size_t> unused;
        for (std::size_t k = 0; k < universe.tools.size(); ++k) {
          const auto& name = universe.tools[k].spec.name;
          if (std::none_of(predicted.begin(), predicted.end(), [&](const ToolCall& c) { return c.name == name; }))
            unused.push_back(k);
        }
        if (!unused.empty()) {
          const SynthTool& tool = universe.tools[unused[rng.below(unused.size())]];
          ToolCall extra{tool.spec.name, {}};
          for (std::size_t p = 0; p < tool.spec.parameters.size(); ++p)
            extra.arguments.emplace_back(tool.spec.parameters[p].name, tool.value_pools[p][0]);
          predicted.push_back(std::move(extra));
        } else {
          predicted.push_back(predicted.empty() ? ToolCall{universe.tools[0].spec.name, {}} : predicted.back());
        }
        completion = serialize_calls(predicted);
        break;
      }
    }
    corpus.records.push_back(PlantedRecord{std::move(rec), std::move(completion), mode});
  }

  for (const auto& [mode, count] : counts) {
    corpus.planted_rates[mode] = n_records == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(n_records);
  }
  return corpus;
}

}  // namespace toolreward
