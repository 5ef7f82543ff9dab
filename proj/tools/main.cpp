// toolreward: score tool-call completions, evaluate datasets, generate
// synthetic corpora and run the toy group-relative trainer.
//
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "toolreward/dataset.hpp"
#include "toolreward/errors.hpp"
#include "toolreward/eval.hpp"
#include "toolreward/grpo.hpp"
#include "toolreward/io.hpp"
#include "toolreward/reward.hpp"
#include "toolreward/synth.hpp"

namespace fs = std::filesystem;
using namespace toolreward;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(path, text);
  }
}

std::string score_table(const RewardBreakdown& b) {
  std::ostringstream out;
  char buf[96];
  auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%-15s %.6f\n", name, v);
    out << buf;
  };
  out << "outcome         " << outcome_name(b.outcome) << "\n";
  if (b.has_match) {
    out << "n_expected      " << b.match.n_expected << "\n"
        << "n_predicted     " << b.match.n_predicted << "\n"
        << "n_correct_fn    " << b.match.n_correct_functions << "\n";
    row("scaling_factor", b.match.scaling_factor);
  }
  row("r_json", b.r_json);
  row("r_fn", b.r_fn);
  row("r_args", b.r_args);
  row("r_fn_scaled", b.r_fn_scaled);
  row("r_args_scaled", b.r_args_scaled);
  row("r_final", b.r_final);
  out << "exact_match     " << (b.exact_match ? "yes" : "no") << "\n";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capability-aware reward scoring for structured tool-call outputs"};
  app.require_subcommand(1);

  std::string weights_text = "0.125,0.375,0.5";
  std::uint64_t seed = 0;
  std::string format;
  std::string output;

  // score
  auto* score = app.add_subcommand("score", "Score one completion against one expected answer");
  std::string completion, completion_file, expected, expected_file;
  auto* c_opt = score->add_option("--completion", completion, "Raw completion text");
  auto* cf_opt = score->add_option("--completion-file", completion_file, "File holding the raw completion");
  auto* e_opt = score->add_option("--expected", expected, "Expected answer as a JSON array of calls");
  auto* ef_opt = score->add_option("--expected-file", expected_file, "File holding the expected answer");
  c_opt->excludes(cf_opt);
  e_opt->excludes(ef_opt);
  score->add_option("--weights", weights_text, "w_json,w_fn,w_args")->capture_default_str();
  std::string score_format = "json";
  score->add_option("--format", score_format, "json or table")->check(CLI::IsMember({"json", "table"}))->capture_default_str();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a completions file against a dataset");
  std::string dataset_path, dataset_format = "jsonl", completions_path;
  std::size_t train_n = 0, test_n = 0;
  bool lenient = false;
  std::string label = "completions";
  eval->add_option("--dataset", dataset_path, "Dataset file")->required();
  eval->add_option("--dataset-format", dataset_format, "jsonl or json")->capture_default_str();
  eval->add_option("--completions", completions_path, "JSON-lines of {id, completion}")->required();
  eval->add_option("--weights", weights_text, "w_json,w_fn,w_args")->capture_default_str();
  eval->add_option("--format", format, "table, json or csv")->default_str("table");
  eval->add_option("--output,-o", output, "Output path (default stdout)");
  auto* train_opt = eval->add_option("--train-n", train_n, "Training split size (evaluation uses the test split)");
  auto* test_opt = eval->add_option("--test-n", test_n, "Test split size");
  train_opt->needs(test_opt);
  test_opt->needs(train_opt);
  eval->add_option("--seed", seed, "Split seed")->capture_default_str();
  eval->add_flag("--lenient-validity", lenient, "Count prose-wrapped JSON as valid (comparison only)");
  eval->add_option("--label", label, "Row label in the table output")->capture_default_str();

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic universe and planted corpus");
  std::size_t n_tools = 8, max_params = 3, values_per_param = 4, n_records = 100;
  std::uint64_t universe_seed = 7;
  std::string mix_text, out_prefix;
  bool inline_json = false;
  gen->add_option("--seed", seed, "Corpus seed")->capture_default_str();
  gen->add_option("--universe-seed", universe_seed, "Universe seed")->capture_default_str();
  gen->add_option("--n-tools", n_tools)->capture_default_str();
  gen->add_option("--max-params", max_params)->capture_default_str();
  gen->add_option("--values-per-param", values_per_param)->capture_default_str();
  gen->add_option("--records", n_records)->capture_default_str();
  gen->add_option("--mix", mix_text, "Error mix, e.g. invalid-json=0.1,extraneous=0.1,wrong-name=0.2");
  gen->add_option("--out-prefix", out_prefix, "Writes <prefix>.dataset.jsonl and <prefix>.completions.jsonl")
      ->required();
  gen->add_flag("--inline", inline_json, "Write answers/tools as in-line JSON instead of JSON strings");

  // train-toy
  auto* train = app.add_subcommand("train-toy", "Run the toy group-relative policy-gradient trainer");
  TrainerConfig config;
  std::string curve_path;
  std::size_t window = 100;
  train->add_option("--seed", config.seed)->capture_default_str();
  train->add_option("--group-size", config.group_size)->capture_default_str();
  train->add_option("--lr", config.learning_rate)->capture_default_str();
  train->add_option("--steps", config.max_steps)->capture_default_str();
  train->add_option("--weights", weights_text, "w_json,w_fn,w_args")->capture_default_str();
  train->add_option("--universe-seed", universe_seed)->capture_default_str();
  train->add_option("--n-tools", n_tools)->capture_default_str();
  train->add_option("--max-params", max_params)->capture_default_str();
  train->add_option("--curve", curve_path, "Write the per-step curve (tab-separated) here");
  train->add_option("--window", window, "Summary window in steps")->capture_default_str();
  train->add_option("--format", format, "Summary format: table, json or csv")->default_str("table");

  // report
  auto* report = app.add_subcommand("report", "Render a training curve or an evaluation report");
  std::string curve_in, eval_in;
  auto* curve_opt = report->add_option("--curve", curve_in, "Curve file written by train-toy");
  auto* eval_opt = report->add_option("--eval", eval_in, "Evaluation report (.json or .csv)");
  curve_opt->excludes(eval_opt);
  report->add_option("--window", window, "Window in steps for curves")->capture_default_str();
  report->add_option("--format", format, "table, json or csv")->default_str("table");
  report->add_option("--output,-o", output, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RewardWeights weights = parse_weights(weights_text);
    const ReportFormat report_format = parse_report_format(format.empty() ? "table" : format);

    if (score->parsed()) {
      if (c_opt->count() == 0 && cf_opt->count() == 0) throw CLI::RequiredError("--completion or --completion-file");
      if (e_opt->count() == 0 && ef_opt->count() == 0) throw CLI::RequiredError("--expected or --expected-file");
      const std::string raw = cf_opt->count() ? read_text_file(completion_file) : completion;
      const std::string exp_text = ef_opt->count() ? read_text_file(expected_file) : expected;
      const auto expected_calls = parse_call_list(exp_text);
      const RewardBreakdown b = compute_reward(raw, expected_calls, weights);
      std::cout << (score_format == "json" ? breakdown_to_json(b) + "\n" : score_table(b));
      return kExitOk;
    }

    if (eval->parsed()) {
      LoadResult loaded = load_dataset(dataset_path, parse_dataset_format(dataset_format));
      for (const auto& bad : loaded.malformed) {
        std::cerr << "malformed record at " << bad.line << (bad.id.empty() ? "" : " (id " + bad.id + ")") << ": "
                  << bad.message << "\n";
      }
      if (!loaded.malformed.empty()) std::cerr << loaded.malformed.size() << " malformed record(s) skipped\n";
      std::vector<DatasetRecord> records = std::move(loaded.records);
      if (train_opt->count()) records = split_sample(records, train_n, test_n, seed).test;
      const auto completions = load_completions(completions_path);
      const EvalReport rep = evaluate(records, completions, EvalOptions{weights, lenient});
      if (rep.n_missing) std::cerr << rep.n_missing << " record(s) had no completion and were scored as empty\n";
      write_output(render_report(rep, report_format, label), output);
      return kExitOk;
    }

    if (gen->parsed()) {
      const SynthUniverse universe = generate_universe(universe_seed, n_tools, max_params, values_per_param);
      const PlantedCorpus corpus = plant_corpus(universe, seed, n_records, parse_error_mix(mix_text));
      std::vector<DatasetRecord> records;
      std::ostringstream comp;
      for (const auto& p : corpus.records) {
        records.push_back(p.record);
        comp << serialize(JsonValue::Object{{"id", JsonValue(p.record.id)},
                                            {"completion", JsonValue(p.completion)},
                                            {"planted", JsonValue(std::string(error_mode_name(p.planted)))}})
             << '\n';
      }
      write_dataset(fs::path(out_prefix + ".dataset.jsonl"), records, !inline_json);
      write_text_file(out_prefix + ".completions.jsonl", comp.str());
      for (const auto& [mode, rate] : corpus.planted_rates) {
        std::printf("%-16s %.6f\n", std::string(error_mode_name(mode)).c_str(), rate);
      }
      return kExitOk;
    }

    if (train->parsed()) {
      config.weights = weights;
      const SynthUniverse universe = generate_universe(universe_seed, n_tools, max_params);
      const TrainingRun run = train_toy_policy(config, universe);
      if (!curve_path.empty()) write_curve(fs::path(curve_path), run.curve);
      std::cout << render_curve_stats(curve_stats(run.curve, window), report_format);
      return kExitOk;
    }

    if (report->parsed()) {
      if (curve_opt->count()) {
        write_output(render_curve_stats(curve_stats(read_curve(curve_in), window), report_format), output);
      } else if (eval_opt->count()) {
        const std::string text = read_text_file(eval_in);
        const EvalReport rep = fs::path(eval_in).extension() == ".csv" ? parse_report_csv(text) : parse_report_json(text);
        write_output(render_report(rep, report_format), output);
      } else {
        throw CLI::RequiredError("--curve or --eval");
      }
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
