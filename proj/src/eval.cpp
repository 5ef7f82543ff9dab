#include "toolreward/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "toolreward/errors.hpp"
#include "toolreward/io.hpp"

namespace toolreward {

EvalReport summarize(std::vector<RecordResult> rows) {
  EvalReport r;
  r.n_records = rows.size();
  std::size_t valid = 0, exact = 0;
  std::uint64_t chars = 0;
  std::vector<double> rewards;
  rewards.reserve(rows.size());
  for (const auto& row : rows) {
    valid += row.json_valid ? 1 : 0;
    exact += row.exact_match ? 1 : 0;
    chars += row.completion_chars;
    r.n_missing += row.missing ? 1 : 0;
    rewards.push_back(row.r_final);
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    std::sort(rewards.begin(), rewards.end());
    double total = 0.0;
    for (double v : rewards) total += v;
    r.json_validity = static_cast<double>(valid) / n;
    r.overall_accuracy = static_cast<double>(exact) / n;
    r.mean_reward = total / n;
    r.mean_completion_chars = static_cast<double>(chars) / n;
  }
  r.records = std::move(rows);
  return r;
}

EvalReport evaluate(const std::vector<DatasetRecord>& records, const std::map<std::int64_t, std::string>& completions,
                    const EvalOptions& options) {
  std::vector<RecordResult> rows;
  rows.reserve(records.size());
  std::size_t matched_ids = 0;
  static const std::string kNone;
  for (const auto& rec : records) {
    auto it = completions.find(rec.id);
    const bool missing = it == completions.end();
    matched_ids += missing ? 0 : 1;
    const std::string& text = missing ? kNone : it->second;
    const RewardBreakdown b = compute_reward(text, rec.answers, options.weights);
    RecordResult row;
    row.id = rec.id;
    row.r_final = b.r_final;
    row.outcome = b.outcome;
    row.exact_match = b.exact_match;
    row.json_valid = is_syntactically_valid(b.outcome) ||
                     (options.lenient_json_validity && b.outcome == OutcomeKind::ExtraneousText);
    row.completion_chars = text.size();
    row.missing = missing;
    rows.push_back(row);
  }
  EvalReport report = summarize(std::move(rows));
  report.n_unknown_ids = completions.size() - matched_ids;
  if (report.json_validity < report.overall_accuracy) {
    throw std::logic_error("json_validity fell below overall_accuracy");
  }
  return report;
}

EvalReport evaluate(const PlantedCorpus& corpus, const EvalOptions& options) {
  std::vector<DatasetRecord> records;
  std::map<std::int64_t, std::string> completions;
  records.reserve(corpus.records.size());
  for (const auto& p : corpus.records) {
    records.push_back(p.record);
    completions[p.record.id] = p.completion;
  }
  return evaluate(records, completions, options);
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table" || name == "human-table") return ReportFormat::HumanTable;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw ValidationError("unknown report format '" + std::string(name) + "' (want table, json or csv)");
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr std::string_view kCsvHeader = "id,r_final,outcome,exact_match,json_valid,completion_chars,missing";

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format, std::string_view label) {
  switch (format) {
    case ReportFormat::HumanTable: {
      const std::string name(label);
      const std::size_t w = std::max<std::size_t>(name.size(), 5);
      const std::string rule = "+" + std::string(w + 2, '-') + "+---------------+------------------+\n";
      std::ostringstream out;
      out << rule << "| " << pad("Model", w) << " | JSON Validity | Overall Accuracy |\n" << rule;
      out << "| " << pad(name, w) << " | " << pad(fmt("%.2f%%", 100.0 * report.json_validity), 13) << " | "
          << pad(fmt("%.2f%%", 100.0 * report.overall_accuracy), 16) << " |\n"
          << rule;
      out << "records: " << report.n_records << "  missing: " << report.n_missing
          << "  unknown ids: " << report.n_unknown_ids << "\n";
      out << "mean reward: " << fmt("%.6f", report.mean_reward)
          << "  mean completion chars: " << fmt("%.2f", report.mean_completion_chars) << "\n";
      return out.str();
    }
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["n_records"] = report.n_records;
      j["json_validity"] = report.json_validity;
      j["overall_accuracy"] = report.overall_accuracy;
      j["mean_reward"] = report.mean_reward;
      j["mean_completion_chars"] = report.mean_completion_chars;
      j["n_missing"] = report.n_missing;
      j["n_unknown_ids"] = report.n_unknown_ids;
      auto rows = nlohmann::ordered_json::array();
      for (const auto& r : report.records) {
        rows.push_back({{"id", r.id},
                        {"r_final", r.r_final},
                        {"outcome", std::string(outcome_name(r.outcome))},
                        {"exact_match", r.exact_match},
                        {"json_valid", r.json_valid},
                        {"completion_chars", r.completion_chars},
                        {"missing", r.missing}});
      }
      j["records"] = std::move(rows);
      return j.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      std::ostringstream out;
      out << kCsvHeader << '\n';
      for (const auto& r : report.records) {
        out << r.id << ',' << fmt("%.17g", r.r_final) << ',' << csv_quote(outcome_name(r.outcome)) << ','
            << (r.exact_match ? 1 : 0) << ',' << (r.json_valid ? 1 : 0) << ',' << r.completion_chars << ','
            << (r.missing ? 1 : 0) << '\n';
      }
      return out.str();
    }
  }
  return {};
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path,
                 std::string_view label) {
  write_text_file(path, render_report(report, format, label));
}

namespace {

OutcomeKind outcome_or_throw(std::string_view name) {
  auto k = outcome_from_name(name);
  if (!k) throw ValidationError("unknown outcome tag '" + std::string(name) + "'");
  return *k;
}

}  // namespace

EvalReport parse_report_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<RecordResult> rows;
    for (const auto& r : j.at("records")) {
      RecordResult row;
      row.id = r.at("id").get<std::int64_t>();
      row.r_final = r.at("r_final").get<double>();
      row.outcome = outcome_or_throw(r.at("outcome").get<std::string>());
      row.exact_match = r.at("exact_match").get<bool>();
      row.json_valid = r.at("json_valid").get<bool>();
      row.completion_chars = r.at("completion_chars").get<std::size_t>();
      row.missing = r.at("missing").get<bool>();
      rows.push_back(row);
    }
    EvalReport report = summarize(std::move(rows));
    report.n_unknown_ids = j.value("n_unknown_ids", std::size_t{0});
    return report;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed report JSON: ") + ex.what());
  }
}

EvalReport parse_report_csv(std::string_view text) {
  std::vector<RecordResult> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader) throw ValidationError("report csv lacks the expected header");
      continue;
    }
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (cols.size() != 7) throw ValidationError("report csv line " + std::to_string(line_no) + ": expected 7 columns");
    try {
      RecordResult row;
      row.id = std::stoll(cols[0]);
      row.r_final = std::stod(cols[1]);
      row.outcome = outcome_or_throw(cols[2]);
      row.exact_match = cols[3] == "1";
      row.json_valid = cols[4] == "1";
      row.completion_chars = static_cast<std::size_t>(std::stoull(cols[5]));
      row.missing = cols[6] == "1";
      rows.push_back(row);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("report csv line " + std::to_string(line_no) + ": bad value");
    }
  }
  return summarize(std::move(rows));
}

std::string render_curve_stats(const std::vector<WindowStats>& windows, ReportFormat format) {
  switch (format) {
    case ReportFormat::HumanTable: {
      std::ostringstream out;
      out << "steps          mean    min     max     extraneous  mean chars\n";
      for (const auto& w : windows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%5zu-%-5zu    %.4f  %.4f  %.4f  %8.2f%%  %10.2f\n", w.first_step, w.last_step,
                      w.mean_reward, w.min_reward, w.max_reward, 100.0 * w.extraneous_rate, w.mean_completion_chars);
        out << buf;
      }
      return out.str();
    }
    case ReportFormat::Json: {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& w : windows) {
        arr.push_back({{"first_step", w.first_step},
                       {"last_step", w.last_step},
                       {"mean_reward", w.mean_reward},
                       {"min_reward", w.min_reward},
                       {"max_reward", w.max_reward},
                       {"extraneous_rate", w.extraneous_rate},
                       {"mean_completion_chars", w.mean_completion_chars}});
      }
      return arr.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      std::ostringstream out;
      out << "first_step,last_step,mean_reward,min_reward,max_reward,extraneous_rate,mean_completion_chars\n";
      for (const auto& w : windows) {
        out << w.first_step << ',' << w.last_step << ',' << fmt("%.17g", w.mean_reward) << ','
            << fmt("%.17g", w.min_reward) << ',' << fmt("%.17g", w.max_reward) << ','
            << fmt("%.17g", w.extraneous_rate) << ',' << fmt("%.17g", w.mean_completion_chars) << '\n';
      }
      return out.str();
    }
  }
  return {};
}

}  // namespace toolreward
