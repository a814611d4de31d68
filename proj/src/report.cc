// Copyright 2026 The gerkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gerkit/report.h"

#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "gerkit/error.h"
#include "gerkit/store.h"

namespace gerkit {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DecodeError("not a number: " + std::string(s));
  }
  return v;
}

std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DecodeError("not a count: " + std::string(s));
  }
  return v;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v * 100.0);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw DecodeError("unterminated quote in CSV");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> opt_field(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

const char* kReportHeader = "dataset,condition,metric,error_rate,recall,precision,f1,n_utts,n_ref_occurrences";

}  // namespace

EvalReport summarize(const std::map<std::string, std::string>& texts, const EvalSet& eval_set,
                     const RareWordList& list, const NormPolicy& policy, std::string condition) {
  std::vector<std::string> bad;
  for (const auto& u : eval_set.utterances()) {
    if (!texts.contains(u.id)) bad.push_back(u.id);
  }
  for (const auto& [id, text] : texts) {
    if (!eval_set.find(id)) bad.push_back(id);
  }
  if (!bad.empty()) {
    std::string msg = "outputs do not match the evaluation set:";
    for (const auto& id : bad) msg += " " + id;
    throw AlignmentError(msg, bad);
  }
  EvalReport r;
  r.dataset_name = eval_set.name();
  r.condition = std::move(condition);
  r.metric = policy.unit == ScoringUnit::kWord ? "WER" : "CER";
  r.n_utts = eval_set.size();
  std::size_t distance = 0;
  std::size_t length = 0;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& u : eval_set.utterances()) {
    const std::string& hyp = texts.at(u.id);
    const ErrorCounts c = error_counts(u.reference, hyp, policy);
    distance += c.distance;
    length += c.ref_length;
    pairs.emplace_back(u.reference, hyp);
  }
  r.error_rate = static_cast<double>(distance) / static_cast<double>(std::max<std::size_t>(1, length));
  const RareWordScore s = rare_word_scores(pairs, list, policy);
  r.recall = s.recall;
  r.precision = s.precision;
  r.f1 = s.f1;
  r.n_ref_occurrences = s.n_ref_occurrences;
  return r;
}

EvalReport summarize(const std::vector<GerOutput>& outputs, const EvalSet& eval_set, const RareWordList& list,
                     const NormPolicy& policy) {
  std::map<std::string, std::string> texts;
  std::vector<std::string> repeated;
  for (const auto& o : outputs) {
    if (!texts.emplace(o.utterance_id, o.corrected).second) repeated.push_back(o.utterance_id);
  }
  if (!repeated.empty()) {
    std::string msg = "repeated output ids:";
    for (const auto& id : repeated) msg += " " + id;
    throw AlignmentError(msg, repeated);
  }
  return summarize(texts, eval_set, list, policy, outputs.empty() ? std::string() : outputs.front().condition.label());
}

std::string format_cell(const EvalReport& r) {
  return percent(r.error_rate) + " / " + percent(r.recall) + " / " + percent(r.precision);
}

ReportFormat parse_format(std::string_view s) {
  if (s == "markdown" || s == "md" || s == "markdown-table") return ReportFormat::kMarkdown;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw PreconditionError("unknown report format: " + std::string(s));
}

std::string to_markdown(const std::vector<EvalReport>& reports) {
  std::string out = "| Dataset | Condition | Metric | Error rate / recall / precision | F1 | Utts |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out += "| " + r.dataset_name + " | " + r.condition + " | " + r.metric + " | " + format_cell(r) + " | " +
           percent(r.f1) + " | " + std::to_string(r.n_utts) + " |\n";
  }
  return out;
}

std::string to_csv(const std::vector<EvalReport>& reports) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : reports) {
    out += csv_field(r.dataset_name) + "," + csv_field(r.condition) + "," + csv_field(r.metric) + "," +
           format_double(r.error_rate) + "," + opt_text(r.recall) + "," + opt_text(r.precision) + "," +
           opt_text(r.f1) + "," + std::to_string(r.n_utts) + "," + std::to_string(r.n_ref_occurrences) + "\n";
  }
  return out;
}

std::vector<EvalReport> parse_reports_csv(std::string_view csv) {
  auto rows = parse_csv(csv);
  if (rows.empty() || join(rows.front(), ",") != kReportHeader) throw DecodeError("unexpected report CSV header");
  std::vector<EvalReport> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 9) throw DecodeError("report CSV row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    EvalReport r;
    r.dataset_name = f[0];
    r.condition = f[1];
    r.metric = f[2];
    r.error_rate = parse_double(f[3]);
    r.recall = opt_field(f[4]);
    r.precision = opt_field(f[5]);
    r.f1 = opt_field(f[6]);
    r.n_utts = parse_count(f[7]);
    r.n_ref_occurrences = parse_count(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

void to_json(json& j, const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = {{"dataset", r.dataset_name},  {"condition", r.condition},     {"metric", r.metric},
       {"error_rate", r.error_rate}, {"recall", opt(r.recall)},      {"precision", opt(r.precision)},
       {"f1", opt(r.f1)},            {"n_utts", r.n_utts},           {"n_ref_occurrences", r.n_ref_occurrences},
       {"cell", format_cell(r)}};
}

void from_json(const json& j, EvalReport& r) {
  auto opt = [&](const char* k) -> std::optional<double> {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return j.at(k).get<double>();
  };
  r.dataset_name = j.at("dataset").get<std::string>();
  r.condition = j.value("condition", "");
  r.metric = j.value("metric", "WER");
  r.error_rate = j.at("error_rate").get<double>();
  r.recall = opt("recall");
  r.precision = opt("precision");
  r.f1 = opt("f1");
  r.n_utts = j.value("n_utts", std::size_t{0});
  r.n_ref_occurrences = j.value("n_ref_occurrences", std::size_t{0});
}

std::string to_json_text(const std::vector<EvalReport>& reports) { return json(reports).dump(2) + "\n"; }

std::vector<EvalReport> parse_reports_json(std::string_view text) {
  try {
    return json::parse(text).get<std::vector<EvalReport>>();
  } catch (const json::exception& e) {
    throw DecodeError(std::string("report JSON: ") + e.what());
  }
}

void emit(const std::vector<EvalReport>& reports, ReportFormat format, const std::filesystem::path& path) {
  std::string body;
  switch (format) {
    case ReportFormat::kMarkdown:
      body = to_markdown(reports);
      break;
    case ReportFormat::kCsv:
      body = to_csv(reports);
      break;
    case ReportFormat::kJson:
      body = to_json_text(reports);
      break;
  }
  atomic_write_file(path, body);
}

std::string_view to_string(SweepAxis axis) { return axis == SweepAxis::kTranscripts ? "transcripts" : "speakers"; }

SweepAxis parse_axis(std::string_view s) {
  if (s == "transcripts" || s == "TRANSCRIPTS" || s == "T") return SweepAxis::kTranscripts;
  if (s == "speakers" || s == "SPEAKERS" || s == "S") return SweepAxis::kSpeakers;
  throw PreconditionError("unknown sweep axis: " + std::string(s));
}

void SweepGrid::validate() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].value <= points[i - 1].value) throw PreconditionError("sweep values must strictly increase");
  }
}

std::string to_csv(const SweepGrid& grid) {
  std::string out = "value,f1\n";
  for (const auto& p : grid.points) out += std::to_string(p.value) + "," + format_double(p.f1) + "\n";
  return out;
}

SweepGrid parse_grid_csv(std::string_view csv, SweepAxis axis) {
  auto rows = parse_csv(csv);
  if (rows.empty() || join(rows.front(), ",") != "value,f1") throw DecodeError("unexpected sweep CSV header");
  SweepGrid g;
  g.axis = axis;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw DecodeError("sweep CSV row " + std::to_string(i) + " is malformed");
    int v = 0;
    const auto& s = rows[i][0];
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DecodeError("not an integer: " + s);
    g.points.push_back({v, parse_double(rows[i][1])});
  }
  g.validate();
  return g;
}

json to_json(const SweepGrid& grid) {
  json points = json::array();
  for (const auto& p : grid.points) points.push_back({{"value", p.value}, {"f1", p.f1}});
  return {{"axis", to_string(grid.axis)}, {"points", points}};
}

void emit(const SweepGrid& grid, ReportFormat format, const std::filesystem::path& path) {
  std::string body;
  switch (format) {
    case ReportFormat::kMarkdown: {
      body = std::string("| ") + std::string(to_string(grid.axis)) + " | F1 |\n|---|---|\n";
      for (const auto& p : grid.points) body += "| " + std::to_string(p.value) + " | " + percent(p.f1) + " |\n";
      break;
    }
    case ReportFormat::kCsv:
      body = to_csv(grid);
      break;
    case ReportFormat::kJson:
      body = to_json(grid).dump(2) + "\n";
      break;
  }
  atomic_write_file(path, body);
}

SweepGrid run_sweep(const RareWordList& words, SweepAxis axis, const std::vector<int>& values, int fixed_other,
                    SweepPipeline& pipeline) {
  if (values.empty()) throw PreconditionError("sweep needs at least one value");
  if (!pipeline.make_corrector) throw PreconditionError("sweep needs a corrector factory");
  if (!pipeline.eval_set || !pipeline.hypotheses) throw PreconditionError("sweep needs an evaluation set and hypotheses");
  SweepGrid grid;
  grid.axis = axis;
  for (int v : values) grid.points.push_back({v, 0.0});
  grid.validate();

  const RareWordList& eval_words = pipeline.eval_words ? *pipeline.eval_words : words;
  const NormPolicy policy = NormPolicy::for_language(words.language());
  for (auto& point : grid.points) {
    BuildConfig cfg = pipeline.build;
    if (axis == SweepAxis::kTranscripts) {
      cfg.transcripts_per_word = point.value;
      cfg.speakers = fixed_other;
    } else {
      cfg.speakers = point.value;
      cfg.transcripts_per_word = fixed_other;
    }
    BuildResult built = generate_pairs(words, cfg, pipeline.clients, pipeline.state_dir);
    auto parts = split(built.examples, cfg.split, cfg.seed);
    Corrector corrector = pipeline.make_corrector(parts.first);
    std::map<std::string, std::string> texts;
    for (const auto& u : pipeline.eval_set->utterances()) {
      auto it = pipeline.hypotheses->find(u.id);
      if (it == pipeline.hypotheses->end()) throw MissingHypotheses(u.id);
      texts[u.id] = corrector(it->second);
    }
    const EvalReport r = summarize(texts, *pipeline.eval_set, eval_words, policy);
    point.f1 = r.f1.value_or(0.0);
  }
  return grid;
}

}  // namespace gerkit
