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

#ifndef GERKIT_REPORT_H_
#define GERKIT_REPORT_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gerkit/corpus.h"
#include "gerkit/databuild.h"
#include "gerkit/ger.h"
#include "gerkit/metrics.h"
#include "json.hpp"

namespace gerkit {

// One result row: pooled error rate plus rare-word scores, all as
// fractions in [0, 1] (error_rate may exceed 1).
struct EvalReport {
  std::string dataset_name;
  std::string condition;
  std::string metric = "WER";
  double error_rate = 0.0;
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
  std::size_t n_utts = 0;
  std::size_t n_ref_occurrences = 0;

  bool operator==(const EvalReport&) const = default;
};

// Error rate is total distance over total reference length across the set.
// Throws AlignmentError listing ids that are missing, unknown, or repeated.
EvalReport summarize(const std::vector<GerOutput>& outputs, const EvalSet& eval_set, const RareWordList& list,
                     const NormPolicy& policy);
EvalReport summarize(const std::map<std::string, std::string>& texts, const EvalSet& eval_set,
                     const RareWordList& list, const NormPolicy& policy, std::string condition = {});

// "2.5 / 94.2 / 96.4": error rate, recall, precision in percent with one
// decimal; "-" for an absent value.
std::string format_cell(const EvalReport& r);

enum class ReportFormat { kMarkdown, kCsv, kJson };
ReportFormat parse_format(std::string_view s);

std::string to_markdown(const std::vector<EvalReport>& reports);
std::string to_csv(const std::vector<EvalReport>& reports);
std::string to_json_text(const std::vector<EvalReport>& reports);
std::vector<EvalReport> parse_reports_csv(std::string_view csv);
std::vector<EvalReport> parse_reports_json(std::string_view text);

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

// Writes atomically; I/O failures become ExportError.
void emit(const std::vector<EvalReport>& reports, ReportFormat format, const std::filesystem::path& path);

enum class SweepAxis { kTranscripts, kSpeakers };
std::string_view to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view s);

struct SweepPoint {
  int value = 0;
  double f1 = 0.0;

  bool operator==(const SweepPoint&) const = default;
};

struct SweepGrid {
  SweepAxis axis = SweepAxis::kTranscripts;
  std::vector<SweepPoint> points;

  // Throws PreconditionError unless values strictly increase.
  void validate() const;
  bool operator==(const SweepGrid&) const = default;
};

std::string to_csv(const SweepGrid& grid);
SweepGrid parse_grid_csv(std::string_view csv, SweepAxis axis);
nlohmann::json to_json(const SweepGrid& grid);
void emit(const SweepGrid& grid, ReportFormat format, const std::filesystem::path& path);

using Corrector = std::function<std::string(const HypothesisSet&)>;
using CorrectorFactory = std::function<Corrector(const std::vector<ErrorPairExample>& train)>;

struct SweepPipeline {
  BuildConfig build;
  BuildClients clients;
  CorrectorFactory make_corrector;
  const EvalSet* eval_set = nullptr;
  const HypothesisMap* hypotheses = nullptr;
  // Rare words scored on the evaluation set; the build words when null.
  const RareWordList* eval_words = nullptr;
  // Transcript checkpoint directory handed to generate_pairs.
  std::optional<std::filesystem::path> state_dir;
};

// For each value: build with T (or S) set to it and the other axis fixed,
// split, train a corrector on the training part, correct the evaluation
// set, and record the rare-word F1 (0 when undefined).
SweepGrid run_sweep(const RareWordList& words, SweepAxis axis, const std::vector<int>& values, int fixed_other,
                    SweepPipeline& pipeline);

}  // namespace gerkit

#endif  // GERKIT_REPORT_H_
