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

#ifndef GERKIT_GER_H_
#define GERKIT_GER_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gerkit/corpus.h"
#include "gerkit/phonetic_text.h"
#include "gerkit/phonetics.h"
#include "gerkit/prompts.h"
#include "gerkit/services.h"
#include "json.hpp"

namespace gerkit {

enum class GerMode { kPromptOnly, kNbest, kNbestPhonetic };

// "prompt-only", "nbest", "nbest-phonetic".
std::string_view to_string(GerMode mode);
// Also accepts the upper-case PROMPT_ONLY / NBEST / NBEST_PHONETIC spelling.
GerMode parse_mode(std::string_view s);

struct GerCondition {
  GerMode mode = GerMode::kNbest;
  std::optional<PhoneticScheme> scheme;
  std::string model_id;

  // Throws PreconditionError unless scheme is set exactly for NBEST_PHONETIC.
  void validate() const;
  // "nbest", "nbest-phonetic+lsp", ...
  std::string label() const;

  bool operator==(const GerCondition&) const = default;
};

struct GerOutput {
  std::string utterance_id;
  std::string corrected;
  GerCondition condition;
  std::string raw_response;
  double latency_ms = 0.0;
  bool fallback = false;

  bool operator==(const GerOutput&) const = default;
};

void to_json(nlohmann::json& j, const GerCondition& c);
void from_json(const nlohmann::json& j, GerCondition& c);
void to_json(nlohmann::json& j, const GerOutput& o);
void from_json(const nlohmann::json& j, GerOutput& o);

std::string format_outputs(const std::vector<GerOutput>& outputs);
std::vector<GerOutput> parse_outputs(std::string_view jsonl);

struct GerClients {
  ChatClient* llm = nullptr;
  // Needed only for NBEST_PHONETIC.
  PhoneticConverter* phonetics = nullptr;
  const PromptCatalog* catalog = nullptr;
};

// The request sent for `nbest` under `condition`.
GerRequest make_request(const HypothesisSet& nbest, const GerCondition& condition, Language language,
                        PhoneticConverter* phonetics);

// One correction at temperature 0. An empty or unparseable response falls
// back to the 1-best and sets `fallback`. Service failures are rethrown as
// UtteranceFailure carrying the utterance id.
GerOutput correct_one(const HypothesisSet& nbest, const GerCondition& condition, GerClients& clients,
                      Language language);

struct EvalRunOptions {
  // Completed outputs are appended here one line at a time; a rerun skips
  // every utterance already recorded.
  std::optional<std::filesystem::path> checkpoint;
  int workers = 4;
};

// Outputs follow eval-set order. Throws MissingHypotheses for the first
// utterance without an N-best list.
std::vector<GerOutput> run_eval(const EvalSet& eval_set, const HypothesisMap& hypotheses,
                                const GerCondition& condition, GerClients& clients,
                                const EvalRunOptions& options = {});

// Offline corrector learned from error pairs: phrase substitutions taken from
// the 1-best/reference alignment, applied where the training data shows the
// phrase was wrong more often than right. Output is normalized text.
class LookupCorrector {
 public:
  explicit LookupCorrector(Language language) : language_(language) {}

  struct Rule {
    std::vector<std::string> from;
    std::vector<std::string> to;
    std::size_t errors = 0;
    std::size_t occurrences = 0;

    bool operator==(const Rule&) const = default;
  };

  static LookupCorrector train(const std::vector<ErrorPairExample>& examples, Language language);

  std::string correct(const std::vector<std::string>& nbest) const;

  Language language() const { return language_; }
  const std::vector<Rule>& rules() const { return rules_; }

  nlohmann::json to_json() const;
  static LookupCorrector from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static LookupCorrector load(const std::filesystem::path& path);

 private:
  Language language_;
  // Applied rules only, longest `from` first.
  std::vector<Rule> rules_;
};

}  // namespace gerkit

#endif  // GERKIT_GER_H_
