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

#ifndef GERKIT_DATABUILD_H_
#define GERKIT_DATABUILD_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gerkit/corpus.h"
#include "gerkit/phonetic_text.h"
#include "gerkit/phonetics.h"
#include "gerkit/prompts.h"
#include "gerkit/services.h"
#include "json.hpp"

namespace gerkit {

struct SplitRatio {
  int train = 4;
  int val = 1;
};

// Defaults: 4 transcripts per word, 7 speakers, 5-best ASR output, and a
// 4:1 train/validation split.
struct BuildConfig {
  int transcripts_per_word = 4;
  int speakers = 7;
  int nbest = 5;
  SplitRatio split;
  uint64_t seed = 0;
  std::optional<PhoneticScheme> phonetic_scheme;
  int max_generation_retries = 2;
  // Transcript generation wants diversity, so it is not run at temperature 0.
  double generation_temperature = 0.8;
  std::string model_id;
  // Voice names per speaker id (1-based); "speaker-<id>" when absent.
  std::vector<std::string> voices;
  int workers = 4;

  // Throws PreconditionError on non-positive T, S, N, or split parts.
  void validate() const;
  std::string voice_for(int speaker_id) const;
};

nlohmann::json to_json(const BuildConfig& cfg);

struct WordReport {
  std::string word;
  int transcripts = 0;
  int candidates = 0;
  int kept = 0;
  int dropped_no_error = 0;
  int retries = 0;
  bool skipped = false;
  std::string error;
};

struct BuildReport {
  std::size_t n_candidates = 0;
  std::size_t n_dropped_no_error = 0;
  std::size_t n_kept = 0;
  std::size_t n_retries = 0;
  std::vector<WordReport> per_word;

  std::size_t n_skipped_words() const;
};

nlohmann::json to_json(const BuildReport& report);

struct BuildClients {
  ChatClient* llm = nullptr;
  TtsClient* tts = nullptr;
  AsrClient* asr = nullptr;
  // Needed only when BuildConfig::phonetic_scheme is set.
  PhoneticConverter* phonetics = nullptr;
  const PromptCatalog* catalog = nullptr;
};

struct BuildResult {
  std::vector<ErrorPairExample> examples;
  BuildReport report;
};

// For each rare word: generate T transcripts (retrying short generations),
// synthesize each with S speakers, transcribe each synthesis to an N-best
// list, and keep the candidates whose 1-best differs from the transcript.
// Candidates whose errors fall only on non-rare words are kept as well.
//
// When `state_dir` is given, generated transcripts are checkpointed there
// so a rerun does not repeat generation calls, and a systemic service
// failure writes `partial_manifest.json` before BuildAborted is thrown.
BuildResult generate_pairs(const RareWordList& words, const BuildConfig& cfg, BuildClients& clients,
                           const std::optional<std::filesystem::path>& state_dir = std::nullopt);

// Deterministic seeded shuffle split; train gets round(n * train/(train+val))
// examples. With fewer examples than ratio parts everything goes to train
// (with a warning).
std::pair<std::vector<ErrorPairExample>, std::vector<ErrorPairExample>> split(
    const std::vector<ErrorPairExample>& examples, SplitRatio ratio, uint64_t seed);

struct ExportManifest {
  std::filesystem::path path;
  std::filesystem::path metadata_path;
  std::size_t n_records = 0;
  std::string sha256;
  std::string metadata_sha256;
};

nlohmann::json to_json(const ExportManifest& m);

// Chat-format fine-tuning records, one per example:
//   {"messages":[system, user (GER prompt), assistant (reference)]}
// written to `path`, plus a `<path>.meta.jsonl` sidecar carrying the full
// examples so the export can be read back. Throws PreconditionError on an
// empty example list and ExportError when the files cannot be written.
ExportManifest export_finetune(const std::vector<ErrorPairExample>& examples, const PromptCatalog& catalog,
                               const std::filesystem::path& path, Language language);

// Reads an export back and checks the sidecar against the message file.
std::vector<ErrorPairExample> load_finetune(const std::filesystem::path& path);

// The GER prompt for an example, exactly as exported.
GerRequest to_ger_request(const ErrorPairExample& example, Language language);

}  // namespace gerkit

#endif  // GERKIT_DATABUILD_H_
