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

#ifndef GERKIT_CORPUS_H_
#define GERKIT_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gerkit/phonetic_text.h"
#include "gerkit/text.h"
#include "json.hpp"

namespace gerkit {

class ChatClient;
class PromptCatalog;

struct RareWordEntry {
  // Trimmed text as first seen in the source.
  std::string surface;
  // normalize_entry(surface); the identity used for dedup and matching.
  std::string key;
  std::optional<std::string> domain_hint;

  bool operator==(const RareWordEntry&) const = default;
};

// Ordered, de-duplicated list of biasing words for one language.
class RareWordList {
 public:
  explicit RareWordList(Language language, std::string source = {})
      : language_(language), source_(std::move(source)) {}

  // Returns false (and leaves the list unchanged) when an entry with the same
  // normalized key exists. Throws PreconditionError on an empty surface.
  bool add(std::string_view surface, std::optional<std::string> domain_hint = std::nullopt);
  void remove_at(std::size_t index);

  Language language() const { return language_; }
  const std::string& source() const { return source_; }
  const std::vector<RareWordEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(std::string_view surface) const;

  bool operator==(const RareWordList& o) const {
    return language_ == o.language_ && entries_ == o.entries_;
  }

 private:
  Language language_;
  std::string source_;
  std::vector<RareWordEntry> entries_;
};

// One entry per line, "<surface>" or "<surface>\t<domain hint>". Duplicates
// after normalization are dropped with a warning; first-seen order is kept.
RareWordList parse_rare_words(std::string_view text, Language language,
                              std::string source = {});
RareWordList load_rare_words(const std::filesystem::path& path, Language language);
std::string format_rare_words(const RareWordList& list);
void save_rare_words(const RareWordList& list, const std::filesystem::path& path);

struct EvalUtterance {
  std::string id;
  std::string reference;
  Language language = Language::kEn;
  std::optional<std::string> audio_ref;

  bool operator==(const EvalUtterance&) const = default;
};

class EvalSet {
 public:
  EvalSet() = default;
  explicit EvalSet(std::string name) : name_(std::move(name)) {}

  // Throws PreconditionError on duplicate id or empty reference.
  void add(EvalUtterance utt);

  const std::string& name() const { return name_; }
  const std::vector<EvalUtterance>& utterances() const { return utts_; }
  std::size_t size() const { return utts_.size(); }
  bool empty() const { return utts_.empty(); }
  const EvalUtterance* find(const std::string& id) const;

 private:
  std::string name_;
  std::vector<EvalUtterance> utts_;
  std::map<std::string, std::size_t> index_;
};

// JSON-lines, one {"id","reference","language","audio_ref"} object per line.
EvalSet parse_eval_set(std::string_view jsonl, std::string name = {});
EvalSet load_eval_set(const std::filesystem::path& path);
std::string format_eval_set(const EvalSet& set);

struct Hypothesis {
  std::string text;
  std::optional<double> score;

  bool operator==(const Hypothesis&) const = default;
};

// Rank-ordered ASR N-best list; hypotheses[0] is the 1-best.
struct HypothesisSet {
  std::string utterance_id;
  std::vector<Hypothesis> hypotheses;

  const Hypothesis& best() const { return hypotheses.front(); }
  std::vector<std::string> texts() const;
  // Throws PreconditionError when empty or longer than max_n (0 = no limit).
  void validate(std::size_t max_n = 0) const;

  bool operator==(const HypothesisSet&) const = default;
};

using HypothesisMap = std::map<std::string, HypothesisSet>;

// JSON-lines {"utterance_id", "hypotheses":[{"text","score"}...]}.
HypothesisMap parse_hypotheses(std::string_view jsonl);
HypothesisMap load_hypotheses(const std::filesystem::path& path);
std::string format_hypotheses(const HypothesisMap& hyps);

// One fine-tuning unit: a reference transcript with the ASR N-best it
// produced and, optionally, phonetic context.
struct ErrorPairExample {
  std::string reference;
  HypothesisSet nbest;
  std::optional<PhoneticText> phonetic;
  std::string rare_word;
  int transcript_idx = 1;
  int speaker_id = 1;

  bool operator==(const ErrorPairExample&) const = default;
};

void to_json(nlohmann::json& j, const Hypothesis& h);
void from_json(const nlohmann::json& j, Hypothesis& h);
void to_json(nlohmann::json& j, const HypothesisSet& h);
void from_json(const nlohmann::json& j, HypothesisSet& h);
void to_json(nlohmann::json& j, const EvalUtterance& u);
void from_json(const nlohmann::json& j, EvalUtterance& u);
void to_json(nlohmann::json& j, const ErrorPairExample& e);
void from_json(const nlohmann::json& j, ErrorPairExample& e);

// Asks the LLM for hard-to-recognize words in `corpus_text`, then drops the
// most frequent candidates until rare-word coverage over the corpus is below
// `target_coverage_pct`.
//
// Throws EmptyList when the LLM names no words, ParseError when the answer
// has content but no usable word lines, CoverageInfeasible when a single
// remaining entry still covers too much of the corpus.
RareWordList extract_rare_words(std::string_view corpus_text, Language language,
                                ChatClient& llm, double target_coverage_pct,
                                const PromptCatalog& catalog);

// The line parser used by extract_rare_words, exposed for testing.
std::vector<std::string> parse_word_lines(std::string_view response);

}  // namespace gerkit

#endif  // GERKIT_CORPUS_H_
