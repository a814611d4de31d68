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

#ifndef GERKIT_PROMPTS_H_
#define GERKIT_PROMPTS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gerkit/phonetic_text.h"
#include "gerkit/services.h"
#include "gerkit/text.h"

namespace gerkit {

// Text with {name} placeholders. Every placeholder in the body must be bound
// when rendering, except that placeholders outside `required` default to
// the empty string. Required placeholders must be bound to non-empty values.
struct PromptTemplate {
  std::string id;
  Language language = Language::kEn;
  std::string body;
  std::set<std::string> required;

  std::string render(const std::map<std::string, std::string>& bindings) const;
  // Placeholder names appearing in the body.
  std::set<std::string> placeholders() const;
};

// Versioned set of every prompt the pipeline sends. The built-in catalog is
// mirrored in data/prompts.json; a user-edited file can replace it.
class PromptCatalog {
 public:
  static PromptCatalog builtin();
  static PromptCatalog from_json(const nlohmann::json& j);
  static PromptCatalog load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Throws TemplateError for unknown ids.
  const PromptTemplate& get(const std::string& id) const;
  // Throws TemplateError when a template's required set names a placeholder
  // missing from its body.
  void add(PromptTemplate t);

  const std::string& version() const { return version_; }
  const std::map<std::string, PromptTemplate>& templates() const { return templates_; }

 private:
  std::string version_ = "1";
  std::map<std::string, PromptTemplate> templates_;
};

// Instruction asking for `count` sentences in varied contexts that use
// `word`, with an optional domain clause ("which is a medical term").
std::string build_transcript_gen_prompt(std::string_view word, int count, Language language,
                                        const std::optional<std::string>& domain_hint,
                                        const PromptCatalog& catalog = PromptCatalog::builtin());

// Extraction instruction for hard-to-recognize words in `corpus_text`.
std::string build_extraction_prompt(std::string_view corpus_text, Language language,
                                    const PromptCatalog& catalog = PromptCatalog::builtin());

// Splits a generation response into items (numbering, bullets, and quotes
// removed, blanks ignored) and keeps those that contain `word` under the
// rare-word normalization for `language`. Returns exactly `expected_count`
// items, or throws ShortGeneration carrying what was found.
std::vector<std::string> parse_generated_transcripts(std::string_view llm_response, int expected_count,
                                                     std::string_view word, Language language);

// True when `word` occurs in `text` under the rare-word normalization:
// contiguous token span for EN, substring for JA.
bool contains_rare_word(std::string_view text, std::string_view word, Language language);

// Removes "1.", "2)", "-", "*", "•" list markers from the front of a line.
std::string strip_list_marker(std::string_view line);

struct GerRequest {
  std::vector<std::string> nbest;
  std::optional<PhoneticText> phonetic;
  Language language = Language::kEn;

  // Throws PreconditionError on an empty N-best list.
  void validate() const;
};

// System + user messages. The user message lists the hypotheses rank
// ordered ("1. ...") and then, when phonetic context is present, one
// "Pronunciation: ..." line. Without phonetics the bytes are exactly the
// hypothesis block.
std::vector<ChatMessage> build_ger_messages(const GerRequest& request,
                                            const PromptCatalog& catalog = PromptCatalog::builtin());

// Strips code fences, quotes, and "Corrected:"-style labels; returns the
// first non-empty line. Throws EmptyCorrection when nothing is left.
std::string parse_ger_response(std::string_view llm_response);

}  // namespace gerkit

#endif  // GERKIT_PROMPTS_H_
