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

#ifndef GERKIT_PHONETICS_H_
#define GERKIT_PHONETICS_H_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "gerkit/phonetic_text.h"
#include "gerkit/store.h"
#include "gerkit/text.h"

namespace gerkit {

class ChatClient;
class PromptCatalog;

enum class OovPolicy { kPassThrough, kSpellOut };

// word -> phoneme string. Keys are NFKC + casefolded; values are stored as
// given (space-separated phones for ARPAbet, a plain string for IPA or kana
// readings).
class G2pLexicon {
 public:
  explicit G2pLexicon(OovPolicy oov_policy = OovPolicy::kPassThrough) : oov_policy_(oov_policy) {}

  // "<word>\t<phonemes>" per line; blank lines and lines starting with '#'
  // are skipped. The first pronunciation of a word wins.
  static G2pLexicon parse(std::string_view text, OovPolicy oov_policy = OovPolicy::kPassThrough);
  static G2pLexicon load(const std::filesystem::path& path,
                         OovPolicy oov_policy = OovPolicy::kPassThrough);

  // Throws PreconditionError on an empty word or pronunciation.
  void add(std::string_view word, std::string_view phonemes);
  const std::string* find(std::string_view word) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  OovPolicy oov_policy() const { return oov_policy_; }
  void set_oov_policy(OovPolicy p) { oov_policy_ = p; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_key_code_points() const { return max_key_cps_; }

 private:
  OovPolicy oov_policy_;
  std::map<std::string, std::string> entries_;
  std::size_t max_key_cps_ = 0;
};

// Word-by-word IPA lookup joined by single spaces.
PhoneticText to_ipa(std::string_view text, const G2pLexicon& lexicon);

// EN: per-word ARPAbet with the phones of a word written together
// ("R AY1 Z IH0 NG" -> "RAY1ZIH0NG"), words space-joined.
// JA: reading via longest-match lookup in a surface -> katakana lexicon,
// then Hepburn romanization.
PhoneticText to_tts_phoneme(std::string_view text, Language language, const G2pLexicon& lexicon);

// Katakana reading of Japanese text: dictionary words by longest match,
// hiragana converted to katakana, everything else kept.
std::string japanese_reading(std::string_view text, const G2pLexicon& reading_lexicon);
// Hepburn romanization of kana (hiragana or katakana). Non-kana passes
// through.
std::string romanize_kana(std::string_view kana);

// Content-addressed store of converted texts, keyed by
// (scheme, language, source text). Backed by a JsonlCache.
class PhoneticCache {
 public:
  PhoneticCache() = default;
  explicit PhoneticCache(std::filesystem::path file) : cache_(std::move(file)) {}

  static std::string key(PhoneticScheme scheme, Language language, std::string_view text);
  std::optional<PhoneticText> get(PhoneticScheme scheme, Language language, std::string_view text) const;
  void put(const PhoneticText& value);
  std::size_t size() const { return cache_.size(); }

 private:
  JsonlCache cache_;
};

// Strips whitespace, code fences, backticks, and quotes wrapped around an
// LLM answer.
std::string trim_llm_text(std::string_view response);

// LLM-based Simplified Phoneme: one temperature-0 call with the fixed
// instruction for the language, cached. Throws PreconditionError on empty
// text and EmptyConversion when the answer is empty after trimming.
PhoneticText to_lsp(std::string_view text, Language language, ChatClient& llm, PhoneticCache& cache,
                    const PromptCatalog& catalog, const std::string& model_id = {});

// Japanese IPA through the LLM (no rule-based engine), cached like LSP.
PhoneticText to_ipa_llm(std::string_view text, Language language, ChatClient& llm, PhoneticCache& cache,
                        const PromptCatalog& catalog, const std::string& model_id = {});

// Bundles the lexicons and LLM needed to render any supported
// (scheme, language) pair.
struct PhoneticResources {
  std::shared_ptr<const G2pLexicon> en_ipa;
  std::shared_ptr<const G2pLexicon> en_arpabet;
  std::shared_ptr<const G2pLexicon> ja_reading;
  ChatClient* llm = nullptr;
  std::shared_ptr<PhoneticCache> cache;
  const PromptCatalog* catalog = nullptr;
  std::string model_id;
};

class PhoneticConverter {
 public:
  explicit PhoneticConverter(PhoneticResources resources);
  // Throws PreconditionError when the resources for the pair are missing.
  PhoneticText convert(PhoneticScheme scheme, Language language, std::string_view text);

 private:
  PhoneticResources res_;
};

}  // namespace gerkit

#endif  // GERKIT_PHONETICS_H_
