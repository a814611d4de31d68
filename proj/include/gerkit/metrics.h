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

#ifndef GERKIT_METRICS_H_
#define GERKIT_METRICS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gerkit/corpus.h"
#include "gerkit/text.h"

namespace gerkit {

enum class EditKind { kMatch, kSub, kIns, kDel };

struct EditOp {
  EditKind kind;
  std::optional<std::string> ref_token;
  std::optional<std::string> hyp_token;

  bool operator==(const EditOp&) const = default;
};

// Token-level edit script between a reference and a hypothesis.
struct Alignment {
  std::vector<EditOp> ops;
  std::size_t distance = 0;
};

// Unit-cost Levenshtein alignment. The backtrace prefers the diagonal
// (match/substitution), then deletion, then insertion, so equal inputs
// always yield the same script.
Alignment align(const std::vector<std::string>& ref_tokens,
                const std::vector<std::string>& hyp_tokens);

// Distance only, O(min(n,m)) memory.
std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

enum class ScoringUnit { kWord, kChar };

struct NormPolicy {
  ScoringUnit unit = ScoringUnit::kWord;
  bool casefold = true;
  bool strip_punct = true;
  bool collapse_whitespace = true;

  // WORD with casefold for EN; CHAR without casefold for JA.
  static NormPolicy for_language(Language lang);
  Language language() const { return unit == ScoringUnit::kWord ? Language::kEn : Language::kJa; }
};

// NFKC, optional casefold, then words (whitespace split, outer punctuation
// stripped) or code points (whitespace and punctuation removed).
std::vector<std::string> tokenize(std::string_view text, const NormPolicy& policy);
// Tokens joined by a space (WORD) or nothing (CHAR).
std::string normalize_text(std::string_view text, const NormPolicy& policy);

struct ErrorCounts {
  std::size_t distance = 0;
  std::size_t ref_length = 0;
};

ErrorCounts error_counts(std::string_view reference, std::string_view hypothesis,
                         const NormPolicy& policy);

// distance / max(1, |ref|). Throws PreconditionError if policy.unit is not
// WORD (wer) or CHAR (cer).
double wer(std::string_view reference, std::string_view hypothesis, const NormPolicy& policy);
double cer(std::string_view reference, std::string_view hypothesis, const NormPolicy& policy);

struct RareWordScore {
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
  std::size_t n_ref_occurrences = 0;
  std::size_t n_hyp_occurrences = 0;
  std::size_t n_correct = 0;
};

// Per-occurrence scoring. A reference occurrence is correct when the
// alignment maps its span, with every token matched and nothing inserted in
// between, onto a rare-word occurrence in the hypothesis.
RareWordScore rare_word_scores(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const RareWordList& list, const NormPolicy& policy);

// Percentage of reference tokens (or characters) covered by rare-word
// matches. Throws PreconditionError on an empty reference list.
double rare_word_coverage(const std::vector<std::string>& references,
                          const RareWordList& list, const NormPolicy& policy);

// Leftmost-longest, non-overlapping matches of `patterns` in `tokens`, as
// half-open [begin, end) spans.
std::vector<std::pair<std::size_t, std::size_t>> find_occurrences(
    const std::vector<std::string>& tokens,
    const std::vector<std::vector<std::string>>& patterns);

// Entry keys tokenized under the policy; empty patterns are dropped.
std::vector<std::vector<std::string>> rare_word_patterns(const RareWordList& list,
                                                         const NormPolicy& policy);

}  // namespace gerkit

#endif  // GERKIT_METRICS_H_
