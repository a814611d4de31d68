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

#include "gerkit/metrics.h"

#include <algorithm>
#include <set>

#include "gerkit/error.h"

namespace gerkit {

Alignment align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  // cost[i][j]: distance between ref[0..i) and hyp[0..j).
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  Alignment out;
  out.distance = at(n, m);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        out.ops.push_back({same ? EditKind::kMatch : EditKind::kSub, ref[i - 1], hyp[j - 1]});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.ops.push_back({EditKind::kDel, ref[i - 1], std::nullopt});
      --i;
    } else {
      out.ops.push_back({EditKind::kIns, std::nullopt, hyp[j - 1]});
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& longer = a.size() >= b.size() ? a : b;
  const auto& shorter = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> row(shorter.size() + 1);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t prev_diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({prev_diag + (longer[i - 1] == shorter[j - 1] ? 0 : 1), up + 1, row[j - 1] + 1});
      prev_diag = up;
    }
  }
  return row.back();
}

NormPolicy NormPolicy::for_language(Language lang) {
  if (lang == Language::kEn) return {ScoringUnit::kWord, true, true, true};
  return {ScoringUnit::kChar, false, true, true};
}

std::vector<std::string> tokenize(std::string_view text, const NormPolicy& policy) {
  std::string s = nfkc(text);
  if (policy.casefold) s = nfkc(casefold(s));
  if (policy.unit == ScoringUnit::kWord) {
    std::vector<std::string> out;
    for (auto& tok : split_whitespace(s)) {
      if (policy.strip_punct) {
        auto stripped = strip_outer_punct(tok);
        if (!stripped.empty()) out.push_back(std::move(stripped));
      } else {
        out.push_back(std::move(tok));
      }
    }
    return out;
  }
  s = remove_whitespace(s);
  if (policy.strip_punct) s = remove_punct(s);
  return code_points(s);
}

std::string normalize_text(std::string_view text, const NormPolicy& policy) {
  return join(tokenize(text, policy), policy.unit == ScoringUnit::kWord ? " " : "");
}

ErrorCounts error_counts(std::string_view reference, std::string_view hypothesis,
                         const NormPolicy& policy) {
  const auto ref = tokenize(reference, policy);
  const auto hyp = tokenize(hypothesis, policy);
  return {edit_distance(ref, hyp), ref.size()};
}

namespace {

double error_rate(std::string_view reference, std::string_view hypothesis, const NormPolicy& policy) {
  const ErrorCounts c = error_counts(reference, hypothesis, policy);
  return static_cast<double>(c.distance) / static_cast<double>(std::max<std::size_t>(1, c.ref_length));
}

}  // namespace

double wer(std::string_view reference, std::string_view hypothesis, const NormPolicy& policy) {
  if (policy.unit != ScoringUnit::kWord) throw PreconditionError("wer requires a WORD policy");
  return error_rate(reference, hypothesis, policy);
}

double cer(std::string_view reference, std::string_view hypothesis, const NormPolicy& policy) {
  if (policy.unit != ScoringUnit::kChar) throw PreconditionError("cer requires a CHAR policy");
  return error_rate(reference, hypothesis, policy);
}

std::vector<std::pair<std::size_t, std::size_t>> find_occurrences(
    const std::vector<std::string>& tokens, const std::vector<std::vector<std::string>>& patterns) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t best = 0;
    for (const auto& p : patterns) {
      if (p.empty() || p.size() <= best || i + p.size() > tokens.size()) continue;
      if (std::equal(p.begin(), p.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) best = p.size();
    }
    if (best > 0) {
      out.emplace_back(i, i + best);
      i += best;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> rare_word_patterns(const RareWordList& list,
                                                         const NormPolicy& policy) {
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> out;
  for (const auto& e : list.entries()) {
    auto toks = tokenize(e.key, policy);
    if (toks.empty() || !seen.insert(toks).second) continue;
    out.push_back(std::move(toks));
  }
  return out;
}

namespace {

void check_language(const RareWordList& list, const NormPolicy& policy) {
  if (list.language() != policy.language()) {
    throw PreconditionError("rare word list language " + std::string(to_string(list.language())) +
                            " does not match the scoring policy");
  }
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Counts reference occurrences whose aligned hypothesis span is itself one of
// the hypothesis occurrences.
std::size_t count_correct(const Alignment& alignment,
                          const std::vector<std::pair<std::size_t, std::size_t>>& ref_occ,
                          const std::vector<std::pair<std::size_t, std::size_t>>& hyp_occ) {
  // Op index for each reference position, and hypothesis position per op.
  std::vector<std::size_t> op_of_ref;
  std::vector<std::size_t> hyp_pos_of_op(alignment.ops.size(), 0);
  std::size_t h = 0;
  for (std::size_t k = 0; k < alignment.ops.size(); ++k) {
    const auto kind = alignment.ops[k].kind;
    hyp_pos_of_op[k] = h;
    if (kind != EditKind::kIns) op_of_ref.push_back(k);
    if (kind != EditKind::kDel) ++h;
  }
  std::set<std::pair<std::size_t, std::size_t>> hyp_spans(hyp_occ.begin(), hyp_occ.end());
  std::size_t correct = 0;
  for (const auto& [begin, end] : ref_occ) {
    const std::size_t first = op_of_ref[begin];
    const std::size_t last = op_of_ref[end - 1];
    bool all_match = true;
    for (std::size_t k = first; k <= last; ++k) {
      if (alignment.ops[k].kind != EditKind::kMatch) {
        all_match = false;
        break;
      }
    }
    if (!all_match) continue;
    const std::pair<std::size_t, std::size_t> span{hyp_pos_of_op[first], hyp_pos_of_op[last] + 1};
    if (hyp_spans.count(span)) ++correct;
  }
  return correct;
}

}  // namespace

RareWordScore rare_word_scores(const std::vector<std::pair<std::string, std::string>>& pairs,
                               const RareWordList& list, const NormPolicy& policy) {
  check_language(list, policy);
  const auto patterns = rare_word_patterns(list, policy);
  RareWordScore score;
  for (const auto& [reference, hypothesis] : pairs) {
    const auto ref = tokenize(reference, policy);
    const auto hyp = tokenize(hypothesis, policy);
    const auto ref_occ = find_occurrences(ref, patterns);
    const auto hyp_occ = find_occurrences(hyp, patterns);
    score.n_ref_occurrences += ref_occ.size();
    score.n_hyp_occurrences += hyp_occ.size();
    if (!ref_occ.empty() && !hyp_occ.empty()) {
      score.n_correct += count_correct(align(ref, hyp), ref_occ, hyp_occ);
    }
  }
  score.recall = ratio(score.n_correct, score.n_ref_occurrences);
  score.precision = ratio(score.n_correct, score.n_hyp_occurrences);
  if (score.recall && score.precision) {
    const double sum = *score.recall + *score.precision;
    score.f1 = sum > 0 ? 2.0 * *score.recall * *score.precision / sum : 0.0;
  }
  return score;
}

double rare_word_coverage(const std::vector<std::string>& references, const RareWordList& list,
                          const NormPolicy& policy) {
  if (references.empty()) throw PreconditionError("coverage needs at least one reference");
  check_language(list, policy);
  const auto patterns = rare_word_patterns(list, policy);
  std::size_t covered = 0;
  std::size_t total = 0;
  for (const auto& r : references) {
    const auto toks = tokenize(r, policy);
    total += toks.size();
    for (const auto& [b, e] : find_occurrences(toks, patterns)) covered += e - b;
  }
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(covered) / static_cast<double>(total);
}

}  // namespace gerkit
