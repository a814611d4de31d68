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

#include <algorithm>
#include <sstream>

#include "gerkit/corpus.h"
#include "gerkit/error.h"
#include "gerkit/metrics.h"
#include "gerkit/phonetics.h"
#include "gerkit/prompts.h"
#include "gerkit/services.h"

namespace gerkit {
namespace {

constexpr std::size_t kMaxTokensPerWord = 6;

std::vector<std::string> corpus_lines(std::string_view corpus_text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(corpus_text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_word_lines(std::string_view response) {
  std::vector<std::string> words;
  bool rejected_content = false;
  std::istringstream in{std::string(trim_llm_text(response))};
  std::string line;
  while (std::getline(in, line)) {
    std::string item = trim_llm_text(strip_list_marker(line));
    if (item.empty()) continue;
    // "Here are the words:" style preambles.
    if (item.back() == ':' || item.rfind("：") == item.size() - std::string("：").size()) {
      rejected_content = true;
      continue;
    }
    if (split_whitespace(item).size() > kMaxTokensPerWord) {
      rejected_content = true;
      continue;
    }
    words.push_back(std::move(item));
  }
  if (words.empty() && rejected_content) {
    throw ParseError("no word lines in extraction response", std::string(response));
  }
  return words;
}

RareWordList extract_rare_words(std::string_view corpus_text, Language language, ChatClient& llm,
                                double target_coverage_pct, const PromptCatalog& catalog) {
  if (trim(corpus_text).empty()) throw PreconditionError("corpus text is empty");
  if (!(target_coverage_pct > 0.0 && target_coverage_pct <= 100.0)) {
    throw PreconditionError("target coverage must be in (0, 100]");
  }
  ChatExchange ex;
  ex.messages.push_back({"user", build_extraction_prompt(corpus_text, language, catalog)});
  ex.temperature = 0.0;
  ex.task = "extract";
  ex.vars = {{"text", std::string(corpus_text)}, {"language", std::string(to_string(language))}};
  const std::string response = llm.chat(ex);

  RareWordList list(language, "llm-extraction");
  for (const auto& w : parse_word_lines(response)) {
    if (normalize_entry(w, language).empty()) continue;
    list.add(w);
  }
  if (list.empty()) throw EmptyList("the LLM proposed no rare words");

  const auto refs = corpus_lines(corpus_text);
  const NormPolicy policy = NormPolicy::for_language(language);
  double coverage = rare_word_coverage(refs, list, policy);
  while (coverage >= target_coverage_pct) {
    if (list.size() <= 1) {
      throw CoverageInfeasible("rare word coverage " + std::to_string(coverage) + "% cannot go below " +
                                   std::to_string(target_coverage_pct) + "%",
                               coverage);
    }
    // Drop the most frequent entry (occurrence count, then covered
    // tokens); remaining ties go to the later entry.
    std::size_t victim = 0;
    std::pair<std::size_t, std::size_t> victim_freq{0, 0};
    for (std::size_t i = 0; i < list.size(); ++i) {
      RareWordList single(language);
      single.add(list.entries()[i].surface);
      const auto patterns = rare_word_patterns(single, policy);
      std::pair<std::size_t, std::size_t> freq{0, 0};
      for (const auto& r : refs) {
        for (const auto& [b, e] : find_occurrences(tokenize(r, policy), patterns)) {
          ++freq.first;
          freq.second += e - b;
        }
      }
      if (i == 0 || freq >= victim_freq) {
        victim_freq = freq;
        victim = i;
      }
    }
    warn("dropping frequent rare word '" + list.entries()[victim].surface + "' (" +
         std::to_string(victim_freq.first) + " occurrences)");
    list.remove_at(victim);
    coverage = rare_word_coverage(refs, list, policy);
  }
  return list;
}

}  // namespace gerkit
