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

#include "gerkit/corpus.h"

#include <sstream>

#include "gerkit/error.h"
#include "gerkit/store.h"

namespace gerkit {

bool RareWordList::add(std::string_view surface, std::optional<std::string> domain_hint) {
  std::string trimmed = trim(surface);
  if (trimmed.empty()) throw PreconditionError("rare word entry is empty");
  std::string key = normalize_entry(trimmed, language_);
  if (key.empty()) throw PreconditionError("rare word entry normalizes to nothing: " + trimmed);
  for (const auto& e : entries_) {
    if (e.key == key) return false;
  }
  if (domain_hint) {
    *domain_hint = trim(*domain_hint);
    if (domain_hint->empty()) domain_hint.reset();
  }
  entries_.push_back({std::move(trimmed), std::move(key), std::move(domain_hint)});
  return true;
}

void RareWordList::remove_at(std::size_t index) {
  if (index >= entries_.size()) throw PreconditionError("rare word index out of range");
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
}

bool RareWordList::contains(std::string_view surface) const {
  const std::string key = normalize_entry(surface, language_);
  for (const auto& e : entries_) {
    if (e.key == key) return true;
  }
  return false;
}

RareWordList parse_rare_words(std::string_view text, Language language, std::string source) {
  if (!is_valid_utf8(text)) throw DecodeError("rare word list is not valid UTF-8: " + source);
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  RareWordList list(language, std::move(source));
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::optional<std::string> hint;
    std::string_view surface = line;
    if (auto tab = line.find('\t'); tab != std::string_view::npos) {
      surface = line.substr(0, tab);
      hint = std::string(line.substr(tab + 1));
    }
    if (trim(surface).empty()) continue;
    if (normalize_entry(surface, language).empty()) {
      warn("rare word line " + std::to_string(lineno) + " has no content after normalization; skipped");
      continue;
    }
    if (!list.add(surface, std::move(hint))) {
      warn("duplicate rare word after normalization on line " + std::to_string(lineno) + ": " +
           trim(surface));
    }
  }
  if (list.empty()) throw EmptyList("rare word list is empty: " + list.source());
  return list;
}

RareWordList load_rare_words(const std::filesystem::path& path, Language language) {
  return parse_rare_words(read_file(path), language, path.string());
}

std::string format_rare_words(const RareWordList& list) {
  std::string out;
  for (const auto& e : list.entries()) {
    out += e.surface;
    if (e.domain_hint) {
      out.push_back('\t');
      out += *e.domain_hint;
    }
    out.push_back('\n');
  }
  return out;
}

void save_rare_words(const RareWordList& list, const std::filesystem::path& path) {
  atomic_write_file(path, format_rare_words(list));
}

void EvalSet::add(EvalUtterance utt) {
  if (utt.id.empty()) throw PreconditionError("utterance id is empty");
  if (trim(utt.reference).empty()) throw PreconditionError("utterance " + utt.id + " has an empty reference");
  if (index_.count(utt.id)) throw PreconditionError("duplicate utterance id " + utt.id);
  index_[utt.id] = utts_.size();
  utts_.push_back(std::move(utt));
}

const EvalUtterance* EvalSet::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &utts_[it->second];
}

namespace {

template <typename F>
void for_each_json_line(std::string_view jsonl, F&& f) {
  if (!is_valid_utf8(jsonl)) throw DecodeError("JSON-lines input is not valid UTF-8");
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < jsonl.size()) {
    std::size_t eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    std::string_view line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw DecodeError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

EvalSet parse_eval_set(std::string_view jsonl, std::string name) {
  EvalSet set(std::move(name));
  for_each_json_line(jsonl, [&](const json& j) { set.add(j.get<EvalUtterance>()); });
  return set;
}

EvalSet load_eval_set(const std::filesystem::path& path) {
  return parse_eval_set(read_file(path), path.stem().string());
}

std::string format_eval_set(const EvalSet& set) {
  std::string out;
  for (const auto& u : set.utterances()) out += json(u).dump() + "\n";
  return out;
}

std::vector<std::string> HypothesisSet::texts() const {
  std::vector<std::string> out;
  out.reserve(hypotheses.size());
  for (const auto& h : hypotheses) out.push_back(h.text);
  return out;
}

void HypothesisSet::validate(std::size_t max_n) const {
  if (hypotheses.empty()) throw PreconditionError("empty hypothesis set for " + utterance_id);
  if (max_n > 0 && hypotheses.size() > max_n) {
    throw PreconditionError("hypothesis set for " + utterance_id + " exceeds N=" + std::to_string(max_n));
  }
}

HypothesisMap parse_hypotheses(std::string_view jsonl) {
  HypothesisMap out;
  for_each_json_line(jsonl, [&](const json& j) {
    auto h = j.get<HypothesisSet>();
    h.validate();
    if (out.count(h.utterance_id)) throw PreconditionError("duplicate hypotheses for " + h.utterance_id);
    out.emplace(h.utterance_id, std::move(h));
  });
  return out;
}

HypothesisMap load_hypotheses(const std::filesystem::path& path) {
  return parse_hypotheses(read_file(path));
}

std::string format_hypotheses(const HypothesisMap& hyps) {
  std::string out;
  for (const auto& [id, h] : hyps) out += json(h).dump() + "\n";
  return out;
}

void to_json(json& j, const Hypothesis& h) {
  j = json{{"text", h.text}};
  if (h.score) j["score"] = *h.score;
}

void from_json(const json& j, Hypothesis& h) {
  h.text = j.at("text").get<std::string>();
  h.score.reset();
  if (j.contains("score") && !j["score"].is_null()) h.score = j["score"].get<double>();
}

void to_json(json& j, const HypothesisSet& h) {
  j = json{{"utterance_id", h.utterance_id}, {"hypotheses", h.hypotheses}};
}

void from_json(const json& j, HypothesisSet& h) {
  h.utterance_id = j.at("utterance_id").get<std::string>();
  h.hypotheses = j.at("hypotheses").get<std::vector<Hypothesis>>();
}

void to_json(json& j, const EvalUtterance& u) {
  j = json{{"id", u.id}, {"reference", u.reference}, {"language", to_string(u.language)}};
  j["audio_ref"] = u.audio_ref ? json(*u.audio_ref) : json(nullptr);
}

void from_json(const json& j, EvalUtterance& u) {
  u.id = j.at("id").get<std::string>();
  u.reference = j.at("reference").get<std::string>();
  u.language = parse_language(j.at("language").get<std::string>());
  u.audio_ref.reset();
  if (j.contains("audio_ref") && !j["audio_ref"].is_null()) u.audio_ref = j["audio_ref"].get<std::string>();
}

void to_json(json& j, const ErrorPairExample& e) {
  j = json{{"reference", e.reference},
           {"nbest", e.nbest},
           {"rare_word", e.rare_word},
           {"transcript_idx", e.transcript_idx},
           {"speaker_id", e.speaker_id}};
  j["phonetic"] = e.phonetic ? json(*e.phonetic) : json(nullptr);
}

void from_json(const json& j, ErrorPairExample& e) {
  e.reference = j.at("reference").get<std::string>();
  e.nbest = j.at("nbest").get<HypothesisSet>();
  e.rare_word = j.at("rare_word").get<std::string>();
  e.transcript_idx = j.at("transcript_idx").get<int>();
  e.speaker_id = j.at("speaker_id").get<int>();
  e.phonetic.reset();
  if (j.contains("phonetic") && !j["phonetic"].is_null()) e.phonetic = j["phonetic"].get<PhoneticText>();
}

}  // namespace gerkit
