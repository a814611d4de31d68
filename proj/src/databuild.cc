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

#include "gerkit/databuild.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

#include "gerkit/error.h"
#include "gerkit/hash.h"
#include "gerkit/metrics.h"
#include "gerkit/parallel.h"
#include "gerkit/store.h"

namespace gerkit {

void BuildConfig::validate() const {
  if (transcripts_per_word < 1) throw PreconditionError("T (transcripts per word) must be >= 1");
  if (speakers < 1) throw PreconditionError("S (speakers) must be >= 1");
  if (nbest < 1) throw PreconditionError("N (n-best size) must be >= 1");
  if (split.train < 1 || split.val < 1) throw PreconditionError("split ratio parts must be positive");
  if (max_generation_retries < 0) throw PreconditionError("max_generation_retries must be >= 0");
}

std::string BuildConfig::voice_for(int speaker_id) const {
  if (speaker_id >= 1 && static_cast<std::size_t>(speaker_id) <= voices.size()) {
    return voices[static_cast<std::size_t>(speaker_id - 1)];
  }
  return "speaker-" + std::to_string(speaker_id);
}

json to_json(const BuildConfig& cfg) {
  json j = {{"transcripts_per_word", cfg.transcripts_per_word},
            {"speakers", cfg.speakers},
            {"nbest", cfg.nbest},
            {"split", {cfg.split.train, cfg.split.val}},
            {"seed", cfg.seed},
            {"max_generation_retries", cfg.max_generation_retries},
            {"generation_temperature", cfg.generation_temperature},
            {"model_id", cfg.model_id},
            {"voices", cfg.voices}};
  j["phonetic_scheme"] = cfg.phonetic_scheme ? json(to_string(*cfg.phonetic_scheme)) : json(nullptr);
  return j;
}

std::size_t BuildReport::n_skipped_words() const {
  return static_cast<std::size_t>(
      std::count_if(per_word.begin(), per_word.end(), [](const WordReport& w) { return w.skipped; }));
}

json to_json(const BuildReport& r) {
  json words = json::array();
  for (const auto& w : r.per_word) {
    words.push_back({{"word", w.word},
                     {"transcripts", w.transcripts},
                     {"candidates", w.candidates},
                     {"kept", w.kept},
                     {"dropped_no_error", w.dropped_no_error},
                     {"retries", w.retries},
                     {"skipped", w.skipped},
                     {"error", w.error}});
  }
  return {{"n_candidates", r.n_candidates},
          {"n_dropped_no_error", r.n_dropped_no_error},
          {"n_kept", r.n_kept},
          {"n_retries", r.n_retries},
          {"n_skipped_words", r.n_skipped_words()},
          {"per_word", words}};
}

namespace {

struct WordOutcome {
  WordReport report;
  std::vector<ErrorPairExample> examples;
  bool done = false;
  std::exception_ptr failure;
};

// T transcripts for one word, or nullopt when generation kept coming up
// short. Checkpointed in `state` when present.
std::optional<std::vector<std::string>> generate_transcripts(const RareWordEntry& word, Language language,
                                                             const BuildConfig& cfg, BuildClients& clients,
                                                             JsonlCache* state, WordReport& report) {
  const std::string prompt = build_transcript_gen_prompt(word.surface, cfg.transcripts_per_word, language,
                                                         word.domain_hint, *clients.catalog);
  const std::string key = content_key({"transcripts", prompt, cfg.model_id});
  if (state) {
    if (auto hit = state->get(key)) {
      // Retries are restored too, so a resumed build reports the same counts.
      report.retries = hit->value("retries", 0);
      return hit->at("transcripts").get<std::vector<std::string>>();
    }
  }
  ChatExchange ex;
  ex.messages.push_back({"user", prompt});
  ex.temperature = cfg.generation_temperature;
  ex.model_id = cfg.model_id;
  ex.task = "transcripts";
  ex.vars = {{"word", word.surface},
             {"count", std::to_string(cfg.transcripts_per_word)},
             {"language", std::string(to_string(language))}};

  std::vector<std::string> pool;
  for (int attempt = 0; attempt <= cfg.max_generation_retries; ++attempt) {
    if (attempt > 0) ++report.retries;
    const std::string response = clients.llm->chat(ex);
    std::vector<std::string> items;
    try {
      items = parse_generated_transcripts(response, cfg.transcripts_per_word, word.surface, language);
    } catch (const ShortGeneration& e) {
      items = e.items();
    }
    for (auto& item : items) {
      if (std::find(pool.begin(), pool.end(), item) == pool.end()) pool.push_back(std::move(item));
    }
    if (static_cast<int>(pool.size()) >= cfg.transcripts_per_word) {
      pool.resize(static_cast<std::size_t>(cfg.transcripts_per_word));
      if (state) state->put(key, json{{"transcripts", pool}, {"retries", report.retries}});
      return pool;
    }
  }
  report.error = "short generation: " + std::to_string(pool.size()) + " of " +
                 std::to_string(cfg.transcripts_per_word) + " transcripts";
  return std::nullopt;
}

void build_word(std::size_t index, const RareWordEntry& word, Language language, const BuildConfig& cfg,
                BuildClients& clients, JsonlCache* state, WordOutcome& out) {
  out.report.word = word.surface;
  auto transcripts = generate_transcripts(word, language, cfg, clients, state, out.report);
  if (!transcripts) {
    out.report.skipped = true;
    out.done = true;
    return;
  }
  out.report.transcripts = static_cast<int>(transcripts->size());
  const NormPolicy policy = NormPolicy::for_language(language);
  for (int t = 1; t <= cfg.transcripts_per_word; ++t) {
    const std::string& reference = (*transcripts)[static_cast<std::size_t>(t - 1)];
    const auto ref_tokens = tokenize(reference, policy);
    for (int s = 1; s <= cfg.speakers; ++s) {
      TtsJob job{reference, s, cfg.voice_for(s), language};
      const std::string locator = clients.tts->synthesize(job);
      std::ostringstream id;
      id << "w" << index << "-t" << t << "-s" << s;
      AsrResult asr = clients.asr->transcribe(locator, static_cast<std::size_t>(cfg.nbest), id.str());
      ++out.report.candidates;
      if (tokenize(asr.nbest.front().text, policy) == ref_tokens) {
        ++out.report.dropped_no_error;
        continue;
      }
      ErrorPairExample ex;
      ex.reference = reference;
      ex.nbest = asr.to_hypothesis_set();
      ex.rare_word = word.surface;
      ex.transcript_idx = t;
      ex.speaker_id = s;
      if (cfg.phonetic_scheme && !trim(ex.nbest.best().text).empty()) {
        ex.phonetic = clients.phonetics->convert(*cfg.phonetic_scheme, language, ex.nbest.best().text);
      }
      out.examples.push_back(std::move(ex));
      ++out.report.kept;
    }
  }
  out.done = true;
}

}  // namespace

BuildResult generate_pairs(const RareWordList& words, const BuildConfig& cfg, BuildClients& clients,
                           const std::optional<std::filesystem::path>& state_dir) {
  cfg.validate();
  if (!clients.llm || !clients.tts || !clients.asr) {
    throw PreconditionError("generate_pairs needs LLM, TTS, and ASR clients");
  }
  if (cfg.phonetic_scheme && !clients.phonetics) {
    throw PreconditionError("phonetic context requested without a phonetic converter");
  }
  BuildClients c = clients;
  const PromptCatalog fallback_catalog = PromptCatalog::builtin();
  if (!c.catalog) c.catalog = &fallback_catalog;

  std::unique_ptr<JsonlCache> state;
  if (state_dir) state = std::make_unique<JsonlCache>(*state_dir / "transcripts.jsonl");

  std::vector<WordOutcome> outcomes(words.size());
  std::atomic<bool> abort{false};
  parallel_for(words.size(), cfg.workers, [&](std::size_t i) {
    if (abort.load()) return;
    try {
      build_word(i, words.entries()[i], words.language(), cfg, c, state.get(), outcomes[i]);
    } catch (const ServiceError& e) {
      outcomes[i].report.error = e.what();
      outcomes[i].failure = std::current_exception();
      abort.store(true);
    }
  });

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].failure) continue;
    std::string manifest_path;
    std::string cause;
    try {
      std::rethrow_exception(outcomes[i].failure);
    } catch (const std::exception& e) {
      cause = e.what();
    }
    if (state_dir) {
      json done = json::array();
      for (const auto& o : outcomes) {
        if (o.done) done.push_back(o.report.word);
      }
      const json manifest = {{"status", "aborted"},
                             {"failed_word", words.entries()[i].surface},
                             {"error", cause},
                             {"completed_words", done},
                             {"config", to_json(cfg)}};
      manifest_path = (*state_dir / "partial_manifest.json").string();
      atomic_write_file(manifest_path, manifest.dump(2) + "\n");
    }
    throw BuildAborted("build aborted at word '" + words.entries()[i].surface + "': " + cause, manifest_path);
  }

  BuildResult result;
  for (auto& o : outcomes) {
    result.report.n_candidates += static_cast<std::size_t>(o.report.candidates);
    result.report.n_dropped_no_error += static_cast<std::size_t>(o.report.dropped_no_error);
    result.report.n_kept += static_cast<std::size_t>(o.report.kept);
    result.report.n_retries += static_cast<std::size_t>(o.report.retries);
    if (o.report.skipped) warn("skipped rare word '" + o.report.word + "': " + o.report.error);
    result.report.per_word.push_back(std::move(o.report));
    for (auto& ex : o.examples) result.examples.push_back(std::move(ex));
  }
  return result;
}

std::pair<std::vector<ErrorPairExample>, std::vector<ErrorPairExample>> split(
    const std::vector<ErrorPairExample>& examples, SplitRatio ratio, uint64_t seed) {
  if (ratio.train < 1 || ratio.val < 1) throw PreconditionError("split ratio parts must be positive");
  const std::size_t n = examples.size();
  const std::size_t parts = static_cast<std::size_t>(ratio.train + ratio.val);
  if (n < parts) {
    warn("degenerate split: " + std::to_string(n) + " examples for a " + std::to_string(ratio.train) + ":" +
         std::to_string(ratio.val) + " ratio; all go to train");
    return {examples, {}};
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * ratio.train / static_cast<double>(parts)));
  std::vector<bool> in_train(n, false);
  for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = true;
  std::pair<std::vector<ErrorPairExample>, std::vector<ErrorPairExample>> out;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.first : out.second).push_back(examples[i]);
  return out;
}

json to_json(const ExportManifest& m) {
  return {{"path", m.path.filename().string()},
          {"metadata_path", m.metadata_path.filename().string()},
          {"n_records", m.n_records},
          {"sha256", m.sha256},
          {"metadata_sha256", m.metadata_sha256}};
}

GerRequest to_ger_request(const ErrorPairExample& example, Language language) {
  return {example.nbest.texts(), example.phonetic, language};
}

namespace {

std::filesystem::path metadata_path_for(const std::filesystem::path& path) {
  return path.string() + ".meta.jsonl";
}

}  // namespace

ExportManifest export_finetune(const std::vector<ErrorPairExample>& examples, const PromptCatalog& catalog,
                               const std::filesystem::path& path, Language language) {
  if (examples.empty()) throw PreconditionError("nothing to export");
  std::string records;
  std::string meta;
  for (const auto& ex : examples) {
    auto messages = build_ger_messages(to_ger_request(ex, language), catalog);
    messages.push_back({"assistant", ex.reference});
    records += json{{"messages", messages}}.dump() + "\n";
    meta += json(ex).dump() + "\n";
  }
  ExportManifest m;
  m.path = path;
  m.metadata_path = metadata_path_for(path);
  m.n_records = examples.size();
  m.sha256 = sha256_hex(records);
  m.metadata_sha256 = sha256_hex(meta);
  try {
    atomic_write_file(m.path, records);
    atomic_write_file(m.metadata_path, meta);
  } catch (const std::filesystem::filesystem_error& e) {
    throw ExportError(e.what());
  }
  return m;
}

std::vector<ErrorPairExample> load_finetune(const std::filesystem::path& path) {
  std::istringstream records(read_file(path));
  std::istringstream meta(read_file(metadata_path_for(path)));
  std::vector<ErrorPairExample> out;
  std::string rec_line;
  std::string meta_line;
  std::size_t lineno = 0;
  while (std::getline(records, rec_line)) {
    ++lineno;
    if (rec_line.empty()) continue;
    if (!std::getline(meta, meta_line)) throw DecodeError("metadata sidecar is shorter than " + path.string());
    try {
      const json rec = json::parse(rec_line);
      auto ex = json::parse(meta_line).get<ErrorPairExample>();
      const auto& msgs = rec.at("messages");
      if (msgs.empty() || msgs.back().at("content").get<std::string>() != ex.reference) {
        throw DecodeError("record " + std::to_string(lineno) + " does not match its metadata");
      }
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DecodeError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (std::getline(meta, meta_line) && !meta_line.empty()) {
    throw DecodeError("metadata sidecar is longer than " + path.string());
  }
  return out;
}

}  // namespace gerkit
