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
#include <set>

#include "doctest.h"
#include "gerkit/databuild.h"
#include "gerkit/error.h"
#include "gerkit/hash.h"
#include "gerkit/metrics.h"
#include "support.h"

using namespace gerkit;
using gerkit::testing::TempDir;
using gerkit::testing::WarningCapture;
using nlohmann::json;

namespace {

RetryPolicy fast_retry() {
  RetryPolicy p;
  p.max_retries = 1;
  p.initial_delay = std::chrono::milliseconds(1);
  p.max_delay = std::chrono::milliseconds(2);
  return p;
}

// Simulated services wired together under one temporary directory.
struct Rig {
  TempDir dir;
  std::shared_ptr<ChatBackend> chat;
  std::shared_ptr<BlobStore> store;
  std::unique_ptr<ChatClient> llm;
  std::unique_ptr<TtsClient> tts;
  std::unique_ptr<AsrClient> asr;
  BuildClients clients;

  explicit Rig(ConfusionModel channel, std::shared_ptr<ChatBackend> chat_backend = nullptr,
               std::shared_ptr<TtsBackend> tts_backend = nullptr)
      : chat(chat_backend ? chat_backend : std::make_shared<SimulatedChatBackend>()),
        store(std::make_shared<BlobStore>(dir / "blobs")) {
    llm = std::make_unique<ChatClient>(chat, ClientOptions{.retry = fast_retry()});
    tts = std::make_unique<TtsClient>(tts_backend ? tts_backend : std::make_shared<SimulatedTtsBackend>(), store,
                                      TtsOptions{.retry = fast_retry()});
    asr = std::make_unique<AsrClient>(std::make_shared<SimulatedAsrBackend>(channel), store,
                                      AsrOptions{.retry = fast_retry()});
    clients.llm = llm.get();
    clients.tts = tts.get();
    clients.asr = asr.get();
  }
};

RareWordList words_of(std::initializer_list<const char*> ws) {
  RareWordList list(Language::kEn);
  for (const char* w : ws) list.add(w);
  return list;
}

BuildConfig small_config(int t, int s) {
  BuildConfig cfg;
  cfg.transcripts_per_word = t;
  cfg.speakers = s;
  cfg.nbest = 5;
  cfg.seed = 3;
  return cfg;
}

ConfusionModel always_erring() {
  ConfusionModel m;
  m.p_ins = 1.0;
  return m;
}

ErrorPairExample make_example(int i) {
  ErrorPairExample ex;
  ex.reference = "reference " + std::to_string(i);
  ex.nbest = {"u" + std::to_string(i), {{"reference " + std::to_string(i + 1), -1.0}, {"x", std::nullopt}}};
  ex.rare_word = "reference";
  ex.transcript_idx = 1 + i % 3;
  ex.speaker_id = 1 + i % 7;
  return ex;
}

std::vector<ErrorPairExample> make_examples(int n) {
  std::vector<ErrorPairExample> out;
  for (int i = 0; i < n; ++i) out.push_back(make_example(i));
  return out;
}

// Fails every synthesis whose text mentions `poison`.
class PoisonedTts : public SimulatedTtsBackend {
 public:
  explicit PoisonedTts(std::string poison) : poison_(std::move(poison)) {}
  std::string synthesize(const TtsJob& job) override {
    if (job.text.find(poison_) != std::string::npos) throw TransientError("HTTP 503");
    return SimulatedTtsBackend::synthesize(job);
  }

 private:
  std::string poison_;
};

}  // namespace

TEST_CASE("config validation") {
  BuildConfig cfg;
  CHECK(cfg.transcripts_per_word == 4);
  CHECK(cfg.speakers == 7);
  CHECK(cfg.nbest == 5);
  CHECK(cfg.split.train == 4);
  CHECK(cfg.split.val == 1);
  CHECK_NOTHROW(cfg.validate());
  for (auto mutate : std::vector<void (*)(BuildConfig&)>{
           [](BuildConfig& c) { c.transcripts_per_word = 0; }, [](BuildConfig& c) { c.speakers = 0; },
           [](BuildConfig& c) { c.nbest = 0; }, [](BuildConfig& c) { c.split.val = 0; }}) {
    BuildConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
  }
  cfg.voices = {"alloy", "echo"};
  CHECK(cfg.voice_for(2) == "echo");
  CHECK(cfg.voice_for(3) == "speaker-3");
}

TEST_CASE("W x T x S candidates with an always-erring channel") {
  Rig rig(always_erring());
  const auto words = words_of({"anemia", "insulin"});
  const auto r = generate_pairs(words, small_config(3, 2), rig.clients);
  CHECK(r.report.n_candidates == 12);
  CHECK(r.report.n_dropped_no_error == 0);
  CHECK(r.report.n_kept == 12);
  REQUIRE(r.examples.size() == 12);

  // Ordered by (word, transcript, speaker).
  std::size_t i = 0;
  for (const char* w : {"anemia", "insulin"}) {
    for (int t = 1; t <= 3; ++t) {
      for (int s = 1; s <= 2; ++s, ++i) {
        CHECK(r.examples[i].rare_word == w);
        CHECK(r.examples[i].transcript_idx == t);
        CHECK(r.examples[i].speaker_id == s);
      }
    }
  }
  const NormPolicy en = NormPolicy::for_language(Language::kEn);
  for (const auto& ex : r.examples) {
    CHECK(wer(ex.reference, ex.nbest.best().text, en) > 0.0);
    CHECK(contains_rare_word(ex.reference, ex.rare_word, Language::kEn));
    CHECK(ex.nbest.hypotheses.size() <= 5);
    CHECK_FALSE(ex.phonetic);
  }
  REQUIRE(r.report.per_word.size() == 2);
  for (const auto& w : r.report.per_word) {
    CHECK(w.candidates == 6);
    CHECK(w.kept + w.dropped_no_error == w.candidates);
  }
}

TEST_CASE("zero-noise channel keeps nothing") {
  Rig rig(ConfusionModel{});
  const auto r = generate_pairs(words_of({"anemia", "insulin"}), small_config(3, 2), rig.clients);
  CHECK(r.examples.empty());
  CHECK(r.report.n_candidates == 12);
  CHECK(r.report.n_dropped_no_error == 12);
  CHECK(r.report.n_kept == 0);
}

TEST_CASE("errors only in non-rare words are kept") {
  auto mock = std::make_shared<MockChatBackend>([](const ChatExchange&) {
    return std::string("1. The anemia test came back.\n2. Her anemia test was normal.\n");
  });
  ConfusionModel channel;
  channel.sub_table["test"] = {{"text", 1.0}};
  channel.p_sub = 1.0;
  Rig rig(channel, mock);
  const auto r = generate_pairs(words_of({"anemia"}), small_config(2, 1), rig.clients);
  REQUIRE(r.examples.size() == 2);
  for (const auto& ex : r.examples) {
    CHECK(ex.nbest.best().text.find("text") != std::string::npos);
    CHECK(contains_rare_word(ex.nbest.best().text, "anemia", Language::kEn));
  }
}

TEST_CASE("builds are deterministic and checkpointed") {
  ConfusionModel channel;
  channel.p_sub = 0.3;
  channel.p_del = 0.2;
  channel.p_ins = 0.2;
  channel.seed = 11;
  const auto words = words_of({"anemia", "insulin", "tachycardia"});
  auto cfg = small_config(2, 3);
  Rig a(channel);
  Rig b(channel);
  const auto ra = generate_pairs(words, cfg, a.clients, a.dir / "state");
  const auto rb = generate_pairs(words, cfg, b.clients);
  CHECK(ra.examples == rb.examples);
  CHECK(ra.report.n_kept == rb.report.n_kept);
  CHECK(ra.report.n_kept + ra.report.n_dropped_no_error == ra.report.n_candidates);

  const std::size_t llm_calls = a.llm->backend_calls();
  const std::size_t tts_calls = a.tts->backend_calls();
  const auto again = generate_pairs(words, cfg, a.clients, a.dir / "state");
  CHECK(again.examples == ra.examples);
  CHECK(to_json(again.report) == to_json(ra.report));
  CHECK(a.llm->backend_calls() == llm_calls);
  CHECK(a.tts->backend_calls() == tts_calls);

  cfg.workers = 1;
  Rig c(channel);
  CHECK(generate_pairs(words, cfg, c.clients).examples == ra.examples);
}

TEST_CASE("short generations are retried") {
  std::atomic<int> call{0};
  auto mock = std::make_shared<MockChatBackend>([&](const ChatExchange& ex) -> std::string {
    const std::string w = ex.vars.at("word");
    if (w == "insulin") return "Nothing useful here.";
    return call.fetch_add(1) == 0 ? "1. Only one " + w + " sentence." : "1. Only one " + w + " sentence.\n2. A second " + w + " line.\n3. A third " + w + " line.";
  });
  Rig rig(always_erring(), mock);
  WarningCapture warnings;
  auto cfg = small_config(3, 1);
  cfg.workers = 1;
  const auto r = generate_pairs(words_of({"anemia", "insulin"}), cfg, rig.clients);
  REQUIRE(r.report.per_word.size() == 2);
  CHECK(r.report.per_word[0].retries == 1);
  CHECK_FALSE(r.report.per_word[0].skipped);
  CHECK(r.report.per_word[0].candidates == 3);
  CHECK(r.report.per_word[1].skipped);
  CHECK(r.report.per_word[1].retries == 2);
  CHECK(r.report.per_word[1].candidates == 0);
  CHECK(r.report.n_skipped_words() == 1);
  CHECK(r.report.n_candidates == 3);
  CHECK(r.report.n_retries == 3);
  CHECK(mock->calls() == 5);
  CHECK(warnings.contains("skipped rare word 'insulin'"));

  const json j = to_json(r.report);
  CHECK(j["n_skipped_words"] == 1);
  CHECK(j["per_word"][1]["skipped"] == true);
}

TEST_CASE("a systemic failure aborts with a partial manifest") {
  Rig rig(always_erring(), nullptr, std::make_shared<PoisonedTts>("insulin"));
  auto cfg = small_config(2, 1);
  cfg.workers = 1;
  try {
    generate_pairs(words_of({"anemia", "insulin", "hemoglobin"}), cfg, rig.clients, rig.dir / "state");
    FAIL("expected BuildAborted");
  } catch (const BuildAborted& e) {
    REQUIRE_FALSE(e.manifest_path().empty());
    const json m = json::parse(read_file(e.manifest_path()));
    CHECK(m["status"] == "aborted");
    CHECK(m["failed_word"] == "insulin");
    CHECK(m["completed_words"] == json::array({"anemia"}));
    CHECK(m["config"]["transcripts_per_word"] == 2);
  }
  // ServiceError is the base, so callers can treat it as a service failure.
  CHECK_THROWS_AS(generate_pairs(words_of({"insulin"}), cfg, rig.clients), ServiceError);
}

TEST_CASE("missing clients are rejected") {
  Rig rig(ConfusionModel{});
  BuildClients partial = rig.clients;
  partial.asr = nullptr;
  CHECK_THROWS_AS(generate_pairs(words_of({"anemia"}), small_config(1, 1), partial), PreconditionError);
  auto cfg = small_config(1, 1);
  cfg.phonetic_scheme = PhoneticScheme::kLsp;
  CHECK_THROWS_AS(generate_pairs(words_of({"anemia"}), cfg, rig.clients), PreconditionError);
}

TEST_CASE("phonetic context comes from the 1-best") {
  Rig rig(always_erring());
  const auto catalog = PromptCatalog::builtin();
  PhoneticResources res;
  res.llm = rig.llm.get();
  res.cache = std::make_shared<PhoneticCache>();
  res.catalog = &catalog;
  PhoneticConverter conv(res);
  rig.clients.phonetics = &conv;
  auto cfg = small_config(1, 2);
  cfg.phonetic_scheme = PhoneticScheme::kLsp;
  const auto r = generate_pairs(words_of({"anemia"}), cfg, rig.clients);
  REQUIRE(r.examples.size() == 2);
  for (const auto& ex : r.examples) {
    REQUIRE(ex.phonetic);
    CHECK(ex.phonetic->scheme == PhoneticScheme::kLsp);
    CHECK(ex.phonetic->source_text == ex.nbest.best().text);
    // The simulated LLM answers with the casefolded input.
    CHECK(ex.phonetic->text == casefold(ex.nbest.best().text));
  }
}

TEST_CASE("split: ratio arithmetic and determinism") {
  const auto ex80 = make_examples(80);
  auto [train, val] = split(ex80, {}, 7);
  CHECK(train.size() == 64);
  CHECK(val.size() == 16);
  std::set<std::string> ids;
  for (const auto& e : train) ids.insert(e.nbest.utterance_id);
  for (const auto& e : val) CHECK(ids.insert(e.nbest.utterance_id).second);
  CHECK(ids.size() == 80);

  auto again = split(ex80, {}, 7);
  CHECK(again.first == train);
  CHECK(again.second == val);
  CHECK(split(ex80, {}, 8).second != val);

  auto [t5, v5] = split(make_examples(5), {}, 1);
  CHECK(t5.size() == 4);
  CHECK(v5.size() == 1);

  for (int n = 5; n <= 120; n += 7) {
    for (SplitRatio r : {SplitRatio{4, 1}, SplitRatio{3, 2}, SplitRatio{1, 1}}) {
      auto [t, v] = split(make_examples(n), r, 3);
      CHECK(t.size() + v.size() == static_cast<std::size_t>(n));
      const double ideal = static_cast<double>(n) * r.train / (r.train + r.val);
      CHECK(std::abs(static_cast<double>(t.size()) - ideal) <= 1.0);
    }
  }
  CHECK_THROWS_AS(split(ex80, {0, 1}, 1), PreconditionError);
}

TEST_CASE("split: fewer examples than ratio parts") {
  WarningCapture warnings;
  auto [t, v] = split(make_examples(3), {}, 1);
  CHECK(t.size() == 3);
  CHECK(v.empty());
  CHECK(warnings.contains("degenerate split"));
}

TEST_CASE("fine-tune export") {
  TempDir dir;
  ErrorPairExample ex;
  ex.reference = "the sun is rising";
  ex.nbest = {"w0-t1-s1",
              {{"the son is rising", -0.0}, {"the sun is rising", -1.0}, {"a son is rising", -1.0},
               {"the son his rising", -2.0}, {"the sons rising", -2.0}}};
  ex.phonetic = PhoneticText{PhoneticScheme::kLsp, Language::kEn, "thuh sun iz rahy-zing", "the son is rising"};
  ex.rare_word = "sun";
  const auto catalog = PromptCatalog::builtin();
  const auto m = export_finetune({ex}, catalog, dir / "train.jsonl", Language::kEn);
  CHECK(m.n_records == 1);
  const std::string file = read_file(dir / "train.jsonl");
  CHECK(m.sha256 == sha256_hex(file));
  CHECK(m.metadata_sha256 == sha256_hex(read_file(m.metadata_path)));
  CHECK(std::count(file.begin(), file.end(), '\n') == 1);
  const json rec = json::parse(file);
  REQUIRE(rec["messages"].size() == 3);
  CHECK(rec["messages"][0]["role"] == "system");
  CHECK(rec["messages"][1]["role"] == "user");
  CHECK(rec["messages"][2]["role"] == "assistant");
  CHECK(rec["messages"][2]["content"] == "the sun is rising");
  const std::string user = rec["messages"][1]["content"];
  for (int i = 1; i <= 5; ++i) CHECK(user.find(std::to_string(i) + ". ") != std::string::npos);
  CHECK(user.find("Pronunciation: thuh sun iz rahy-zing") != std::string::npos);
  CHECK(user == build_ger_messages(to_ger_request(ex, Language::kEn))[1].content);

  const json mj = to_json(m);
  CHECK(mj["path"] == "train.jsonl");
  CHECK(mj["n_records"] == 1);
}

TEST_CASE("fine-tune export round trip and errors") {
  TempDir dir;
  const auto catalog = PromptCatalog::builtin();
  const auto examples = make_examples(6);
  export_finetune(examples, catalog, dir / "a.jsonl", Language::kEn);
  CHECK(load_finetune(dir / "a.jsonl") == examples);

  // Same input, same bytes.
  export_finetune(examples, catalog, dir / "b.jsonl", Language::kEn);
  CHECK(read_file(dir / "a.jsonl") == read_file(dir / "b.jsonl"));

  CHECK_THROWS_AS(export_finetune({}, catalog, dir / "c.jsonl", Language::kEn), PreconditionError);
  atomic_write_file(dir / "blocker", "x");
  CHECK_THROWS_AS(export_finetune(examples, catalog, dir / "blocker" / "d.jsonl", Language::kEn), ExportError);

  // A sidecar that disagrees with the records is rejected.
  std::string meta = read_file(dir / "a.jsonl.meta.jsonl");
  meta = meta.substr(meta.find('\n') + 1);
  atomic_write_file(dir / "a.jsonl.meta.jsonl", meta);
  CHECK_THROWS_AS(load_finetune(dir / "a.jsonl"), DecodeError);
}
