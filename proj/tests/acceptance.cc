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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gerkit/corpus.h"
#include "gerkit/databuild.h"
#include "gerkit/error.h"
#include "gerkit/ger.h"
#include "gerkit/hash.h"
#include "gerkit/metrics.h"
#include "gerkit/phonetics.h"
#include "gerkit/prompts.h"
#include "gerkit/report.h"
#include "gerkit/services.h"
#include "gerkit/store.h"
#include "support.h"
#include "toy_fixture.h"

using namespace gerkit;
using gerkit::testing::data_dir;
using gerkit::testing::TempDir;
using gerkit::testing::toy_rows;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Collects failed expectations for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + f;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Metric oracle.

// Full-matrix Levenshtein over already-normalized units.
std::size_t dp_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return d[a.size()][b.size()];
}

double oracle_rate(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  return static_cast<double>(dp_distance(ref, hyp)) / static_cast<double>(std::max<std::size_t>(1, ref.size()));
}

void criterion_metrics(Check& c) {
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> words = {"the", "sun", "son", "is", "rising", "a", "anemia", "cell"};
  const std::vector<std::string> kana = {"あ", "い", "う", "か", "き", "こ", "ん", "に", "ち", "は", "わ"};
  const NormPolicy en = NormPolicy::for_language(Language::kEn);
  const NormPolicy ja = NormPolicy::for_language(Language::kJa);
  const auto start = std::chrono::steady_clock::now();
  const int kPairs = 2000;
  int en_mismatch = 0;
  int ja_mismatch = 0;
  for (int k = 0; k < kPairs; ++k) {
    auto words_of = [&](std::size_t n) {
      std::vector<std::string> v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(words[rng() % words.size()]);
      return v;
    };
    const auto ref = words_of(rng() % 13);
    const auto hyp = words_of(rng() % 13);
    if (wer(join(ref, " "), join(hyp, "  "), en) != oracle_rate(ref, hyp)) ++en_mismatch;

    // Characters, with stray spaces that scoring must ignore.
    auto chars_of = [&](std::size_t n, std::string& text) {
      std::vector<std::string> v;
      for (std::size_t i = 0; i < n; ++i) {
        v.push_back(kana[rng() % kana.size()]);
        text += v.back();
        if (rng() % 5 == 0) text += " ";
      }
      return v;
    };
    std::string rt;
    std::string ht;
    const auto rc = chars_of(rng() % 21, rt);
    const auto hc = chars_of(rng() % 21, ht);
    if (cer(rt, ht, ja) != oracle_rate(rc, hc)) ++ja_mismatch;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(en_mismatch == 0, std::to_string(en_mismatch) + " EN mismatches");
  c.expect(ja_mismatch == 0, std::to_string(ja_mismatch) + " JA mismatches");
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d EN + %d JA pairs match the DP oracle in %.2f s", kPairs, kPairs, secs);
  c.note(buf);
}

// ---------------------------------------------------------------------------
// 2. Phonetic fixtures.

void criterion_table1(Check& c) {
  const auto arpabet = G2pLexicon::load(data_dir() / "en_arpabet.tsv");
  const auto ipa = G2pLexicon::load(data_dir() / "en_ipa.tsv");
  const std::string text = "the sun is rising";
  const auto tts = to_tts_phoneme(text, Language::kEn, arpabet).text;
  const auto ip = to_ipa(text, ipa).text;
  c.expect(tts == "DHAH0 SAH1N IH1Z RAY1ZIH0NG", "ARPAbet gave '" + tts + "'");
  c.expect(ip == "ðə sən ɪz ˈraɪzɪŋ", "IPA gave '" + ip + "'");

  TempDir dir;
  fs::copy_file(data_dir() / "lsp_golden.jsonl", dir / "lsp.jsonl");
  auto mock = std::make_shared<MockChatBackend>([](const ChatExchange&) -> std::string {
    throw ClientError("the golden cache should have answered", 400);
  });
  ChatClient llm(mock);
  PhoneticCache cache(dir / "lsp.jsonl");
  const auto lsp = to_lsp(text, Language::kEn, llm, cache, PromptCatalog::builtin()).text;
  c.expect(lsp == "thuh sun iz rahy-zing", "LSP gave '" + lsp + "'");
  c.expect(mock->calls() == 0, "LSP reached the LLM");
  c.note("ARPAbet, IPA, and LSP rows reproduced");
}

// ---------------------------------------------------------------------------
// Simulated service rig.

struct Rig {
  TempDir dir;
  std::shared_ptr<BlobStore> store;
  std::shared_ptr<SimulatedAsrBackend> asr_backend;
  ChatClient llm;
  TtsClient tts;
  AsrClient asr;

  explicit Rig(const ConfusionModel& channel)
      : store(std::make_shared<BlobStore>(dir / "blobs")),
        asr_backend(std::make_shared<SimulatedAsrBackend>(channel)),
        llm(std::make_shared<SimulatedChatBackend>()),
        tts(std::make_shared<SimulatedTtsBackend>(), store),
        asr(asr_backend, store) {}

  BuildClients clients() { return {&llm, &tts, &asr, nullptr, nullptr}; }
};

RareWordList two_words() {
  RareWordList w(Language::kEn);
  w.add("anemia");
  w.add("insulin");
  return w;
}

// ---------------------------------------------------------------------------
// 3. Pipeline arithmetic and filtering.

void criterion_pipeline(Check& c) {
  BuildConfig cfg;
  cfg.transcripts_per_word = 3;
  cfg.speakers = 2;
  cfg.seed = 17;

  ConfusionModel erring;
  erring.p_ins = 1.0;
  Rig a(erring);
  auto clients = a.clients();
  const auto r = generate_pairs(two_words(), cfg, clients);
  c.expect(r.report.n_candidates == 12, "erring channel: " + std::to_string(r.report.n_candidates) + " candidates");
  c.expect(r.examples.size() == 12, "erring channel kept " + std::to_string(r.examples.size()));
  c.expect(r.report.n_dropped_no_error == 0, "erring channel dropped some");

  Rig quiet(ConfusionModel{});
  clients = quiet.clients();
  const auto q = generate_pairs(two_words(), cfg, clients);
  c.expect(q.report.n_dropped_no_error == 12 && q.examples.empty(),
           "zero-noise channel: dropped " + std::to_string(q.report.n_dropped_no_error) + ", kept " +
               std::to_string(q.examples.size()));

  // Errors on a non-rare word only.
  ConfusionModel non_rare;
  non_rare.sub_table["doctor"] = {{"dock tour", 1.0}};
  non_rare.sub_table["patient"] = {{"patients", 1.0}};
  non_rare.sub_table["was"] = {{"wars", 1.0}};
  non_rare.sub_table["the"] = {{"a", 1.0}};
  non_rare.p_sub = 1.0;
  Rig nr(non_rare);
  clients = nr.clients();
  const auto n = generate_pairs(two_words(), cfg, clients);
  bool rare_intact = !n.examples.empty();
  for (const auto& ex : n.examples) rare_intact = rare_intact && contains_rare_word(ex.nbest.best().text, ex.rare_word, Language::kEn);
  c.expect(rare_intact, "non-rare-only errors were not kept");

  // Two independent runs export identical bytes.
  ConfusionModel noisy;
  noisy.sub_table["anemia"] = {{"a nimia", 1.0}};
  noisy.p_sub = 0.4;
  noisy.p_del = 0.1;
  noisy.p_ins = 0.1;
  noisy.seed = 99;
  std::string bytes[2];
  for (int run = 0; run < 2; ++run) {
    Rig rig(noisy);
    clients = rig.clients();
    const auto built = generate_pairs(two_words(), cfg, clients);
    export_finetune(built.examples, PromptCatalog::builtin(), rig.dir / "train.jsonl", Language::kEn);
    bytes[run] = read_file(rig.dir / "train.jsonl");
  }
  c.expect(!bytes[0].empty() && bytes[0] == bytes[1], "exports differ between runs");
  c.note("12 candidates; 12 dropped with zero noise; " + std::to_string(n.examples.size()) +
         " non-rare-error pairs kept; exports byte-identical");
}

// ---------------------------------------------------------------------------
// 4. Split.

void criterion_split(Check& c) {
  std::vector<ErrorPairExample> ex(80);
  for (int i = 0; i < 80; ++i) {
    ex[static_cast<std::size_t>(i)].reference = "r" + std::to_string(i);
    ex[static_cast<std::size_t>(i)].nbest = {"u" + std::to_string(i), {{"h", std::nullopt}}};
  }
  const auto a = split(ex, SplitRatio{4, 1}, 5);
  const auto b = split(ex, SplitRatio{4, 1}, 5);
  c.expect(a.first.size() == 64 && a.second.size() == 16,
           "sizes " + std::to_string(a.first.size()) + "/" + std::to_string(a.second.size()));
  c.expect(a == b, "same seed gave different partitions");
  std::set<std::string> seen;
  for (const auto& e : a.first) seen.insert(e.reference);
  bool disjoint = true;
  for (const auto& e : a.second) disjoint = seen.insert(e.reference).second && disjoint;
  c.expect(disjoint && seen.size() == 80, "parts overlap or lose examples");
  c.note("64/16, deterministic, disjoint");
}

// ---------------------------------------------------------------------------
// 5. Rare-word scoring.

ConfusionModel toy_channel(double p_sub, uint64_t seed) {
  ConfusionModel m;
  m.sub_table["anemia"] = {{"a nimia", 1.0}};
  m.sub_table["insulin"] = {{"in solin", 1.0}};
  m.sub_table["tachycardia"] = {{"tacky cardia", 1.0}};
  m.sub_table["hemoglobin"] = {{"hemo globin", 1.0}};
  m.sub_table["sickle"] = {{"sick", 1.0}};
  m.sub_table["cell"] = {{"sell", 1.0}};
  m.p_sub = p_sub;
  m.seed = seed;
  return m;
}

RareWordList toy_words() { return parse_rare_words(gerkit::testing::kToyWords, Language::kEn); }

void criterion_scoring(Check& c) {
  const NormPolicy en = NormPolicy::for_language(Language::kEn);
  const RareWordList words = toy_words();
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t ref_occ = 0;
  std::size_t hyp_occ = 0;
  std::size_t correct = 0;
  for (const auto& row : toy_rows()) {
    pairs.emplace_back(row.reference, row.hypothesis);
    ref_occ += row.ref_occ;
    hyp_occ += row.hyp_occ;
    correct += row.correct;
  }
  const auto s = rare_word_scores(pairs, words, en);
  const double recall = static_cast<double>(correct) / static_cast<double>(ref_occ);
  const double precision = static_cast<double>(correct) / static_cast<double>(hyp_occ);
  c.expect(s.n_ref_occurrences == ref_occ && s.n_hyp_occurrences == hyp_occ && s.n_correct == correct,
           "toy counts differ from the enumeration");
  c.expect(s.recall && *s.recall == recall, "toy recall differs");
  c.expect(s.precision && *s.precision == precision, "toy precision differs");
  c.expect(s.f1 && *s.f1 == 2 * recall * precision / (recall + precision), "toy F1 differs");

  // Recall lift.
  const ConfusionModel channel = toy_channel(0.9, 7);
  Rig rig(channel);
  std::vector<std::pair<std::string, std::string>> before;
  std::vector<std::pair<std::string, std::string>> after;
  BuildConfig cfg;
  cfg.seed = 7;
  auto clients = rig.clients();
  const auto built = generate_pairs(words, cfg, clients);
  const auto parts = split(built.examples, cfg.split, cfg.seed);
  const auto corrector = LookupCorrector::train(parts.first, Language::kEn);
  std::size_t i = 0;
  for (const auto& row : toy_rows()) {
    const auto nbest = rig.asr_backend->transcribe_text(row.reference, 5, "eval:t" + std::to_string(i++));
    std::vector<std::string> texts;
    for (const auto& h : nbest) texts.push_back(h.text);
    before.emplace_back(row.reference, texts.front());
    after.emplace_back(row.reference, corrector.correct(texts));
  }
  const auto sb = rare_word_scores(before, words, en);
  const auto sa = rare_word_scores(after, words, en);
  c.expect(sb.recall && *sb.recall < 0.5, "baseline recall " + pct(sb.recall.value_or(-1)) + " is not below 50%");
  c.expect(sa.recall && *sa.recall > 0.9, "corrected recall " + pct(sa.recall.value_or(-1)) + " is not above 90%");
  c.note("toy oracle exact (R " + pct(recall) + ", P " + pct(precision) + "); recall " +
         pct(sb.recall.value_or(0)) + " -> " + pct(sa.recall.value_or(0)) + " with " +
         std::to_string(parts.first.size()) + " training pairs");
}

// ---------------------------------------------------------------------------
// 6. End-to-end wiring.

void criterion_wiring(Check& c) {
  const NormPolicy en = NormPolicy::for_language(Language::kEn);
  EvalSet set("toy");
  HypothesisMap hyps;
  std::map<std::string, std::string> by_nbest;
  std::map<std::string, std::string> raw;
  std::size_t i = 0;
  for (const auto& row : toy_rows()) {
    const std::string id = "t" + std::to_string(i++);
    set.add({id, row.reference, Language::kEn, std::nullopt});
    hyps[id] = {id, {{row.hypothesis, -1.0}, {"alternative " + id, -2.0}}};
    by_nbest[json(hyps[id].texts()).dump()] = row.reference;
    raw[id] = row.hypothesis;
  }
  const RareWordList words = toy_words();

  ChatClient oracle(std::make_shared<MockChatBackend>(
      [&](const ChatExchange& ex) { return by_nbest.at(ex.vars.at("nbest")); }));
  GerClients oc{&oracle, nullptr, nullptr};
  const auto perfect = summarize(run_eval(set, hyps, {}, oc), set, words, en);
  c.expect(perfect.error_rate == 0.0, "oracle WER " + pct(perfect.error_rate));
  c.expect(format_cell(perfect) == "0.0 / 100.0 / 100.0", "oracle cell '" + format_cell(perfect) + "'");

  ChatClient identity(std::make_shared<MockChatBackend>([](const ChatExchange& ex) {
    return json::parse(ex.vars.at("nbest")).at(0).get<std::string>();
  }));
  GerClients ic{&identity, nullptr, nullptr};
  auto echoed = summarize(run_eval(set, hyps, {}, ic), set, words, en);
  const auto baseline = summarize(raw, set, words, en, echoed.condition);
  c.expect(echoed == baseline, "identity outputs score " + format_cell(echoed) + ", raw ASR " + format_cell(baseline));
  c.note("oracle cell " + format_cell(perfect) + "; identity = baseline " + format_cell(baseline));
}

// ---------------------------------------------------------------------------
// CLI helpers.

int run_cli(const fs::path& dir, const std::string& args, std::string* out = nullptr) {
  const std::string cmd = "cd " + dir.string() + " && " + GERKIT_CLI + " " + args + " > cli.out 2> cli.err";
  const int status = std::system(cmd.c_str());
  if (out) *out = read_file(dir / "cli.out");
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_toy_inputs(const fs::path& dir, double p_sub) {
  atomic_write_file(dir / "words.txt", gerkit::testing::kToyWords);
  std::string eval;
  std::string corpus;
  std::size_t i = 0;
  for (const auto& row : toy_rows()) {
    eval += json{{"id", "t" + std::to_string(i++)}, {"reference", row.reference}, {"language", "EN"}}.dump() + "\n";
    corpus += std::string(row.reference) + "\n";
  }
  atomic_write_file(dir / "eval.jsonl", eval);
  atomic_write_file(dir / "corpus.txt", corpus);
  atomic_write_file(dir / "channel.json", confusion_model_to_json(toy_channel(p_sub, 7)).dump());
  atomic_write_file(dir / "config.json",
                    R"({"backend":"simulated","seed":7,"simulated":{"confusion_file":"channel.json"}})");
}

// ---------------------------------------------------------------------------
// 7. Sweep.

std::vector<SweepPoint> parse_points(const std::string& csv) {
  return parse_grid_csv(csv, SweepAxis::kTranscripts).points;
}

void criterion_sweep(Check& c) {
  TempDir dir;
  write_toy_inputs(dir.path(), 0.9);
  const std::string args =
      "--config config.json sweep --axis transcripts --values 1,2,4 --fixed 1 --words words.txt --eval-set eval.jsonl";
  std::string first;
  std::string second;
  c.expect(run_cli(dir.path(), args, &first) == 0, "sweep exited non-zero");
  c.expect(run_cli(dir.path(), "--run-dir other " + args, &second) == 0, "second sweep exited non-zero");
  c.expect(!first.empty() && first == second, "sweeps in separate run directories differ");
  std::vector<SweepPoint> pts;
  try {
    pts = parse_points(first);
  } catch (const Error& e) {
    c.expect(false, std::string("unreadable grid: ") + e.what());
  }
  c.expect(pts.size() == 3, "grid has " + std::to_string(pts.size()) + " points");
  bool monotone = true;
  std::string shape;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && pts[i].f1 < pts[i - 1].f1) monotone = false;
    shape += (i ? ", " : "") + std::string("T=") + std::to_string(pts[i].value) + ": " + pct(pts[i].f1);
  }
  c.expect(monotone, "F1 decreases (" + shape + ")");
  c.note("F1 " + shape);
}

// ---------------------------------------------------------------------------
// 8. Warm-cache reruns.

void criterion_idempotence(Check& c) {
  TempDir dir;
  write_toy_inputs(dir.path(), 0.6);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"extract-words", "--config config.json extract-words --corpus corpus.txt --target 50"},
      {"build", "--config config.json build --words words.txt -T 2 -S 2 --scheme lsp"},
      {"transcribe", "--config config.json transcribe --eval-set eval.jsonl"},
      {"correct", "--config config.json correct --eval-set eval.jsonl --hypotheses run/hypotheses.jsonl "
                  "--mode nbest-phonetic --scheme lsp --corrector run/dataset/corrector.json"},
      {"score", "--config config.json score --eval-set eval.jsonl --outputs run/outputs.jsonl --words words.txt"},
      {"sweep", "--config config.json sweep --axis speakers --values 1,2 --fixed 1 --words words.txt "
                "--eval-set eval.jsonl"},
  };
  std::map<std::string, json> first_outputs;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& [name, args] : commands) {
      if (run_cli(dir.path(), args) != 0) {
        c.expect(false, name + " exited non-zero on pass " + std::to_string(pass + 1));
        continue;
      }
      const json m = json::parse(read_file(dir / "run" / "manifest.json"));
      const json entry = m["commands"][name];
      if (pass == 0) {
        first_outputs[name] = entry["outputs"];
        c.expect(!entry["outputs"].empty(), name + " recorded no outputs");
        continue;
      }
      const json calls = entry["service_calls"];
      for (const char* svc : {"llm", "tts", "asr"}) {
        c.expect(calls.value(svc, 0) == 0, name + " made " + calls[svc].dump() + " " + svc + " calls when warm");
      }
      c.expect(entry["outputs"] == first_outputs[name], name + " outputs changed on rerun");
    }
  }
  c.note("6 commands rerun with 0 service calls and identical output hashes");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"metric oracle equivalence", criterion_metrics},
      {"phonetic fixtures", criterion_table1},
      {"pipeline arithmetic and filtering", criterion_pipeline},
      {"split correctness", criterion_split},
      {"rare-word scoring and recall lift", criterion_scoring},
      {"end-to-end wiring", criterion_wiring},
      {"sweep determinism and shape", criterion_sweep},
      {"warm-cache idempotence", criterion_idempotence},
  };
  set_warning_sink([](const std::string&) {});
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += c.ok() ? 0 : 1;
    std::cout << (c.ok() ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << c.summary()
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
