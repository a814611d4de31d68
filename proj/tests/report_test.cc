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
#include <cctype>
#include <sstream>

#include "doctest.h"
#include "gerkit/error.h"
#include "gerkit/report.h"
#include "support.h"
#include "toy_fixture.h"

using namespace gerkit;
using gerkit::testing::TempDir;
using gerkit::testing::toy_rows;
using nlohmann::json;

namespace {

const NormPolicy kEn = NormPolicy::for_language(Language::kEn);

// Lower-cased ASCII words with ',' and '.' removed.
std::vector<std::string> plain_words(const std::string& s) {
  std::string t;
  for (char c : s) {
    if (c == ',' || c == '.') continue;
    t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::vector<std::size_t> cur(b.size() + 1);
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    prev = std::move(cur);
  }
  return prev[b.size()];
}

struct Toy {
  EvalSet set{"toy-medical"};
  std::map<std::string, std::string> hyps;
  std::map<std::string, std::string> refs;
  RareWordList words = parse_rare_words(gerkit::testing::kToyWords, Language::kEn);
  Toy() {
    int i = 0;
    for (const auto& row : toy_rows()) {
      const std::string id = "t" + std::to_string(i++);
      set.add({id, row.reference, Language::kEn, std::nullopt});
      hyps[id] = row.hypothesis;
      refs[id] = row.reference;
    }
  }
};

EvalReport sample_report() {
  EvalReport r;
  r.dataset_name = "LibriSpeech";
  r.condition = "nbest-phonetic+lsp";
  r.error_rate = 0.025;
  r.recall = 0.942;
  r.precision = 0.964;
  r.f1 = 2 * 0.942 * 0.964 / (0.942 + 0.964);
  r.n_utts = 2620;
  r.n_ref_occurrences = 120;
  return r;
}

}  // namespace

TEST_CASE("pooled error rate, not the mean of per-utterance rates") {
  EvalSet set("two");
  set.add({"a", "one two", Language::kEn, std::nullopt});
  set.add({"b", "three four five six seven eight nine ten", Language::kEn, std::nullopt});
  const std::map<std::string, std::string> texts = {{"a", "one too"}, {"b", "three four five six seven eight nine ten"}};
  const auto r = summarize(texts, set, RareWordList(Language::kEn), kEn, "x");
  // Pooled: 1 error over 10 words. The per-utterance mean would be 0.25.
  CHECK(r.error_rate == doctest::Approx(0.1));
  CHECK(r.error_rate != doctest::Approx((0.5 + 0.0) / 2));
  CHECK(r.metric == "WER");
  CHECK(r.dataset_name == "two");
  CHECK(r.condition == "x");
  CHECK(r.n_utts == 2);
  CHECK_FALSE(r.recall);
  CHECK_FALSE(r.precision);
  CHECK_FALSE(r.f1);
}

TEST_CASE("toy set row matches the hand count") {
  Toy toy;
  std::size_t dist = 0;
  std::size_t len = 0;
  std::size_t ref_occ = 0;
  std::size_t hyp_occ = 0;
  std::size_t correct = 0;
  for (const auto& row : toy_rows()) {
    dist += levenshtein(plain_words(row.reference), plain_words(row.hypothesis));
    len += plain_words(row.reference).size();
    ref_occ += row.ref_occ;
    hyp_occ += row.hyp_occ;
    correct += row.correct;
  }
  const auto r = summarize(toy.hyps, toy.set, toy.words, kEn, "asr");
  CHECK(r.error_rate == static_cast<double>(dist) / static_cast<double>(len));
  CHECK(*r.recall == static_cast<double>(correct) / static_cast<double>(ref_occ));
  CHECK(*r.precision == static_cast<double>(correct) / static_cast<double>(hyp_occ));
  CHECK(*r.f1 == doctest::Approx(2.0 * correct / static_cast<double>(ref_occ + hyp_occ)));
  CHECK(r.n_ref_occurrences == ref_occ);
  CHECK(r.n_utts == 20);
}

TEST_CASE("oracle outputs and raw 1-best outputs") {
  Toy toy;
  const auto oracle = summarize(toy.refs, toy.set, toy.words, kEn);
  CHECK(oracle.error_rate == 0.0);
  CHECK(*oracle.recall == 1.0);
  CHECK(*oracle.precision == 1.0);

  std::vector<GerOutput> outs;
  for (const auto& u : toy.set.utterances()) outs.push_back({u.id, toy.hyps.at(u.id), GerCondition{}, "", 0.0, false});
  std::reverse(outs.begin(), outs.end());
  auto from_outputs = summarize(outs, toy.set, toy.words, kEn);
  CHECK(from_outputs.condition == "nbest");
  from_outputs.condition = "asr";
  CHECK(from_outputs == summarize(toy.hyps, toy.set, toy.words, kEn, "asr"));
}

TEST_CASE("id mismatches are reported") {
  Toy toy;
  auto missing = toy.hyps;
  missing.erase("t3");
  missing["zz"] = "stray";
  try {
    summarize(missing, toy.set, toy.words, kEn);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(e.ids() == std::vector<std::string>{"t3", "zz"});
  }
  std::vector<GerOutput> outs;
  for (const auto& u : toy.set.utterances()) outs.push_back({u.id, "x", GerCondition{}, "", 0.0, false});
  outs.push_back(outs.front());
  CHECK_THROWS_AS(summarize(outs, toy.set, toy.words, kEn), AlignmentError);
}

TEST_CASE("Japanese scoring uses CER") {
  EvalSet set("ja");
  set.add({"a", "こんにちは", Language::kJa, std::nullopt});
  RareWordList words(Language::kJa);
  words.add("こんにちは");
  const auto r = summarize(std::map<std::string, std::string>{{"a", "こんにちわ"}}, set, words,
                           NormPolicy::for_language(Language::kJa));
  CHECK(r.metric == "CER");
  CHECK(r.error_rate == 0.2);
  CHECK(*r.recall == 0.0);
}

TEST_CASE("table cell formatting") {
  const auto r = sample_report();
  CHECK(format_cell(r) == "2.5 / 94.2 / 96.4");
  EvalReport absent;
  absent.error_rate = 0.0;
  CHECK(format_cell(absent) == "0.0 / - / -");
  const std::string md = to_markdown({r, absent});
  CHECK(md.find("| LibriSpeech | nbest-phonetic+lsp | WER | 2.5 / 94.2 / 96.4 |") != std::string::npos);
  CHECK(std::count(md.begin(), md.end(), '\n') == 4);
}

TEST_CASE("CSV and JSON round trips keep full precision") {
  auto a = sample_report();
  a.error_rate = 1.0 / 3.0;
  a.recall = 2.0 / 7.0;
  EvalReport b;
  b.dataset_name = "set, with \"quotes\"";
  b.condition = "prompt-only";
  b.metric = "CER";
  b.error_rate = 1.25;
  b.n_utts = 3;
  const std::vector<EvalReport> reports = {a, b};

  const std::string csv = to_csv(reports);
  CHECK(csv.rfind("dataset,condition,metric,error_rate,recall,precision,f1,n_utts,n_ref_occurrences\n", 0) == 0);
  CHECK(parse_reports_csv(csv) == reports);
  CHECK(parse_reports_json(to_json_text(reports)) == reports);
  CHECK(json::parse(to_json_text(reports))[0]["cell"] == format_cell(a));
  CHECK_THROWS_AS(parse_reports_csv("wrong,header\n"), DecodeError);
}

TEST_CASE("emit is byte-stable and atomic") {
  TempDir dir;
  const std::vector<EvalReport> reports = {sample_report()};
  for (const char* f : {"markdown", "csv", "json"}) {
    emit(reports, parse_format(f), dir / (std::string("a.") + f));
    emit(reports, parse_format(f), dir / (std::string("b.") + f));
    CHECK(read_file(dir / (std::string("a.") + f)) == read_file(dir / (std::string("b.") + f)));
  }
  CHECK(read_file(dir / "a.markdown") == to_markdown(reports));
  CHECK_THROWS_AS(parse_format("xlsx"), PreconditionError);
  atomic_write_file(dir / "file", "x");
  CHECK_THROWS_AS(emit(reports, ReportFormat::kCsv, dir / "file" / "r.csv"), ExportError);
}

TEST_CASE("sweep grids") {
  SweepGrid g{SweepAxis::kTranscripts, {{1, 0.5}, {2, 0.75}, {4, 1.0 / 3.0}}};
  const std::string csv = to_csv(g);
  CHECK(csv.rfind("value,f1\n1,0.5\n2,0.75\n", 0) == 0);
  CHECK(parse_grid_csv(csv, SweepAxis::kTranscripts) == g);
  CHECK(to_json(g)["axis"] == "transcripts");
  CHECK(to_json(g)["points"].size() == 3);
  CHECK(parse_axis("speakers") == SweepAxis::kSpeakers);
  CHECK_THROWS_AS(parse_axis("words"), PreconditionError);

  SweepGrid bad{SweepAxis::kSpeakers, {{2, 0.0}, {2, 0.0}}};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad.points = {{3, 0.0}, {1, 0.0}};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);

  TempDir dir;
  emit(g, ReportFormat::kCsv, dir / "g.csv");
  CHECK(read_file(dir / "g.csv") == csv);
  emit(g, ReportFormat::kMarkdown, dir / "g.md");
  CHECK(read_file(dir / "g.md").find("| 4 |") != std::string::npos);
}

TEST_CASE("simulated sweeps") {
  TempDir dir;
  ConfusionModel channel;
  channel.sub_table["anemia"] = {{"a nimia", 1.0}};
  channel.sub_table["insulin"] = {{"in solin", 1.0}};
  channel.p_sub = 0.8;
  channel.seed = 5;
  auto store = std::make_shared<BlobStore>(dir / "blobs");
  auto asr_backend = std::make_shared<SimulatedAsrBackend>(channel);
  ChatClient llm(std::make_shared<SimulatedChatBackend>());
  TtsClient tts(std::make_shared<SimulatedTtsBackend>(), store);
  AsrClient asr(asr_backend, store);

  RareWordList words(Language::kEn);
  words.add("anemia");
  words.add("insulin");
  EvalSet eval("eval");
  HypothesisMap hyps;
  const std::vector<std::string> refs = {"she has anemia", "insulin was given", "anemia and insulin", "no words"};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::string id = "e" + std::to_string(i);
    eval.add({id, refs[i], Language::kEn, std::nullopt});
    hyps[id] = {id, asr_backend->transcribe_text(refs[i], 5, "eval:" + id)};
  }

  SweepPipeline p;
  p.build.seed = 1;
  p.build.nbest = 5;
  p.clients = {&llm, &tts, &asr, nullptr, nullptr};
  p.make_corrector = [](const std::vector<ErrorPairExample>& train) -> Corrector {
    auto c = std::make_shared<LookupCorrector>(LookupCorrector::train(train, Language::kEn));
    return [c](const HypothesisSet& h) { return c->correct(h.texts()); };
  };
  p.eval_set = &eval;
  p.hypotheses = &hyps;

  const auto g = run_sweep(words, SweepAxis::kTranscripts, {1, 2, 4, 8}, 2, p);
  REQUIRE(g.points.size() == 4);
  CHECK(g.axis == SweepAxis::kTranscripts);
  for (const auto& pt : g.points) CHECK((pt.f1 >= 0.0 && pt.f1 <= 1.0));
  CHECK(run_sweep(words, SweepAxis::kTranscripts, {1, 2, 4, 8}, 2, p) == g);

  const auto one = run_sweep(words, SweepAxis::kSpeakers, {3}, 1, p);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].value == 3);

  CHECK_THROWS_AS(run_sweep(words, SweepAxis::kSpeakers, {}, 1, p), PreconditionError);
  CHECK_THROWS_AS(run_sweep(words, SweepAxis::kSpeakers, {2, 1}, 1, p), PreconditionError);
}
