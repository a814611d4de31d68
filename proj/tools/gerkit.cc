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

// gerkit command-line tool.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gerkit/corpus.h"
#include "gerkit/databuild.h"
#include "gerkit/error.h"
#include "gerkit/ger.h"
#include "gerkit/hash.h"
#include "gerkit/metrics.h"
#include "gerkit/parallel.h"
#include "gerkit/phonetics.h"
#include "gerkit/prompts.h"
#include "gerkit/report.h"
#include "gerkit/services.h"
#include "gerkit/store.h"
#include "json.hpp"

#ifndef GERKIT_DATA_DIR
#define GERKIT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gerkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitService = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Global settings: config file first, then flags.
struct Settings {
  std::optional<std::string> config_path;
  std::optional<std::string> backend;
  std::optional<std::string> language;
  std::optional<uint64_t> seed;
  std::optional<std::string> run_dir;
  std::optional<std::string> data_dir;
  std::optional<int> workers;
  std::optional<std::string> model;

  json config = json::object();

  void resolve() {
    if (config_path) {
      try {
        config = json::parse(read_file(*config_path));
      } catch (const json::parse_error& e) {
        throw DecodeError("config " + *config_path + ": " + e.what());
      }
      if (!config.is_object()) throw DecodeError("config " + *config_path + " is not a JSON object");
    }
    if (backend) config["backend"] = *backend;
    if (language) config["language"] = *language;
    if (seed) config["seed"] = *seed;
    if (run_dir) config["run_dir"] = *run_dir;
    if (data_dir) config["data_dir"] = *data_dir;
    if (workers) config["workers"] = *workers;
    if (model) config["model"] = *model;
    const std::string b = backend_name();
    if (b != "simulated" && b != "real") throw UsageError("--backend must be simulated or real");
  }

  std::string backend_name() const { return config.value("backend", "simulated"); }
  bool simulated() const { return backend_name() == "simulated"; }
  Language lang() const { return parse_language(config.value("language", "EN")); }
  uint64_t rng_seed() const { return config.value("seed", uint64_t{0}); }
  fs::path run() const { return config.value("run_dir", "run"); }
  fs::path data() const { return config.value("data_dir", GERKIT_DATA_DIR); }
  int n_workers() const { return config.value("workers", 4); }
  std::string model_id() const { return config.value("model", simulated() ? "simulated" : "gpt-4o-mini"); }
  json section(const char* name) const {
    return config.contains(name) && config.at(name).is_object() ? config.at(name) : json::object();
  }
  std::string config_hash() const { return sha256_hex(config.dump()); }
};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

// Service clients plus the instruments the manifest reports.
class Services {
 public:
  Services(const Settings& s, int max_speakers, const std::optional<fs::path>& corrector_path) {
    const fs::path cache = s.run() / "cache";
    const fs::path audit = s.run() / "audit";
    fs::create_directories(cache);
    fs::create_directories(audit);

    catalog_ = s.config.contains("prompts_file") ? PromptCatalog::load(s.config.at("prompts_file").get<std::string>())
                                                 : PromptCatalog::builtin();

    std::shared_ptr<ChatBackend> chat;
    if (s.simulated()) {
      if (corrector_path) {
        auto corrector = std::make_shared<LookupCorrector>(LookupCorrector::load(*corrector_path));
        chat = std::make_shared<SimulatedChatBackend>(
            [corrector](const std::vector<std::string>& nbest) { return corrector->correct(nbest); });
      } else {
        chat = std::make_shared<SimulatedChatBackend>();
      }
    } else {
      const json llm = s.section("llm");
      OpenAiConfig oc;
      oc.base_url = llm.value("base_url", oc.base_url);
      oc.api_key = env_or_empty("OPENAI_API_KEY");
      chat = std::make_shared<OpenAiChatBackend>(oc);
    }
    ClientOptions co;
    co.max_concurrency = s.n_workers();
    co.cache_file = cache / "llm.jsonl";
    co.audit_file = audit / "llm.jsonl";
    llm_ = std::make_unique<ChatClient>(chat, co);

    blobs_ = std::make_shared<BlobStore>(cache / "blobs");
    std::shared_ptr<TtsBackend> tts;
    std::shared_ptr<AsrBackend> asr;
    lexicon_en_arpabet_ = std::make_shared<G2pLexicon>(G2pLexicon::load(s.data() / "en_arpabet.tsv"));
    lexicon_en_ipa_ = std::make_shared<G2pLexicon>(G2pLexicon::load(s.data() / "en_ipa.tsv"));
    lexicon_ja_ = std::make_shared<G2pLexicon>(G2pLexicon::load(s.data() / "ja_reading.tsv"));
    if (s.simulated()) {
      tts = std::make_shared<SimulatedTtsBackend>();
      sim_asr_ = std::make_shared<SimulatedAsrBackend>(confusion_model(s));
      asr = sim_asr_;
    } else {
      const json t = s.section("tts");
      const json a = s.section("asr");
      tts = std::make_shared<RestTtsBackend>(RestConfig{t.value("url", ""), env_or_empty("GERKIT_TTS_API_KEY")});
      asr = std::make_shared<RestAsrBackend>(RestConfig{a.value("url", ""), env_or_empty("GERKIT_ASR_API_KEY")});
    }
    TtsOptions to;
    to.max_speakers = std::max(7, max_speakers);
    to.max_concurrency = s.n_workers();
    to.index_file = cache / "tts_index.jsonl";
    to.audit_file = audit / "tts.jsonl";
    tts_ = std::make_unique<TtsClient>(tts, blobs_, to);
    AsrOptions ao;
    ao.max_concurrency = s.n_workers();
    ao.cache_file = cache / "asr.jsonl";
    ao.audit_file = audit / "asr.jsonl";
    asr_ = std::make_unique<AsrClient>(asr, blobs_, ao);

    // The bundled golden conversions seed a fresh phonetic cache.
    const fs::path phon = cache / "phonetic.jsonl";
    const fs::path golden = s.data() / "lsp_golden.jsonl";
    if (!fs::exists(phon) && fs::exists(golden)) fs::copy_file(golden, phon);
    PhoneticResources res;
    res.en_ipa = lexicon_en_ipa_;
    res.en_arpabet = lexicon_en_arpabet_;
    res.ja_reading = lexicon_ja_;
    res.llm = llm_.get();
    res.cache = std::make_shared<PhoneticCache>(phon);
    res.catalog = &catalog_;
    res.model_id = s.model_id();
    phonetics_ = std::make_unique<PhoneticConverter>(res);
  }

  Services(const Services&) = delete;
  Services& operator=(const Services&) = delete;

  ChatClient& llm() { return *llm_; }
  TtsClient& tts() { return *tts_; }
  AsrClient& asr() { return *asr_; }
  PhoneticConverter& phonetics() { return *phonetics_; }
  const PromptCatalog& catalog() const { return catalog_; }
  SimulatedAsrBackend* simulated_asr() { return sim_asr_.get(); }

  BuildClients build_clients() { return {llm_.get(), tts_.get(), asr_.get(), phonetics_.get(), &catalog_}; }
  GerClients ger_clients() { return {llm_.get(), phonetics_.get(), &catalog_}; }

  json counts() const {
    return {{"llm", llm_->backend_calls()},
            {"llm_cache_hits", llm_->cache_hits()},
            {"tts", tts_->backend_calls()},
            {"asr", asr_->backend_calls()}};
  }

 private:
  ConfusionModel confusion_model(const Settings& s) const {
    const json sim = s.section("simulated");
    ConfusionModel m;
    if (sim.contains("confusion_file")) {
      const auto path = sim.at("confusion_file").get<std::string>();
      try {
        m = confusion_model_from_json(json::parse(read_file(path)));
      } catch (const json::parse_error& e) {
        throw DecodeError("confusion model " + path + ": " + e.what());
      }
    } else {
      const G2pLexicon& lex = s.lang() == Language::kJa ? *lexicon_ja_ : *lexicon_en_arpabet_;
      m = build_confusion_model(lex, sim.value("threshold", 1));
      m.p_sub = 0.3;
    }
    m.p_sub = sim.value("p_sub", m.p_sub);
    m.p_del = sim.value("p_del", m.p_del);
    m.p_ins = sim.value("p_ins", m.p_ins);
    m.seed = sim.value("seed", s.rng_seed());
    m.validate();
    return m;
  }

  PromptCatalog catalog_;
  std::unique_ptr<ChatClient> llm_;
  std::shared_ptr<BlobStore> blobs_;
  std::unique_ptr<TtsClient> tts_;
  std::unique_ptr<AsrClient> asr_;
  std::shared_ptr<SimulatedAsrBackend> sim_asr_;
  std::shared_ptr<G2pLexicon> lexicon_en_arpabet_;
  std::shared_ptr<G2pLexicon> lexicon_en_ipa_;
  std::shared_ptr<G2pLexicon> lexicon_ja_;
  std::unique_ptr<PhoneticConverter> phonetics_;
};

// Records the command in <run>/manifest.json together with the config hash,
// service-call counts, and output hashes.
void record(const Settings& s, const std::string& command, const std::vector<std::string>& argv,
            const json& calls, const std::vector<fs::path>& outputs, json extra = json::object()) {
  const fs::path path = s.run() / "manifest.json";
  json m = json::object();
  if (fs::exists(path)) {
    try {
      m = json::parse(read_file(path));
    } catch (const json::parse_error&) {
      warn("rewriting unreadable manifest " + path.string());
      m = json::object();
    }
  }
  m["config_sha256"] = s.config_hash();
  m["config"] = s.config;
  m["backend"] = s.backend_name();
  json out = json::object();
  for (const auto& p : outputs) {
    if (fs::exists(p)) out[p.lexically_relative(s.run()).generic_string()] = sha256_hex(read_file(p));
  }
  json entry = {{"argv", argv}, {"service_calls", calls}, {"outputs", out}};
  entry.update(extra);
  m["commands"][command] = entry;
  atomic_write_file(path, m.dump(2) + "\n");
}

SplitRatio parse_ratio(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    SplitRatio r{std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
    if (r.train < 1 || r.val < 1) throw std::invalid_argument(s);
    return r;
  } catch (const std::logic_error&) {
    throw UsageError("--ratio must look like 4:1, got '" + s + "'");
  }
}

std::vector<int> parse_values(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("--values must be comma-separated integers, got '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("--values is empty");
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw UsageError("--values must be strictly increasing");
  }
  return out;
}

fs::path or_default(const std::string& flag, const fs::path& fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Simulated recognition of an evaluation set, for sweeps without a
// hypotheses file.
HypothesisMap simulate_hypotheses(const EvalSet& eval, SimulatedAsrBackend& asr, std::size_t n) {
  HypothesisMap out;
  for (const auto& u : eval.utterances()) {
    out[u.id] = {u.id, asr.transcribe_text(u.reference, n, "eval:" + u.id, u.language)};
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"gerkit: rare-word generative error correction toolkit"};
  app.require_subcommand(1);
  Settings s;
  std::string config_path, backend, language, run_dir, data_dir, model;
  uint64_t seed = 0;
  int workers = 0;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--backend", backend, "simulated or real");
  app.add_option("--lang", language, "EN or JA");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--run-dir", run_dir, "Directory for caches, checkpoints, and the manifest");
  app.add_option("--data-dir", data_dir, "Directory with lexicons");
  app.add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--model", model, "LLM model id");

  // extract-words
  auto* ex = app.add_subcommand("extract-words", "Build a rare-word list from a corpus");
  std::string ex_corpus, ex_out;
  double ex_target = 10.0;
  ex->add_option("--corpus", ex_corpus, "Corpus text file")->required()->check(CLI::ExistingFile);
  ex->add_option("--target", ex_target, "Coverage bound in percent")->check(CLI::Range(0.0, 100.0));
  ex->add_option("--out", ex_out, "Word list to write");

  // build
  auto* bd = app.add_subcommand("build", "Generate error pairs and export fine-tuning data");
  std::string bd_words, bd_out, bd_ratio = "4:1", bd_scheme;
  int bd_t = 4, bd_s = 7, bd_n = 5;
  bd->add_option("--words", bd_words, "Rare-word list")->required()->check(CLI::ExistingFile);
  bd->add_option("-T,--transcripts", bd_t, "Transcripts per word")->check(CLI::PositiveNumber);
  bd->add_option("-S,--speakers", bd_s, "Speakers per transcript")->check(CLI::PositiveNumber);
  bd->add_option("-N,--nbest", bd_n, "N-best size")->check(CLI::PositiveNumber);
  bd->add_option("--ratio", bd_ratio, "Train:validation ratio");
  bd->add_option("--scheme", bd_scheme, "Phonetic context: ipa, tts-phoneme, or lsp");
  bd->add_option("--out-dir", bd_out, "Dataset directory");

  // transcribe
  auto* tr = app.add_subcommand("transcribe", "Produce N-best hypotheses for an evaluation set");
  std::string tr_eval, tr_out;
  int tr_n = 5, tr_speaker = 1;
  tr->add_option("--eval-set", tr_eval, "Evaluation set JSONL")->required()->check(CLI::ExistingFile);
  tr->add_option("-N,--nbest", tr_n, "N-best size")->check(CLI::PositiveNumber);
  tr->add_option("--speaker", tr_speaker, "Speaker for synthesized audio")->check(CLI::PositiveNumber);
  tr->add_option("--out", tr_out, "Hypotheses JSONL to write");

  // correct
  auto* co = app.add_subcommand("correct", "Run GER over an evaluation set");
  std::string co_eval, co_hyps, co_mode = "nbest", co_scheme, co_corrector, co_out, co_checkpoint;
  co->add_option("--eval-set", co_eval, "Evaluation set JSONL")->required()->check(CLI::ExistingFile);
  co->add_option("--hypotheses", co_hyps, "Hypotheses JSONL")->required()->check(CLI::ExistingFile);
  co->add_option("--mode", co_mode, "prompt-only, nbest, or nbest-phonetic");
  co->add_option("--scheme", co_scheme, "ipa, tts-phoneme, or lsp (nbest-phonetic only)");
  co->add_option("--corrector", co_corrector, "Lookup corrector for the simulated LLM")->check(CLI::ExistingFile);
  co->add_option("--out", co_out, "Outputs JSONL to write");
  co->add_option("--checkpoint", co_checkpoint, "Checkpoint JSONL");

  // score
  auto* sc = app.add_subcommand("score", "Score outputs or raw hypotheses");
  std::string sc_eval, sc_outputs, sc_hyps, sc_words, sc_name, sc_out;
  std::vector<std::string> sc_formats{"markdown", "csv", "json"};
  sc->add_option("--eval-set", sc_eval, "Evaluation set JSONL")->required()->check(CLI::ExistingFile);
  auto* sc_o = sc->add_option("--outputs", sc_outputs, "GER outputs JSONL")->check(CLI::ExistingFile);
  auto* sc_h = sc->add_option("--hypotheses", sc_hyps, "Score the raw 1-best instead")->check(CLI::ExistingFile);
  sc_o->excludes(sc_h);
  sc->add_option("--words", sc_words, "Rare-word list")->required()->check(CLI::ExistingFile);
  sc->add_option("--name", sc_name, "Dataset name");
  sc->add_option("--out-dir", sc_out, "Report directory");
  sc->add_option("--format", sc_formats, "markdown, csv, json");

  // sweep
  auto* sw = app.add_subcommand("sweep", "F1 over numbers of transcripts or speakers");
  std::string sw_axis = "transcripts", sw_values, sw_words, sw_eval, sw_eval_words, sw_hyps, sw_out,
              sw_ratio = "4:1";
  int sw_fixed = 0, sw_n = 5;
  sw->add_option("--axis", sw_axis, "transcripts or speakers");
  sw->add_option("--values", sw_values, "Comma-separated increasing values")->required();
  sw->add_option("--fixed", sw_fixed, "Value of the other axis (7 speakers or 4 transcripts)");
  sw->add_option("--words", sw_words, "Rare-word list for data generation")->required()->check(CLI::ExistingFile);
  sw->add_option("--eval-set", sw_eval, "Evaluation set JSONL")->required()->check(CLI::ExistingFile);
  sw->add_option("--eval-words", sw_eval_words, "Rare words scored on the evaluation set")
      ->check(CLI::ExistingFile);
  sw->add_option("--hypotheses", sw_hyps, "Evaluation hypotheses (simulated when omitted)")
      ->check(CLI::ExistingFile);
  sw->add_option("-N,--nbest", sw_n, "N-best size")->check(CLI::PositiveNumber);
  sw->add_option("--ratio", sw_ratio, "Train:validation ratio");
  sw->add_option("--out", sw_out, "Grid CSV to write");

  // prompts
  auto* pr = app.add_subcommand("prompts", "Print the built-in prompt catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!config_path.empty()) s.config_path = config_path;
    if (!backend.empty()) s.backend = backend;
    if (!language.empty()) s.language = language;
    if (app.count("--seed")) s.seed = seed;
    if (!run_dir.empty()) s.run_dir = run_dir;
    if (!data_dir.empty()) s.data_dir = data_dir;
    if (workers > 0) s.workers = workers;
    if (!model.empty()) s.model = model;
    s.resolve();
    const Language lang = s.lang();
    fs::create_directories(s.run());

    if (*pr) {
      std::cout << PromptCatalog::builtin().to_json().dump(2) << "\n";
      return kExitOk;
    }

    if (*ex) {
      Services svc(s, 7, std::nullopt);
      const fs::path out = or_default(ex_out, s.run() / "words.txt");
      const std::string corpus = read_file(ex_corpus);
      RareWordList list = extract_rare_words(corpus, lang, svc.llm(), ex_target, svc.catalog());
      ensure_parent(out);
      save_rare_words(list, out);
      record(s, "extract-words", args, svc.counts(), {out}, {{"n_words", list.size()}});
      std::cout << "wrote " << list.size() << " words to " << out.string() << "\n";
      return kExitOk;
    }

    if (*bd) {
      BuildConfig cfg = BuildConfig{};
      const json b = s.section("build");
      cfg.transcripts_per_word = bd->count("-T") ? bd_t : b.value("transcripts_per_word", bd_t);
      cfg.speakers = bd->count("-S") ? bd_s : b.value("speakers", bd_s);
      cfg.nbest = bd->count("-N") ? bd_n : b.value("nbest", bd_n);
      cfg.split = parse_ratio(bd->count("--ratio") ? bd_ratio : b.value("ratio", bd_ratio));
      cfg.seed = s.rng_seed();
      cfg.model_id = s.model_id();
      cfg.workers = s.n_workers();
      cfg.voices = b.value("voices", std::vector<std::string>{});
      const std::string scheme = bd_scheme.empty() ? b.value("scheme", "") : bd_scheme;
      if (!scheme.empty()) cfg.phonetic_scheme = parse_scheme(scheme);
      cfg.validate();

      Services svc(s, cfg.speakers, std::nullopt);
      const RareWordList words = load_rare_words(bd_words, lang);
      const fs::path out = or_default(bd_out, s.run() / "dataset");
      fs::create_directories(out);
      BuildClients clients = svc.build_clients();
      BuildResult built = generate_pairs(words, cfg, clients, s.run() / "state");
      if (built.examples.empty()) warn("no error pairs were kept; the dataset is empty");
      auto [train, val] = split(built.examples, cfg.split, cfg.seed);
      // An empty part still gets (empty) files so later stages find them.
      auto export_part = [&](const std::vector<ErrorPairExample>& part, const fs::path& path) {
        if (!part.empty()) return export_finetune(part, svc.catalog(), path, lang);
        ExportManifest m{path, path.string() + ".meta.jsonl", 0, sha256_hex(""), sha256_hex("")};
        atomic_write_file(m.path, "");
        atomic_write_file(m.metadata_path, "");
        return m;
      };
      const auto train_m = export_part(train, out / "train.jsonl");
      const auto val_m = export_part(val, out / "val.jsonl");
      LookupCorrector::train(train, lang).save(out / "corrector.json");
      const json manifest = {{"config", to_json(cfg)},
                             {"words", words.size()},
                             {"report", to_json(built.report)},
                             {"train", to_json(train_m)},
                             {"val", to_json(val_m)}};
      atomic_write_file(out / "manifest.json", manifest.dump(2) + "\n");
      record(s, "build", args, svc.counts(),
             {out / "train.jsonl", out / "val.jsonl", out / "corrector.json", out / "manifest.json"});
      std::cout << "candidates " << built.report.n_candidates << ", kept " << built.report.n_kept << ", dropped "
                << built.report.n_dropped_no_error << ", train " << train.size() << ", val " << val.size()
                << "\n";
      return kExitOk;
    }

    if (*tr) {
      Services svc(s, tr_speaker, std::nullopt);
      const EvalSet eval = load_eval_set(tr_eval);
      const fs::path out = or_default(tr_out, s.run() / "hypotheses.jsonl");
      std::vector<HypothesisSet> sets(eval.size());
      parallel_for(eval.size(), s.n_workers(), [&](std::size_t i) {
        const auto& u = eval.utterances()[i];
        std::string locator;
        if (u.audio_ref && !s.simulated()) {
          locator = svc.tts().store().put(read_file(*u.audio_ref));
        } else {
          locator = svc.tts().synthesize({u.reference, tr_speaker, "speaker-" + std::to_string(tr_speaker), u.language});
        }
        sets[i] = svc.asr().transcribe(locator, static_cast<std::size_t>(tr_n), u.id).to_hypothesis_set();
      });
      HypothesisMap hyps;
      for (auto& h : sets) hyps[h.utterance_id] = std::move(h);
      ensure_parent(out);
      atomic_write_file(out, format_hypotheses(hyps));
      record(s, "transcribe", args, svc.counts(), {out});
      std::cout << "wrote " << hyps.size() << " hypothesis sets to " << out.string() << "\n";
      return kExitOk;
    }

    if (*co) {
      GerCondition cond;
      cond.mode = parse_mode(co_mode);
      if (!co_scheme.empty()) cond.scheme = parse_scheme(co_scheme);
      cond.model_id = s.model_id();
      cond.validate();
      std::optional<fs::path> corrector;
      if (!co_corrector.empty()) corrector = co_corrector;
      Services svc(s, 7, corrector);
      const EvalSet eval = load_eval_set(co_eval);
      const HypothesisMap hyps = load_hypotheses(co_hyps);
      const fs::path out = or_default(co_out, s.run() / "outputs.jsonl");
      EvalRunOptions opts;
      opts.checkpoint = or_default(co_checkpoint, s.run() / "checkpoints" / ("correct-" + cond.label() + ".jsonl"));
      opts.workers = s.n_workers();
      GerClients clients = svc.ger_clients();
      const auto outputs = run_eval(eval, hyps, cond, clients, opts);
      ensure_parent(out);
      atomic_write_file(out, format_outputs(outputs));
      std::size_t fallbacks = 0;
      for (const auto& o : outputs) fallbacks += o.fallback ? 1 : 0;
      record(s, "correct", args, svc.counts(), {out}, {{"condition", cond}, {"fallbacks", fallbacks}});
      std::cout << "wrote " << outputs.size() << " outputs to " << out.string() << "\n";
      return kExitOk;
    }

    if (*sc) {
      if (sc_outputs.empty() && sc_hyps.empty()) throw UsageError("score needs --outputs or --hypotheses");
      const EvalSet eval = load_eval_set(sc_eval);
      const RareWordList words = load_rare_words(sc_words, lang);
      const NormPolicy policy = NormPolicy::for_language(lang);
      EvalReport report;
      if (!sc_outputs.empty()) {
        report = summarize(parse_outputs(read_file(sc_outputs)), eval, words, policy);
      } else {
        std::map<std::string, std::string> texts;
        for (const auto& [id, h] : load_hypotheses(sc_hyps)) texts[id] = h.best().text;
        report = summarize(texts, eval, words, policy, "asr-1best");
      }
      report.dataset_name =
          !sc_name.empty() ? sc_name : fs::path(sc_eval).stem().string();
      const fs::path out = or_default(sc_out, s.run() / "report");
      fs::create_directories(out);
      std::vector<fs::path> written;
      for (const auto& f : sc_formats) {
        const ReportFormat fmt = parse_format(f);
        const char* ext = fmt == ReportFormat::kMarkdown ? "report.md" : fmt == ReportFormat::kCsv ? "report.csv" : "report.json";
        emit({report}, fmt, out / ext);
        written.push_back(out / ext);
      }
      record(s, "score", args, json{{"llm", 0}, {"tts", 0}, {"asr", 0}}, written);
      std::cout << report.metric << " / recall / precision: " << format_cell(report) << "\n";
      return kExitOk;
    }

    if (*sw) {
      const SweepAxis axis = parse_axis(sw_axis);
      const std::vector<int> values = parse_values(sw_values);
      const int fixed = sw_fixed > 0 ? sw_fixed : (axis == SweepAxis::kTranscripts ? 7 : 4);
      const int max_speakers = axis == SweepAxis::kSpeakers ? values.back() : fixed;
      Services svc(s, max_speakers, std::nullopt);
      const RareWordList words = load_rare_words(sw_words, lang);
      const EvalSet eval = load_eval_set(sw_eval);
      std::optional<RareWordList> eval_words;
      if (!sw_eval_words.empty()) eval_words = load_rare_words(sw_eval_words, lang);
      HypothesisMap hyps;
      if (!sw_hyps.empty()) {
        hyps = load_hypotheses(sw_hyps);
      } else if (svc.simulated_asr()) {
        hyps = simulate_hypotheses(eval, *svc.simulated_asr(), static_cast<std::size_t>(sw_n));
      } else {
        throw UsageError("sweep with the real backend needs --hypotheses");
      }
      SweepPipeline pipe;
      pipe.build.nbest = sw_n;
      pipe.build.split = parse_ratio(sw_ratio);
      pipe.build.seed = s.rng_seed();
      pipe.build.model_id = s.model_id();
      pipe.build.workers = s.n_workers();
      pipe.clients = svc.build_clients();
      pipe.make_corrector = [lang](const std::vector<ErrorPairExample>& train) -> Corrector {
        auto c = std::make_shared<LookupCorrector>(LookupCorrector::train(train, lang));
        return [c](const HypothesisSet& h) { return c->correct(h.texts()); };
      };
      pipe.eval_set = &eval;
      pipe.hypotheses = &hyps;
      pipe.eval_words = eval_words ? &*eval_words : nullptr;
      pipe.state_dir = s.run() / "state";
      const SweepGrid grid = run_sweep(words, axis, values, fixed, pipe);
      const fs::path out = or_default(sw_out, s.run() / ("sweep-" + std::string(to_string(axis)) + ".csv"));
      ensure_parent(out);
      emit(grid, ReportFormat::kCsv, out);
      record(s, "sweep", args, svc.counts(), {out});
      std::cout << to_csv(grid);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return kExitService;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DecodeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
