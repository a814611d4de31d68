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

#include "gerkit/ger.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "gerkit/error.h"
#include "gerkit/metrics.h"
#include "gerkit/parallel.h"
#include "gerkit/store.h"

namespace gerkit {

using nlohmann::json;

std::string_view to_string(GerMode mode) {
  switch (mode) {
    case GerMode::kPromptOnly:
      return "prompt-only";
    case GerMode::kNbest:
      return "nbest";
    case GerMode::kNbestPhonetic:
      return "nbest-phonetic";
  }
  return "nbest";
}

GerMode parse_mode(std::string_view s) {
  std::string k(s);
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  if (k == "prompt-only") return GerMode::kPromptOnly;
  if (k == "nbest") return GerMode::kNbest;
  if (k == "nbest-phonetic") return GerMode::kNbestPhonetic;
  throw PreconditionError("unknown GER mode: " + std::string(s));
}

void GerCondition::validate() const {
  if (mode == GerMode::kNbestPhonetic && !scheme) {
    throw PreconditionError("mode nbest-phonetic needs a phonetic scheme");
  }
  if (mode != GerMode::kNbestPhonetic && scheme) {
    throw PreconditionError("a phonetic scheme is only valid with mode nbest-phonetic");
  }
}

std::string GerCondition::label() const {
  std::string out(to_string(mode));
  if (scheme) {
    std::string s(to_string(*scheme));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
      return c == '_' ? '-' : static_cast<char>(std::tolower(c));
    });
    out += "+" + s;
  }
  return out;
}

void to_json(json& j, const GerCondition& c) {
  j = {{"mode", to_string(c.mode)}, {"model_id", c.model_id}};
  j["scheme"] = c.scheme ? json(to_string(*c.scheme)) : json(nullptr);
}

void from_json(const json& j, GerCondition& c) {
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.model_id = j.value("model_id", "");
  c.scheme.reset();
  if (j.contains("scheme") && !j.at("scheme").is_null()) c.scheme = parse_scheme(j.at("scheme").get<std::string>());
}

void to_json(json& j, const GerOutput& o) {
  j = {{"utterance_id", o.utterance_id}, {"corrected", o.corrected},   {"condition", o.condition},
       {"raw_response", o.raw_response}, {"latency_ms", o.latency_ms}, {"fallback", o.fallback}};
}

void from_json(const json& j, GerOutput& o) {
  o.utterance_id = j.at("utterance_id").get<std::string>();
  o.corrected = j.at("corrected").get<std::string>();
  o.condition = j.at("condition").get<GerCondition>();
  o.raw_response = j.value("raw_response", "");
  o.latency_ms = j.value("latency_ms", 0.0);
  o.fallback = j.value("fallback", false);
}

std::string format_outputs(const std::vector<GerOutput>& outputs) {
  std::string out;
  for (const auto& o : outputs) out += json(o).dump() + "\n";
  return out;
}

std::vector<GerOutput> parse_outputs(std::string_view jsonl) {
  std::vector<GerOutput> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<GerOutput>());
    } catch (const json::exception& e) {
      throw DecodeError("outputs line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

GerRequest make_request(const HypothesisSet& nbest, const GerCondition& condition, Language language,
                        PhoneticConverter* phonetics) {
  GerRequest req;
  req.language = language;
  req.nbest = nbest.texts();
  if (condition.mode == GerMode::kPromptOnly) req.nbest.resize(1);
  if (condition.mode == GerMode::kNbestPhonetic) {
    if (!phonetics) throw PreconditionError("nbest-phonetic needs a phonetic converter");
    if (!trim(nbest.best().text).empty()) {
      req.phonetic = phonetics->convert(*condition.scheme, language, nbest.best().text);
    }
  }
  return req;
}

GerOutput correct_one(const HypothesisSet& nbest, const GerCondition& condition, GerClients& clients,
                      Language language) {
  condition.validate();
  nbest.validate();
  if (!clients.llm) throw PreconditionError("correct_one needs an LLM client");
  const PromptCatalog fallback_catalog = clients.catalog ? PromptCatalog() : PromptCatalog::builtin();
  const PromptCatalog& catalog = clients.catalog ? *clients.catalog : fallback_catalog;

  GerOutput out;
  out.utterance_id = nbest.utterance_id;
  out.condition = condition;
  const auto start = std::chrono::steady_clock::now();
  try {
    const GerRequest req = make_request(nbest, condition, language, clients.phonetics);
    ChatExchange ex;
    ex.messages = build_ger_messages(req, catalog);
    ex.temperature = 0.0;
    ex.model_id = condition.model_id;
    ex.task = "ger";
    ex.vars = {{"nbest", json(req.nbest).dump()}, {"language", std::string(to_string(language))}};
    out.raw_response = clients.llm->chat(ex);
  } catch (const UtteranceFailure&) {
    throw;
  } catch (const ServiceError& e) {
    throw UtteranceFailure(nbest.utterance_id, e.what());
  }
  out.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  try {
    out.corrected = parse_ger_response(out.raw_response);
  } catch (const EmptyCorrection&) {
    out.corrected = nbest.best().text;
    out.fallback = true;
  }
  return out;
}

namespace {

// Completed outputs from an earlier run. A truncated final line (an
// interrupted append) is ignored.
std::map<std::string, GerOutput> read_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, GerOutput> done;
  if (!std::filesystem::exists(path)) return done;
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      auto o = json::parse(lines[i]).get<GerOutput>();
      done[o.utterance_id] = std::move(o);
    } catch (const json::exception& e) {
      if (i + 1 == lines.size()) {
        warn("ignoring truncated last line of checkpoint " + path.string());
        break;
      }
      throw CacheCorruption("checkpoint " + path.string() + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return done;
}

}  // namespace

std::vector<GerOutput> run_eval(const EvalSet& eval_set, const HypothesisMap& hypotheses,
                                const GerCondition& condition, GerClients& clients,
                                const EvalRunOptions& options) {
  condition.validate();
  for (const auto& u : eval_set.utterances()) {
    if (!hypotheses.contains(u.id)) throw MissingHypotheses(u.id);
  }
  const auto& utts = eval_set.utterances();
  std::vector<std::optional<GerOutput>> results(utts.size());

  std::map<std::string, GerOutput> done;
  if (options.checkpoint) done = read_checkpoint(*options.checkpoint);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    auto it = done.find(utts[i].id);
    if (it != done.end() && it->second.condition == condition) {
      results[i] = it->second;
    } else {
      pending.push_back(i);
    }
  }

  std::mutex mu;
  std::ofstream checkpoint;
  if (options.checkpoint && !pending.empty()) {
    if (options.checkpoint->has_parent_path()) std::filesystem::create_directories(options.checkpoint->parent_path());
    checkpoint.open(*options.checkpoint, std::ios::binary | std::ios::app);
    if (!checkpoint) throw ExportError("cannot open checkpoint " + options.checkpoint->string());
  }
  parallel_for(pending.size(), options.workers, [&](std::size_t k) {
    const std::size_t i = pending[k];
    const auto& u = utts[i];
    HypothesisSet nbest = hypotheses.at(u.id);
    nbest.utterance_id = u.id;
    GerOutput out = correct_one(nbest, condition, clients, u.language);
    std::lock_guard<std::mutex> lock(mu);
    if (checkpoint.is_open()) {
      checkpoint << json(out).dump() << '\n';
      checkpoint.flush();
    }
    results[i] = std::move(out);
  });

  std::vector<GerOutput> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// LookupCorrector

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, Language language) {
  return join(tokens, language == Language::kJa ? "" : " ");
}

struct Region {
  std::vector<std::string> from;
  std::vector<std::string> to;
};

// Maximal runs of non-matching ops. Runs with nothing on the hypothesis side
// are anchored to the preceding matched token (or the following one at the
// start) so they can still be recognized in new input.
std::vector<Region> error_regions(const Alignment& a) {
  std::vector<Region> out;
  const auto& ops = a.ops;
  std::size_t i = 0;
  while (i < ops.size()) {
    if (ops[i].kind == EditKind::kMatch) {
      ++i;
      continue;
    }
    std::size_t j = i;
    Region r;
    while (j < ops.size() && ops[j].kind != EditKind::kMatch) {
      if (ops[j].hyp_token) r.from.push_back(*ops[j].hyp_token);
      if (ops[j].ref_token) r.to.push_back(*ops[j].ref_token);
      ++j;
    }
    if (r.from.empty()) {
      if (i > 0) {
        r.from.insert(r.from.begin(), *ops[i - 1].hyp_token);
        r.to.insert(r.to.begin(), *ops[i - 1].ref_token);
      } else if (j < ops.size()) {
        r.from.push_back(*ops[j].hyp_token);
        r.to.push_back(*ops[j].ref_token);
      } else {
        i = j;
        continue;
      }
    }
    out.push_back(std::move(r));
    i = j;
  }
  return out;
}

}  // namespace

LookupCorrector LookupCorrector::train(const std::vector<ErrorPairExample>& examples, Language language) {
  const NormPolicy policy = NormPolicy::for_language(language);
  // from -> (to -> count)
  std::map<std::vector<std::string>, std::map<std::vector<std::string>, std::size_t>> seen;
  std::vector<std::vector<std::string>> hyp_tokens;
  hyp_tokens.reserve(examples.size());
  for (const auto& ex : examples) {
    auto ref = tokenize(ex.reference, policy);
    auto hyp = tokenize(ex.nbest.best().text, policy);
    for (auto& r : error_regions(align(ref, hyp))) ++seen[r.from][r.to];
    hyp_tokens.push_back(std::move(hyp));
  }
  LookupCorrector c(language);
  for (const auto& [from, targets] : seen) {
    std::size_t errors = 0;
    const std::vector<std::string>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [to, count] : targets) {
      errors += count;
      if (count > best_count) {
        best = &to;
        best_count = count;
      }
    }
    std::size_t occurrences = 0;
    for (const auto& h : hyp_tokens) occurrences += find_occurrences(h, {from}).size();
    occurrences = std::max(occurrences, errors);
    if (errors > occurrences - errors) c.rules_.push_back({from, *best, best_count, occurrences});
  }
  std::stable_sort(c.rules_.begin(), c.rules_.end(),
                   [](const Rule& a, const Rule& b) { return a.from.size() > b.from.size(); });
  return c;
}

std::string LookupCorrector::correct(const std::vector<std::string>& nbest) const {
  if (nbest.empty()) throw PreconditionError("empty n-best list");
  const auto tokens = tokenize(nbest.front(), NormPolicy::for_language(language_));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Rule* hit = nullptr;
    for (const auto& r : rules_) {
      if (i + r.from.size() <= tokens.size() && std::equal(r.from.begin(), r.from.end(), tokens.begin() + i)) {
        hit = &r;
        break;
      }
    }
    if (hit) {
      out.insert(out.end(), hit->to.begin(), hit->to.end());
      i += hit->from.size();
    } else {
      out.push_back(tokens[i++]);
    }
  }
  return join_tokens(out, language_);
}

json LookupCorrector::to_json() const {
  json rules = json::array();
  for (const auto& r : rules_) {
    rules.push_back({{"from", r.from}, {"to", r.to}, {"errors", r.errors}, {"occurrences", r.occurrences}});
  }
  return {{"language", to_string(language_)}, {"rules", rules}};
}

LookupCorrector LookupCorrector::from_json(const json& j) {
  try {
    LookupCorrector c(parse_language(j.at("language").get<std::string>()));
    for (const auto& r : j.at("rules")) {
      c.rules_.push_back({r.at("from").get<std::vector<std::string>>(), r.at("to").get<std::vector<std::string>>(),
                          r.value("errors", std::size_t{0}), r.value("occurrences", std::size_t{0})});
    }
    std::stable_sort(c.rules_.begin(), c.rules_.end(),
                     [](const Rule& a, const Rule& b) { return a.from.size() > b.from.size(); });
    return c;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("corrector: ") + e.what());
  }
}

void LookupCorrector::save(const std::filesystem::path& path) const {
  atomic_write_file(path, to_json().dump(2) + "\n");
}

LookupCorrector LookupCorrector::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

}  // namespace gerkit
