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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "gerkit/services.h"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <numeric>
#include <set>
#include <sstream>

#include "gerkit/error.h"
#include "gerkit/hash.h"
#include "gerkit/metrics.h"
#include "gerkit/phonetics.h"

namespace gerkit {
namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::unique_ptr<AuditLog> make_audit(const std::optional<std::filesystem::path>& file) {
  if (!file) return nullptr;
  return std::make_unique<AuditLog>(*file);
}

JsonlCache make_cache(const std::optional<std::filesystem::path>& file) {
  return file ? JsonlCache(*file) : JsonlCache();
}

// Maps an HTTP outcome onto the service error contract.
void check_http(const httplib::Result& res, std::string_view what) {
  if (!res) {
    throw TransientError(std::string(what) + ": " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status >= 500 || status == 429 || status == 408) {
    throw TransientError(std::string(what) + ": HTTP " + std::to_string(status));
  }
  if (status >= 400) {
    throw ClientError(std::string(what) + ": HTTP " + std::to_string(status) + ": " + res->body, status);
  }
}

std::unique_ptr<httplib::Client> make_http_client(const std::string& origin, std::chrono::seconds timeout) {
  auto cli = std::make_unique<httplib::Client>(origin);
  cli->set_connection_timeout(timeout);
  cli->set_read_timeout(timeout);
  cli->set_write_timeout(timeout);
  return cli;
}

}  // namespace

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry_index) {
  const double ms = static_cast<double>(policy.initial_delay.count()) *
                    std::pow(policy.backoff_factor, retry_index);
  return std::min(policy.max_delay, std::chrono::milliseconds(static_cast<int64_t>(ms)));
}

ConcurrencyGate::ConcurrencyGate(int max_in_flight)
    : bound_(max_in_flight),
      sem_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, kMaxBound)) {
  if (max_in_flight < 1 || max_in_flight > kMaxBound) {
    throw PreconditionError("concurrency bound must be in 1.." + std::to_string(kMaxBound));
  }
}

std::pair<std::string, std::string> split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw PreconditionError("URL needs a scheme: " + std::string(url));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), ""};
  std::string path(url.substr(path_start));
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {std::string(url.substr(0, path_start)), path};
}

// ---------------------------------------------------------------------------

void to_json(json& j, const ChatMessage& m) { j = json{{"role", m.role}, {"content", m.content}}; }

void from_json(const json& j, ChatMessage& m) {
  m.role = j.at("role").get<std::string>();
  m.content = j.at("content").get<std::string>();
}

void ChatExchange::validate() const {
  bool has_user = false;
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw PreconditionError("unknown chat role: " + m.role);
    }
    has_user = has_user || m.role == "user";
  }
  if (!has_user) throw PreconditionError("chat exchange has no user message");
}

std::string ChatExchange::cache_key() const {
  json j = {{"model", model_id}, {"temperature", temperature}, {"messages", messages}};
  return sha256_hex(j.dump());
}

OpenAiChatBackend::OpenAiChatBackend(OpenAiConfig config) : config_(std::move(config)) {}

json OpenAiChatBackend::request_body(const ChatExchange& exchange) {
  return json{{"model", exchange.model_id},
              {"messages", exchange.messages},
              {"temperature", exchange.temperature}};
}

std::string OpenAiChatBackend::parse_response(std::string_view body) {
  try {
    const json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransientError(std::string("malformed chat completion: ") + e.what());
  }
}

std::string OpenAiChatBackend::complete(const ChatExchange& exchange) {
  const auto [origin, base_path] = split_url(config_.base_url);
  auto cli = make_http_client(origin, config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = cli->Post(base_path + "/chat/completions", headers, request_body(exchange).dump(),
                       "application/json");
  check_http(res, "chat completion");
  return parse_response(res->body);
}

MockChatBackend::MockChatBackend(Responder responder, std::chrono::milliseconds latency)
    : responder_(std::move(responder)), latency_(latency) {}

std::string MockChatBackend::complete(const ChatExchange& exchange) {
  calls_.fetch_add(1);
  const int now = in_flight_.fetch_add(1) + 1;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<int>& c;
    ~Leave() { c.fetch_sub(1); }
  } leave{in_flight_};
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return responder_(exchange);
}

namespace {

const std::vector<std::string>& en_frames() {
  static const std::vector<std::string> frames = {
      "The doctor explained that {word} was the main concern.",
      "Recent reports mention {word} in several contexts.",
      "We discussed {word} during the morning meeting.",
      "Her notes about {word} were very detailed.",
      "Nobody expected {word} to appear in the final report.",
      "The team studied {word} for many years.",
      "He asked me to spell {word} twice.",
      "Information on {word} is hard to find.",
      "They wrote a short article about {word} last week.",
      "Understanding {word} takes some time.",
  };
  return frames;
}

const std::vector<std::string>& ja_frames() {
  static const std::vector<std::string> frames = {
      "{word}について医師が説明しました。",
      "最近の報告では{word}が取り上げられています。",
      "会議で{word}について話し合いました。",
      "{word}に関する記録はとても詳しかった。",
      "{word}が最終報告に出てくるとは誰も思わなかった。",
      "チームは長年{word}を研究してきた。",
      "{word}の情報を見つけるのは難しい。",
      "先週{word}についての短い記事を書いた。",
      "{word}を理解するには時間がかかる。",
      "彼は{word}をもう一度書くように頼んだ。",
  };
  return frames;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string var(const ChatExchange& ex, const std::string& name) {
  auto it = ex.vars.find(name);
  if (it == ex.vars.end()) throw ClientError("simulated backend: missing binding '" + name + "'", 400);
  return it->second;
}

std::string simulate_extraction(const std::string& text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line) && out.size() < 20) {
    bool sentence_start = true;
    for (const auto& raw : split_whitespace(line)) {
      const std::string tok = strip_outer_punct(raw);
      const bool ends_sentence = !raw.empty() && (raw.back() == '.' || raw.back() == '?' || raw.back() == '!');
      if (!tok.empty()) {
        const auto cps = code_points(tok);
        const bool ascii_cap = tok[0] >= 'A' && tok[0] <= 'Z';
        const bool pick = cps.size() >= 9 || (ascii_cap && !sentence_start);
        const std::string key = casefold(tok);
        if (pick && seen.insert(key).second) out.push_back(tok);
      }
      sentence_start = ends_sentence;
      if (out.size() >= 20) break;
    }
  }
  return join(out, "\n");
}

}  // namespace

std::string SimulatedChatBackend::complete(const ChatExchange& ex) {
  ex.validate();
  if (ex.task == "transcripts") {
    const std::string word = var(ex, "word");
    const int count = std::stoi(var(ex, "count"));
    const bool ja = ex.vars.count("language") && ex.vars.at("language") == "JA";
    const auto& frames = ja ? ja_frames() : en_frames();
    const std::size_t offset = derive_seed({"frames", word}) % frames.size();
    std::string out;
    for (int i = 0; i < count; ++i) {
      out += std::to_string(i + 1) + ". " +
             replace_all(frames[(offset + static_cast<std::size_t>(i)) % frames.size()], "{word}", word) + "\n";
    }
    return out;
  }
  if (ex.task == "lsp" || ex.task == "ipa") return casefold(var(ex, "text"));
  if (ex.task == "extract") return simulate_extraction(var(ex, "text"));
  if (ex.task == "ger") {
    const auto nbest = json::parse(var(ex, "nbest")).get<std::vector<std::string>>();
    if (nbest.empty()) throw ClientError("simulated backend: empty n-best", 400);
    return corrector_ ? corrector_(nbest) : nbest.front();
  }
  throw ClientError("simulated backend: unknown task '" + ex.task + "'", 400);
}

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, ClientOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      gate_(options_.max_concurrency),
      cache_(make_cache(options_.cache_file)),
      audit_(make_audit(options_.audit_file)) {
  if (!backend_) throw PreconditionError("chat client needs a backend");
}

std::string ChatClient::chat(const ChatExchange& exchange) {
  exchange.validate();
  const bool cacheable = options_.enable_cache && exchange.temperature == 0.0;
  const std::string key = exchange.cache_key();
  if (cacheable) {
    if (auto hit = cache_.get(key)) {
      cache_hits_.fetch_add(1);
      return hit->at("content").get<std::string>();
    }
  }
  const std::string content = with_retry(
      options_.retry,
      [&]() -> std::string {
        ConcurrencyGate::Permit permit(gate_);
        backend_calls_.fetch_add(1);
        try {
          std::string out = backend_->complete(exchange);
          if (audit_) {
            audit_->append({{"time", utc_now()}, {"service", "chat"}, {"backend", backend_->name()},
                            {"task", exchange.task}, {"key", key},
                            {"request", OpenAiChatBackend::request_body(exchange)}, {"response", out}});
          }
          return out;
        } catch (const ServiceError& e) {
          if (audit_) {
            audit_->append({{"time", utc_now()}, {"service", "chat"}, {"backend", backend_->name()},
                            {"task", exchange.task}, {"key", key}, {"error", e.what()}});
          }
          throw;
        }
      },
      "chat(" + exchange.task + ")");
  if (cacheable) cache_.put(key, json{{"content", content}});
  return content;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kSimAudioFormat = "gerkit-sim-audio/1";
}

std::string SimulatedTtsBackend::synthesize(const TtsJob& job) {
  return json{{"format", kSimAudioFormat},
              {"text", job.text},
              {"speaker_id", job.speaker_id},
              {"voice_id", job.voice_id},
              {"language", to_string(job.language)}}
      .dump();
}

std::optional<TtsJob> SimulatedTtsBackend::decode(std::string_view blob) {
  try {
    const json j = json::parse(blob);
    if (!j.is_object() || j.value("format", "") != kSimAudioFormat) return std::nullopt;
    TtsJob job;
    job.text = j.at("text").get<std::string>();
    job.speaker_id = j.at("speaker_id").get<int>();
    job.voice_id = j.at("voice_id").get<std::string>();
    job.language = parse_language(j.at("language").get<std::string>());
    return job;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string RestTtsBackend::synthesize(const TtsJob& job) {
  const auto [origin, path] = split_url(config_.url);
  auto cli = make_http_client(origin, config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const json body = {{"text", job.text},
                     {"voice", job.voice_id},
                     {"speaker_id", job.speaker_id},
                     {"language", to_string(job.language)}};
  auto res = cli->Post(path.empty() ? "/" : path, headers, body.dump(), "application/json");
  check_http(res, "tts");
  if (res->body.empty()) throw TransientError("tts: empty audio body");
  return res->body;
}

TtsClient::TtsClient(std::shared_ptr<TtsBackend> backend, std::shared_ptr<BlobStore> store,
                     TtsOptions options)
    : backend_(std::move(backend)),
      store_(std::move(store)),
      options_(std::move(options)),
      gate_(options_.max_concurrency),
      index_(make_cache(options_.index_file)),
      audit_(make_audit(options_.audit_file)) {
  if (!backend_ || !store_) throw PreconditionError("tts client needs a backend and a blob store");
  if (options_.max_speakers < 1) throw PreconditionError("max_speakers must be >= 1");
}

std::string TtsClient::synthesize(const TtsJob& job) {
  if (trim(job.text).empty()) throw PreconditionError("tts job text is empty");
  if (job.speaker_id < 1 || job.speaker_id > options_.max_speakers) {
    throw PreconditionError("speaker id " + std::to_string(job.speaker_id) + " outside 1.." +
                            std::to_string(options_.max_speakers));
  }
  const std::string key = content_key({backend_->name(), job.text, std::to_string(job.speaker_id),
                                       job.voice_id, to_string(job.language)});
  if (auto hit = index_.get(key)) {
    const auto locator = hit->at("locator").get<std::string>();
    if (store_->contains(locator)) return locator;
  }
  const std::string audio = with_retry(
      options_.retry,
      [&]() -> std::string {
        ConcurrencyGate::Permit permit(gate_);
        backend_calls_.fetch_add(1);
        return backend_->synthesize(job);
      },
      "tts");
  const std::string locator = store_->put(audio);
  index_.put(key, json{{"locator", locator}});
  if (audit_) {
    audit_->append({{"time", utc_now()}, {"service", "tts"}, {"backend", backend_->name()},
                    {"text", job.text}, {"speaker_id", job.speaker_id}, {"voice_id", job.voice_id},
                    {"locator", locator}});
  }
  return locator;
}

// ---------------------------------------------------------------------------

void ConfusionModel::validate() const {
  for (double p : {p_sub, p_del, p_ins}) {
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("channel probabilities must lie in [0,1]");
  }
  if (p_sub + p_del + p_ins > 1.0 + 1e-12) throw PreconditionError("p_sub + p_del + p_ins exceeds 1");
  for (const auto& [token, subs] : sub_table) {
    for (const auto& c : subs) {
      if (!(c.weight > 0.0)) throw PreconditionError("confusion weight for '" + token + "' must be positive");
    }
  }
}

json confusion_model_to_json(const ConfusionModel& model) {
  json table = json::object();
  for (const auto& [token, subs] : model.sub_table) {
    json arr = json::array();
    for (const auto& c : subs) arr.push_back({{"token", c.token}, {"weight", c.weight}});
    table[token] = arr;
  }
  return json{{"sub_table", table},
              {"p_sub", model.p_sub},
              {"p_del", model.p_del},
              {"p_ins", model.p_ins},
              {"seed", model.seed}};
}

ConfusionModel confusion_model_from_json(const json& j) {
  ConfusionModel m;
  m.p_sub = j.value("p_sub", 0.0);
  m.p_del = j.value("p_del", 0.0);
  m.p_ins = j.value("p_ins", 0.0);
  m.seed = j.value("seed", uint64_t{0});
  if (j.contains("sub_table")) {
    for (const auto& [token, arr] : j["sub_table"].items()) {
      auto& subs = m.sub_table[token];
      for (const auto& c : arr) subs.push_back({c.at("token").get<std::string>(), c.value("weight", 1.0)});
    }
  }
  m.validate();
  return m;
}

namespace {

std::vector<std::string> phone_units(const std::string& phonemes) {
  auto toks = split_whitespace(phonemes);
  if (toks.size() > 1) return toks;
  return code_points(phonemes);
}

}  // namespace

ConfusionModel build_confusion_model(const G2pLexicon& lexicon, int threshold) {
  if (lexicon.empty()) throw PreconditionError("confusion model needs a non-empty lexicon");
  if (threshold < 0) throw PreconditionError("phonetic distance threshold must be >= 0");
  std::vector<std::pair<std::string, std::vector<std::string>>> words;
  for (const auto& [word, phonemes] : lexicon.entries()) words.emplace_back(word, phone_units(phonemes));
  ConfusionModel model;
  for (std::size_t a = 0; a < words.size(); ++a) {
    for (std::size_t b = a + 1; b < words.size(); ++b) {
      const auto& pa = words[a].second;
      const auto& pb = words[b].second;
      const std::size_t len_gap = pa.size() > pb.size() ? pa.size() - pb.size() : pb.size() - pa.size();
      if (len_gap > static_cast<std::size_t>(threshold)) continue;
      const std::size_t d = edit_distance(pa, pb);
      if (d > static_cast<std::size_t>(threshold)) continue;
      const double w = 1.0 / (1.0 + static_cast<double>(d));
      model.sub_table[words[a].first].push_back({words[b].first, w});
      model.sub_table[words[b].first].push_back({words[a].first, w});
    }
  }
  for (auto& [token, subs] : model.sub_table) {
    std::sort(subs.begin(), subs.end(), [](const Confusable& x, const Confusable& y) {
      return x.weight != y.weight ? x.weight > y.weight : x.token < y.token;
    });
  }
  return model;
}

SimulatedAsrBackend::SimulatedAsrBackend(ConfusionModel model) : model_(std::move(model)) {
  model_.validate();
  for (const auto& [key, subs] : model_.sub_table) {
    max_key_length_ = std::max(max_key_length_, code_points(key).size());
  }
}

std::vector<std::string> SimulatedAsrBackend::segment(std::string_view text, Language language) const {
  if (language == Language::kEn) return split_whitespace(text);
  // No word boundaries: prefer the longest confusable key, else one code
  // point at a time.
  const auto cps = code_points(remove_whitespace(text));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t take = 1;
    std::string best = cps[i];
    std::string cur;
    for (std::size_t len = 1; len <= max_key_length_ && i + len <= cps.size(); ++len) {
      cur += cps[i + len - 1];
      if (len > 1 && model_.sub_table.count(cur)) {
        take = len;
        best = cur;
      }
    }
    out.push_back(best);
    i += take;
  }
  return out;
}

std::vector<std::string> SimulatedAsrBackend::draw(const std::vector<std::string>& units,
                                                   Language language, uint64_t seed) const {
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(units.size() + 4);
  for (const auto& unit : units) {
    const double r = rng.uniform();
    const double pick = rng.uniform();
    if (r < model_.p_sub) {
      const std::string key = language == Language::kEn ? casefold(unit) : unit;
      auto it = model_.sub_table.find(key);
      if (it == model_.sub_table.end() || it->second.empty()) {
        out.push_back(unit);
        continue;
      }
      double total = 0.0;
      for (const auto& c : it->second) total += c.weight;
      double target = pick * total;
      const Confusable* chosen = &it->second.back();
      for (const auto& c : it->second) {
        if (target < c.weight) {
          chosen = &c;
          break;
        }
        target -= c.weight;
      }
      out.push_back(chosen->token);
    } else if (r < model_.p_sub + model_.p_del) {
      // dropped
    } else if (r < model_.p_sub + model_.p_del + model_.p_ins) {
      out.push_back(unit);
      out.push_back(unit);
    } else {
      out.push_back(unit);
    }
  }
  return out;
}

std::vector<Hypothesis> SimulatedAsrBackend::transcribe_text(std::string_view reference, std::size_t n,
                                                             std::string_view salt, Language language) const {
  if (n < 1) throw PreconditionError("n must be >= 1");
  const auto units = segment(reference, language);
  const std::string seed_str = std::to_string(model_.seed);
  const std::string_view sep = language == Language::kEn ? " " : "";
  const auto canonical = draw(units, language, derive_seed({seed_str, salt, reference, "canonical"}));
  // Distinct draws only, as a beam would return; a quiet channel can give
  // fewer than n.
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (distance, k)
  std::vector<std::string> texts;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < 4 * n && texts.size() < n; ++k) {
    const std::string k_str = std::to_string(k);
    auto d = draw(units, language, derive_seed({seed_str, salt, reference, k_str}));
    std::string text = join(d, sep);
    if (!seen.insert(text).second) continue;
    order.emplace_back(edit_distance(d, canonical), texts.size());
    texts.push_back(std::move(text));
  }
  std::sort(order.begin(), order.end());
  std::vector<Hypothesis> out;
  for (const auto& [d, k] : order) out.push_back({texts[k], -static_cast<double>(d)});
  return out;
}

std::vector<Hypothesis> SimulatedAsrBackend::transcribe(std::string_view audio, std::size_t n) {
  auto job = SimulatedTtsBackend::decode(audio);
  if (!job) throw ClientError("simulated ASR only accepts simulated TTS audio", 415);
  return transcribe_text(job->text, n, "speaker:" + std::to_string(job->speaker_id) + ":" + job->voice_id,
                         job->language);
}

std::vector<Hypothesis> RestAsrBackend::transcribe(std::string_view audio, std::size_t n) {
  const auto [origin, path] = split_url(config_.url);
  auto cli = make_http_client(origin, config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const std::string target = (path.empty() ? "/" : path) + "?n=" + std::to_string(n);
  auto res = cli->Post(target, headers, std::string(audio), "application/octet-stream");
  check_http(res, "asr");
  try {
    const json j = json::parse(res->body);
    return j.at("nbest").get<std::vector<Hypothesis>>();
  } catch (const json::exception& e) {
    throw TransientError(std::string("asr: malformed response: ") + e.what());
  }
}

AsrClient::AsrClient(std::shared_ptr<AsrBackend> backend, std::shared_ptr<BlobStore> store,
                     AsrOptions options)
    : backend_(std::move(backend)),
      store_(std::move(store)),
      options_(std::move(options)),
      gate_(options_.max_concurrency),
      cache_(make_cache(options_.cache_file)),
      audit_(make_audit(options_.audit_file)) {
  if (!backend_ || !store_) throw PreconditionError("asr client needs a backend and a blob store");
}

AsrResult AsrClient::transcribe(const std::string& locator, std::size_t n, const std::string& utterance_id) {
  if (n < 1) throw PreconditionError("n must be >= 1");
  const std::string key = content_key({backend_->name(), locator, std::to_string(n)});
  if (auto hit = cache_.get(key)) {
    return {utterance_id, hit->at("nbest").get<std::vector<Hypothesis>>()};
  }
  const std::string audio = store_->get(locator);
  auto nbest = with_retry(
      options_.retry,
      [&]() {
        ConcurrencyGate::Permit permit(gate_);
        backend_calls_.fetch_add(1);
        return backend_->transcribe(audio, n);
      },
      "asr");
  if (nbest.empty()) throw ServiceError("asr returned no hypotheses for " + utterance_id);
  if (nbest.size() > n) nbest.resize(n);
  cache_.put(key, json{{"nbest", nbest}});
  if (audit_) {
    audit_->append({{"time", utc_now()}, {"service", "asr"}, {"backend", backend_->name()},
                    {"locator", locator}, {"n", n}, {"nbest", nbest}});
  }
  return {utterance_id, std::move(nbest)};
}

}  // namespace gerkit
