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

#ifndef GERKIT_SERVICES_H_
#define GERKIT_SERVICES_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gerkit/corpus.h"
#include "gerkit/error.h"
#include "gerkit/store.h"
#include "gerkit/text.h"

namespace gerkit {

class G2pLexicon;

// ---------------------------------------------------------------------------
// Shared client plumbing.

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_delay{10000};
};

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry_index);

// Runs `attempt` until it succeeds, throws a non-transient error, or the
// retry budget is spent (then ServiceUnavailable). Sleeps between attempts
// with exponential backoff.
template <typename F>
auto with_retry(const RetryPolicy& policy, F&& attempt, std::string_view what) {
  for (int retry = 0;; ++retry) {
    try {
      return attempt();
    } catch (const TransientError& e) {
      if (retry >= policy.max_retries) {
        throw ServiceUnavailable(std::string(what) + ": giving up after " +
                                 std::to_string(retry + 1) + " attempts: " + e.what());
      }
    }
    std::this_thread::sleep_for(backoff_delay(policy, retry));
  }
}

// Counting semaphore holder that releases on scope exit.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int max_in_flight);
  class Permit {
   public:
    explicit Permit(ConcurrencyGate& gate) : gate_(gate) { gate_.sem_.acquire(); }
    ~Permit() { gate_.sem_.release(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    ConcurrencyGate& gate_;
  };
  int bound() const { return bound_; }

 private:
  static constexpr std::ptrdiff_t kMaxBound = 1024;
  int bound_;
  std::counting_semaphore<kMaxBound> sem_;
};

// ---------------------------------------------------------------------------
// Chat LLM.

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);

struct ChatExchange {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string model_id;
  // Provenance only: which prompt family produced this exchange and with
  // what bindings. Never sent to a remote backend and not part of the cache
  // key; simulated backends dispatch on it.
  std::string task;
  std::map<std::string, std::string> vars;

  // Throws PreconditionError on unknown roles or no user message.
  void validate() const;
  // Content hash over model, temperature, and messages.
  std::string cache_key() const;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // One attempt. Throws TransientError (retryable) or ClientError.
  virtual std::string complete(const ChatExchange& exchange) = 0;
  virtual std::string name() const = 0;
};

// OpenAI-compatible chat-completions over HTTP(S).
struct OpenAiConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::seconds timeout{60};
};

class OpenAiChatBackend : public ChatBackend {
 public:
  explicit OpenAiChatBackend(OpenAiConfig config);
  std::string complete(const ChatExchange& exchange) override;
  std::string name() const override { return "openai"; }

  // Request body for an exchange (exposed for tests).
  static nlohmann::json request_body(const ChatExchange& exchange);
  // Extracts choices[0].message.content; throws TransientError on malformed
  // bodies.
  static std::string parse_response(std::string_view body);

 private:
  OpenAiConfig config_;
};

// Scriptable in-process backend with call instrumentation.
class MockChatBackend : public ChatBackend {
 public:
  using Responder = std::function<std::string(const ChatExchange&)>;
  explicit MockChatBackend(Responder responder, std::chrono::milliseconds latency = {});

  std::string complete(const ChatExchange& exchange) override;
  std::string name() const override { return "mock"; }

  std::size_t calls() const { return calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  Responder responder_;
  std::chrono::milliseconds latency_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

// Deterministic offline stand-in for the LLM. Dispatches on
// ChatExchange::task:
//   transcripts  -> `count` templated sentences containing `word`
//   lsp / ipa    -> the casefolded source text
//   extract      -> long or capitalized words from the text
//   ger          -> hypothesis 1 verbatim, or, when a corrector is
//                   installed, its correction of the hypotheses
class SimulatedChatBackend : public ChatBackend {
 public:
  using Corrector = std::function<std::string(const std::vector<std::string>& nbest)>;
  SimulatedChatBackend() = default;
  explicit SimulatedChatBackend(Corrector corrector) : corrector_(std::move(corrector)) {}

  std::string complete(const ChatExchange& exchange) override;
  std::string name() const override { return "simulated"; }

 private:
  Corrector corrector_;
};

struct ClientOptions {
  RetryPolicy retry;
  int max_concurrency = 4;
  // Temperature-0 responses are cached here when set (in memory otherwise).
  std::optional<std::filesystem::path> cache_file;
  bool enable_cache = true;
  std::optional<std::filesystem::path> audit_file;
};

class ChatClient {
 public:
  ChatClient(std::shared_ptr<ChatBackend> backend, ClientOptions options = {});

  // Returns the assistant text. Retries transient failures; caches
  // temperature-0 exchanges by content hash.
  std::string chat(const ChatExchange& exchange);

  // Attempts that reached the backend (including failed ones).
  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  ChatBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  ClientOptions options_;
  ConcurrencyGate gate_;
  JsonlCache cache_;
  std::unique_ptr<AuditLog> audit_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// ---------------------------------------------------------------------------
// Text-to-speech.

struct TtsJob {
  std::string text;
  int speaker_id = 1;
  std::string voice_id;
  Language language = Language::kEn;
};

class TtsBackend {
 public:
  virtual ~TtsBackend() = default;
  // Audio bytes for the job. Same error contract as ChatBackend.
  virtual std::string synthesize(const TtsJob& job) = 0;
  virtual std::string name() const = 0;
};

// Pseudo-audio: a small JSON document naming the text and speaker, so the
// simulated ASR can recover the spoken text.
class SimulatedTtsBackend : public TtsBackend {
 public:
  std::string synthesize(const TtsJob& job) override;
  std::string name() const override { return "simulated"; }
  // Parses a blob produced by synthesize(); nullopt for anything else.
  static std::optional<TtsJob> decode(std::string_view blob);
};

struct RestConfig {
  std::string url;
  std::string api_key;
  std::chrono::seconds timeout{120};
};

// POSTs {"text","voice","speaker_id","language"} as JSON; the response body
// is the audio.
class RestTtsBackend : public TtsBackend {
 public:
  explicit RestTtsBackend(RestConfig config) : config_(std::move(config)) {}
  std::string synthesize(const TtsJob& job) override;
  std::string name() const override { return "rest"; }

 private:
  RestConfig config_;
};

struct TtsOptions {
  int max_speakers = 7;
  RetryPolicy retry;
  int max_concurrency = 4;
  // Job -> locator index; lets repeated jobs skip the backend entirely.
  std::optional<std::filesystem::path> index_file;
  std::optional<std::filesystem::path> audit_file;
};

class TtsClient {
 public:
  TtsClient(std::shared_ptr<TtsBackend> backend, std::shared_ptr<BlobStore> store,
            TtsOptions options = {});

  // Persists the audio in the blob store and returns its locator. Throws
  // PreconditionError for empty text or speaker ids outside 1..max_speakers.
  std::string synthesize(const TtsJob& job);

  std::size_t backend_calls() const { return backend_calls_.load(); }
  BlobStore& store() { return *store_; }

 private:
  std::shared_ptr<TtsBackend> backend_;
  std::shared_ptr<BlobStore> store_;
  TtsOptions options_;
  ConcurrencyGate gate_;
  JsonlCache index_;
  std::unique_ptr<AuditLog> audit_;
  std::atomic<std::size_t> backend_calls_{0};
};

// ---------------------------------------------------------------------------
// Speech recognition.

struct AsrResult {
  std::string utterance_id;
  std::vector<Hypothesis> nbest;

  HypothesisSet to_hypothesis_set() const { return {utterance_id, nbest}; }
};

struct Confusable {
  std::string token;
  double weight = 1.0;
};

// Noisy channel for the simulated recognizer. Per reference token: with
// probability p_sub it is replaced by a weighted draw from sub_table (tokens
// without an entry are kept), with p_del it is dropped, with p_ins it is
// followed by a repeated copy.
struct ConfusionModel {
  std::map<std::string, std::vector<Confusable>> sub_table;
  double p_sub = 0.0;
  double p_del = 0.0;
  double p_ins = 0.0;
  uint64_t seed = 0;

  // Throws PreconditionError when probabilities or weights are invalid.
  void validate() const;
};

nlohmann::json confusion_model_to_json(const ConfusionModel& model);
ConfusionModel confusion_model_from_json(const nlohmann::json& j);

// Lexicon words whose phoneme sequences lie within `threshold` edits of each
// other become mutual confusables with weight 1/(1+distance).
ConfusionModel build_confusion_model(const G2pLexicon& lexicon, int phonetic_distance_threshold);

class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  virtual std::vector<Hypothesis> transcribe(std::string_view audio, std::size_t n) = 0;
  virtual std::string name() const = 0;
};

class SimulatedAsrBackend : public AsrBackend {
 public:
  explicit SimulatedAsrBackend(ConfusionModel model);

  // Reads a simulated TTS blob and runs the channel on its text, salted by
  // the speaker.
  std::vector<Hypothesis> transcribe(std::string_view audio, std::size_t n) override;
  std::string name() const override { return "simulated"; }

  // Up to n distinct channel draws of `reference` (at most 4n attempts),
  // ordered best-first by edit distance to one further draw. A pure function
  // of (reference, model, salt, n).
  std::vector<Hypothesis> transcribe_text(std::string_view reference, std::size_t n,
                                          std::string_view salt = {},
                                          Language language = Language::kEn) const;

  const ConfusionModel& model() const { return model_; }

 private:
  std::vector<std::string> segment(std::string_view text, Language language) const;
  std::vector<std::string> draw(const std::vector<std::string>& units, Language language,
                                uint64_t seed) const;
  std::size_t max_key_length_ = 1;
  ConfusionModel model_;
};

// POSTs the audio (application/octet-stream) to `<url>?n=<n>` and expects
// {"nbest":[{"text":...,"score":...}, ...]}.
class RestAsrBackend : public AsrBackend {
 public:
  explicit RestAsrBackend(RestConfig config) : config_(std::move(config)) {}
  std::vector<Hypothesis> transcribe(std::string_view audio, std::size_t n) override;
  std::string name() const override { return "rest"; }

 private:
  RestConfig config_;
};

struct AsrOptions {
  RetryPolicy retry;
  int max_concurrency = 4;
  std::optional<std::filesystem::path> cache_file;
  std::optional<std::filesystem::path> audit_file;
};

class AsrClient {
 public:
  AsrClient(std::shared_ptr<AsrBackend> backend, std::shared_ptr<BlobStore> store,
            AsrOptions options = {});

  // Transcribes the blob at `locator`, returning at most n hypotheses.
  AsrResult transcribe(const std::string& locator, std::size_t n, const std::string& utterance_id);

  std::size_t backend_calls() const { return backend_calls_.load(); }

 private:
  std::shared_ptr<AsrBackend> backend_;
  std::shared_ptr<BlobStore> store_;
  AsrOptions options_;
  ConcurrencyGate gate_;
  JsonlCache cache_;
  std::unique_ptr<AuditLog> audit_;
  std::atomic<std::size_t> backend_calls_{0};
};

// Splits "https://host:port/path" into the scheme+authority part accepted by
// httplib::Client and the path. Exposed for tests.
std::pair<std::string, std::string> split_url(std::string_view url);

}  // namespace gerkit

#endif  // GERKIT_SERVICES_H_
