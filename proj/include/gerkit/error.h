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

#ifndef GERKIT_ERROR_H_
#define GERKIT_ERROR_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace gerkit {

// Root of every error the library throws. Callers that only care about
// "something in gerkit failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (bad config value, empty input
// where one is required, speaker id out of range, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class EmptyList : public Error {
 public:
  using Error::Error;
};

// The LLM answered but the answer could not be interpreted.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw_response)
      : Error(what), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const { return raw_response_; }

 private:
  std::string raw_response_;
};

class CoverageInfeasible : public Error {
 public:
  CoverageInfeasible(const std::string& what, double best_coverage_pct)
      : Error(what), best_coverage_pct_(best_coverage_pct) {}
  double best_coverage_pct() const { return best_coverage_pct_; }

 private:
  double best_coverage_pct_;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// Fewer usable transcripts than requested came back from the generator.
// The items that did parse are kept so a caller can top up on retry.
class ShortGeneration : public Error {
 public:
  ShortGeneration(std::size_t found, std::vector<std::string> items)
      : Error("short generation: found " + std::to_string(found)),
        found_(found),
        items_(std::move(items)) {}
  std::size_t found() const { return found_; }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::size_t found_;
  std::vector<std::string> items_;
};

class EmptyCorrection : public Error {
 public:
  using Error::Error;
};

class EmptyConversion : public Error {
 public:
  using Error::Error;
};

// Failures talking to a remote (or simulated) service.
class ServiceError : public Error {
 public:
  using Error::Error;
};

// Retries exhausted on a transient failure (5xx, timeouts, refused
// connections).
class ServiceUnavailable : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

// The service rejected the request (HTTP 4xx). Never retried.
class ClientError : public ServiceError {
 public:
  ClientError(const std::string& what, int status)
      : ServiceError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Raised by a backend for one attempt; the retry loop turns it into
// ServiceUnavailable once the budget is spent.
class TransientError : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

class CacheCorruption : public Error {
 public:
  using Error::Error;
};

class ExportError : public Error {
 public:
  using Error::Error;
};

// Outputs and evaluation set disagree on utterance ids.
class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& what, std::vector<std::string> ids)
      : Error(what), ids_(std::move(ids)) {}
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class MissingHypotheses : public Error {
 public:
  explicit MissingHypotheses(std::string id)
      : Error("no hypotheses for utterance " + id), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// A service failure while processing one utterance.
class UtteranceFailure : public ServiceError {
 public:
  UtteranceFailure(std::string id, const std::string& cause)
      : ServiceError("utterance " + id + ": " + cause), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// The dataset build stopped on a systemic service failure. The partial
// manifest (when a state directory was configured) names the words done.
class BuildAborted : public ServiceError {
 public:
  BuildAborted(const std::string& what, std::string manifest_path)
      : ServiceError(what), manifest_path_(std::move(manifest_path)) {}
  const std::string& manifest_path() const { return manifest_path_; }

 private:
  std::string manifest_path_;
};

}  // namespace gerkit

#endif  // GERKIT_ERROR_H_
