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

#ifndef GERKIT_STORE_H_
#define GERKIT_STORE_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "json.hpp"

namespace gerkit {

using json = nlohmann::json;

// Writes `data` to a sibling temp file and renames it over `path`, so
// readers see either the old or the new file, never a torn one.
void atomic_write_file(const std::filesystem::path& path, std::string_view data);
std::string read_file(const std::filesystem::path& path);

// Key -> JSON payload map, optionally persisted as JSON-lines
// {"key":...,"hash":...,"value":...}. `hash` is the SHA-256 of the compact
// value dump and is verified on load; a mismatch throws CacheCorruption.
// Concurrent readers, serialized writers.
class JsonlCache {
 public:
  JsonlCache() = default;
  explicit JsonlCache(std::filesystem::path file);

  std::optional<json> get(const std::string& key) const;
  void put(const std::string& key, json value);
  bool contains(const std::string& key) const;
  std::size_t size() const;
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  void flush_locked() const;

  std::optional<std::filesystem::path> file_;
  mutable std::shared_mutex mu_;
  std::map<std::string, json> entries_;
};

// Content-addressed blob directory: store/<2-char-prefix>/<sha256>.
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path root);

  // Returns the locator (the hex hash). Idempotent.
  std::string put(std::string_view bytes);
  // Throws PreconditionError for unknown locators, CacheCorruption when the
  // bytes no longer hash to the locator.
  std::string get(const std::string& locator) const;
  bool contains(const std::string& locator) const;
  std::filesystem::path path_for(const std::string& locator) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
};

// Append-only JSON-lines log of remote payloads.
class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path file);
  void append(const json& record);

 private:
  std::filesystem::path file_;
  std::mutex mu_;
};

}  // namespace gerkit

#endif  // GERKIT_STORE_H_
