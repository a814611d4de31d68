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

#include "gerkit/store.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "gerkit/error.h"
#include "gerkit/hash.h"

namespace gerkit {
namespace fs = std::filesystem;

void atomic_write_file(const fs::path& path, std::string_view data) {
  static std::atomic<uint64_t> counter{0};
  if (path.has_parent_path()) {
    std::error_code dir_ec;
    fs::create_directories(path.parent_path(), dir_ec);
    if (dir_ec) throw ExportError("cannot create " + path.parent_path().string() + ": " + dir_ec.message());
  }
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << counter.fetch_add(1);
  const fs::path tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportError("cannot open " + tmp.string() + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw ExportError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ExportError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

JsonlCache::JsonlCache(fs::path file) : file_(std::move(file)) {
  if (!fs::exists(*file_)) return;
  std::istringstream in(read_file(*file_));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw CacheCorruption(file_->string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.contains("key") || !rec.contains("hash") || !rec.contains("value")) {
      throw CacheCorruption(file_->string() + ":" + std::to_string(lineno) + ": missing fields");
    }
    const json& value = rec["value"];
    if (sha256_hex(value.dump()) != rec["hash"].get<std::string>()) {
      throw CacheCorruption(file_->string() + ":" + std::to_string(lineno) + ": hash mismatch");
    }
    entries_[rec["key"].get<std::string>()] = value;
  }
}

std::optional<json> JsonlCache::get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool JsonlCache::contains(const std::string& key) const {
  std::shared_lock lock(mu_);
  return entries_.count(key) > 0;
}

std::size_t JsonlCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void JsonlCache::put(const std::string& key, json value) {
  std::unique_lock lock(mu_);
  entries_[key] = std::move(value);
  flush_locked();
}

void JsonlCache::flush_locked() const {
  if (!file_) return;
  std::string out;
  for (const auto& [key, value] : entries_) {
    json rec = {{"key", key}, {"hash", sha256_hex(value.dump())}, {"value", value}};
    out += rec.dump();
    out.push_back('\n');
  }
  atomic_write_file(*file_, out);
}

BlobStore::BlobStore(fs::path root) : root_(std::move(root)) {}

fs::path BlobStore::path_for(const std::string& locator) const {
  if (locator.size() < 3) throw PreconditionError("bad blob locator: " + locator);
  return root_ / locator.substr(0, 2) / locator;
}

std::string BlobStore::put(std::string_view bytes) {
  const std::string locator = sha256_hex(bytes);
  const fs::path path = path_for(locator);
  std::lock_guard<std::mutex> lock(mu_);
  if (!fs::exists(path)) atomic_write_file(path, bytes);
  return locator;
}

bool BlobStore::contains(const std::string& locator) const {
  return fs::exists(path_for(locator));
}

std::string BlobStore::get(const std::string& locator) const {
  const fs::path path = path_for(locator);
  if (!fs::exists(path)) throw PreconditionError("unknown blob " + locator);
  std::string bytes = read_file(path);
  if (sha256_hex(bytes) != locator) throw CacheCorruption("blob " + locator + " does not match its hash");
  return bytes;
}

AuditLog::AuditLog(fs::path file) : file_(std::move(file)) {
  if (file_.has_parent_path()) fs::create_directories(file_.parent_path());
}

void AuditLog::append(const json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  if (!out) throw ExportError("cannot append to " + file_.string());
  out << line;
}

}  // namespace gerkit
