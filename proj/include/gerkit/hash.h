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

#ifndef GERKIT_HASH_H_
#define GERKIT_HASH_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>

namespace gerkit {

// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view data);

// Hashes a tuple of fields with unambiguous framing (length-prefixed), so
// ("ab","c") and ("a","bc") never collide.
std::string content_key(std::initializer_list<std::string_view> fields);

// 64-bit seed derived from a content key.
uint64_t derive_seed(std::initializer_list<std::string_view> fields);

// Deterministic RNG. Uses its own float/int mapping instead of the
// <random> distributions so sequences are identical across standard
// libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform in [0, n). n must be > 0.
  uint64_t below(uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gerkit

#endif  // GERKIT_HASH_H_
