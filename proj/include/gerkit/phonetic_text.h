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

#ifndef GERKIT_PHONETIC_TEXT_H_
#define GERKIT_PHONETIC_TEXT_H_

#include <string>
#include <string_view>

#include "gerkit/text.h"
#include "json.hpp"

namespace gerkit {

enum class PhoneticScheme { kIpa, kTtsPhoneme, kLsp };

// "IPA", "TTS_PHONEME", "LSP".
std::string_view to_string(PhoneticScheme scheme);
// Also accepts the CLI spellings "ipa", "tts-phoneme", "lsp".
PhoneticScheme parse_scheme(std::string_view name);

// A transcript rendered in one phonetic scheme.
struct PhoneticText {
  PhoneticScheme scheme = PhoneticScheme::kLsp;
  Language language = Language::kEn;
  std::string text;
  std::string source_text;

  bool operator==(const PhoneticText&) const = default;
};

void to_json(nlohmann::json& j, const PhoneticText& p);
void from_json(const nlohmann::json& j, PhoneticText& p);

}  // namespace gerkit

#endif  // GERKIT_PHONETIC_TEXT_H_
