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

#ifndef GERKIT_TEXT_H_
#define GERKIT_TEXT_H_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gerkit {

enum class Language { kEn, kJa };

std::string_view to_string(Language lang);
// Accepts "EN"/"JA" in any case. Throws PreconditionError otherwise.
Language parse_language(std::string_view tag);

bool is_valid_utf8(std::string_view s);

// Unicode helpers (ICU backed). Inputs must be valid UTF-8.
std::string nfkc(std::string_view s);
std::string casefold(std::string_view s);
std::string trim(std::string_view s);
// Removes leading and trailing punctuation/symbol code points only;
// "HbA1c," -> "HbA1c", "rahy-zing" stays as is.
std::string strip_outer_punct(std::string_view s);
std::string remove_whitespace(std::string_view s);
std::string remove_punct(std::string_view s);
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
// One element per code point.
std::vector<std::string> code_points(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Normalization applied to rare-word entries and to any text matched against
// them: EN is NFKC + casefold + outer punctuation strip, JA is NFKC only.
// Idempotent.
std::string normalize_entry(std::string_view s, Language lang);

// Minimal warning channel. The default sink writes to stderr; tests swap it
// to capture messages.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace gerkit

#endif  // GERKIT_TEXT_H_
