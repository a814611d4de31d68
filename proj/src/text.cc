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

#include "gerkit/text.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <iostream>
#include <mutex>

#include "gerkit/error.h"

namespace gerkit {
namespace {

std::mutex g_sink_mu;
WarningSink g_sink;

icu::UnicodeString to_unicode(std::string_view s) {
  return icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool is_punct_cp(UChar32 c) {
  // Punctuation plus symbols (quotes, currency, math signs) count as
  // punctuation for scoring purposes.
  const int8_t type = u_charType(c);
  switch (type) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

// Iterates code points as (start, end, cp) byte ranges.
template <typename F>
void for_each_cp(std::string_view s, F&& f) {
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    f(static_cast<std::size_t>(start), static_cast<std::size_t>(i), c);
  }
}

}  // namespace

std::string_view to_string(Language lang) {
  return lang == Language::kEn ? "EN" : "JA";
}

Language parse_language(std::string_view tag) {
  std::string t(tag);
  for (auto& ch : t) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (t == "EN") return Language::kEn;
  if (t == "JA") return Language::kJa;
  throw PreconditionError("unsupported language tag: " + std::string(tag));
}

bool is_valid_utf8(std::string_view s) {
  bool ok = true;
  for_each_cp(s, [&](std::size_t, std::size_t, UChar32 c) {
    if (c < 0) ok = false;
  });
  return ok;
}

std::string nfkc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFKC normalizer unavailable");
  icu::UnicodeString out = norm->normalize(to_unicode(s), status);
  if (U_FAILURE(status)) throw DecodeError("NFKC normalization failed");
  return to_utf8(out);
}

std::string casefold(std::string_view s) {
  icu::UnicodeString u = to_unicode(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  return to_utf8(u);
}

std::string trim(std::string_view s) {
  std::size_t begin = s.size();
  std::size_t end = 0;
  for_each_cp(s, [&](std::size_t b, std::size_t e, UChar32 c) {
    if (!u_isUWhiteSpace(c)) {
      begin = std::min(begin, b);
      end = e;
    }
  });
  if (begin >= end) return {};
  return std::string(s.substr(begin, end - begin));
}

std::string strip_outer_punct(std::string_view s) {
  std::size_t begin = s.size();
  std::size_t end = 0;
  for_each_cp(s, [&](std::size_t b, std::size_t e, UChar32 c) {
    if (!is_punct_cp(c) && !u_isUWhiteSpace(c)) {
      begin = std::min(begin, b);
      end = e;
    }
  });
  if (begin >= end) return {};
  return std::string(s.substr(begin, end - begin));
}

std::string remove_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for_each_cp(s, [&](std::size_t b, std::size_t e, UChar32 c) {
    if (!u_isUWhiteSpace(c)) out.append(s.substr(b, e - b));
  });
  return out;
}

std::string remove_punct(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for_each_cp(s, [&](std::size_t b, std::size_t e, UChar32 c) {
    if (!is_punct_cp(c)) out.append(s.substr(b, e - b));
  });
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for_each_cp(s, [&](std::size_t b, std::size_t e, UChar32 c) {
    if (u_isUWhiteSpace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.append(s.substr(b, e - b));
    }
  });
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  return join(split_whitespace(s), " ");
}

std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> out;
  for_each_cp(s, [&](std::size_t b, std::size_t e, UChar32) {
    out.emplace_back(s.substr(b, e - b));
  });
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string normalize_entry(std::string_view s, Language lang) {
  std::string out = nfkc(s);
  if (lang == Language::kEn) {
    out = casefold(out);
    // NFKC after casefold keeps the result closed under repeated application.
    out = nfkc(out);
    std::vector<std::string> toks;
    for (auto& t : split_whitespace(out)) {
      auto stripped = strip_outer_punct(t);
      if (!stripped.empty()) toks.push_back(std::move(stripped));
    }
    return join(toks, " ");
  }
  return collapse_whitespace(out);
}

void set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(g_sink_mu);
  g_sink = std::move(sink);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_sink_mu);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "WARNING: " << message << "\n";
  }
}

}  // namespace gerkit
