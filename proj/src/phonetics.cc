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

#include "gerkit/phonetics.h"

#include <unicode/utf8.h>

#include "gerkit/error.h"
#include "gerkit/hash.h"
#include "gerkit/prompts.h"
#include "gerkit/services.h"

namespace gerkit {

std::string_view to_string(PhoneticScheme scheme) {
  switch (scheme) {
    case PhoneticScheme::kIpa:
      return "IPA";
    case PhoneticScheme::kTtsPhoneme:
      return "TTS_PHONEME";
    case PhoneticScheme::kLsp:
      return "LSP";
  }
  return "?";
}

PhoneticScheme parse_scheme(std::string_view name) {
  std::string n;
  for (char c : name) n.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (n == "IPA") return PhoneticScheme::kIpa;
  if (n == "TTS_PHONEME" || n == "TTS") return PhoneticScheme::kTtsPhoneme;
  if (n == "LSP") return PhoneticScheme::kLsp;
  throw PreconditionError("unknown phonetic scheme: " + std::string(name));
}

void to_json(nlohmann::json& j, const PhoneticText& p) {
  j = nlohmann::json{{"scheme", to_string(p.scheme)},
                     {"language", to_string(p.language)},
                     {"text", p.text},
                     {"source_text", p.source_text}};
}

void from_json(const nlohmann::json& j, PhoneticText& p) {
  p.scheme = parse_scheme(j.at("scheme").get<std::string>());
  p.language = parse_language(j.at("language").get<std::string>());
  p.text = j.at("text").get<std::string>();
  p.source_text = j.at("source_text").get<std::string>();
}

// ---------------------------------------------------------------------------

namespace {

std::string lexicon_key(std::string_view word) { return nfkc(casefold(nfkc(word))); }

std::string remove_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ') out.push_back(c);
  }
  return out;
}

}  // namespace

G2pLexicon G2pLexicon::parse(std::string_view text, OovPolicy oov_policy) {
  if (!is_valid_utf8(text)) throw DecodeError("lexicon is not valid UTF-8");
  G2pLexicon lex(oov_policy);
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DecodeError("lexicon line " + std::to_string(lineno) + " has no tab separator");
    }
    const std::string word = trim(line.substr(0, tab));
    if (lex.find(word)) continue;
    lex.add(word, line.substr(tab + 1));
  }
  return lex;
}

G2pLexicon G2pLexicon::load(const std::filesystem::path& path, OovPolicy oov_policy) {
  return parse(read_file(path), oov_policy);
}

void G2pLexicon::add(std::string_view word, std::string_view phonemes) {
  std::string key = lexicon_key(trim(word));
  std::string value = collapse_whitespace(phonemes);
  if (key.empty()) throw PreconditionError("lexicon word is empty");
  if (value.empty()) throw PreconditionError("lexicon entry for '" + key + "' has no phonemes");
  max_key_cps_ = std::max(max_key_cps_, code_points(key).size());
  entries_[std::move(key)] = std::move(value);
}

const std::string* G2pLexicon::find(std::string_view word) const {
  auto it = entries_.find(lexicon_key(word));
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

// Pronunciation of one whitespace token, never empty.
std::string convert_token(const std::string& token, const G2pLexicon& lexicon, bool join_phones) {
  const std::string word = strip_outer_punct(token);
  if (word.empty()) return token;
  if (const std::string* p = lexicon.find(word)) return join_phones ? remove_spaces(*p) : *p;
  if (lexicon.oov_policy() == OovPolicy::kPassThrough) return token;
  std::string out;
  for (const auto& cp : code_points(casefold(word))) {
    const std::string* p = lexicon.find(cp);
    out += p ? (join_phones ? remove_spaces(*p) : *p) : cp;
  }
  return out;
}

std::string convert_words(std::string_view text, const G2pLexicon& lexicon, bool join_phones) {
  std::vector<std::string> out;
  for (const auto& tok : split_whitespace(text)) out.push_back(convert_token(tok, lexicon, join_phones));
  return join(out, " ");
}

}  // namespace

PhoneticText to_ipa(std::string_view text, const G2pLexicon& lexicon) {
  return {PhoneticScheme::kIpa, Language::kEn, convert_words(text, lexicon, false), std::string(text)};
}

PhoneticText to_tts_phoneme(std::string_view text, Language language, const G2pLexicon& lexicon) {
  if (language == Language::kEn) {
    return {PhoneticScheme::kTtsPhoneme, language, convert_words(text, lexicon, true), std::string(text)};
  }
  return {PhoneticScheme::kTtsPhoneme, language, romanize_kana(japanese_reading(text, lexicon)),
          std::string(text)};
}

// ---------------------------------------------------------------------------
// Kana.

namespace {

char32_t decode_cp(const std::string& s) {
  int32_t i = 0;
  UChar32 c = 0;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, static_cast<int32_t>(s.size()), c);
  return static_cast<char32_t>(c);
}

std::string encode_cp(char32_t c) {
  uint8_t buf[4];
  int32_t len = 0;
  UBool err = false;
  U8_APPEND(buf, len, 4, static_cast<UChar32>(c), err);
  if (err) return {};
  return std::string(reinterpret_cast<char*>(buf), static_cast<std::size_t>(len));
}

bool is_hiragana(char32_t c) { return c >= 0x3041 && c <= 0x3096; }

std::string to_katakana(const std::string& cp) {
  const char32_t c = decode_cp(cp);
  return is_hiragana(c) ? encode_cp(c + 0x60) : cp;
}

const std::map<std::string, std::string>& kana_table() {
  static const std::map<std::string, std::string> table = {
      {"ア", "a"},    {"イ", "i"},    {"ウ", "u"},    {"エ", "e"},    {"オ", "o"},
      {"カ", "ka"},   {"キ", "ki"},   {"ク", "ku"},   {"ケ", "ke"},   {"コ", "ko"},
      {"ガ", "ga"},   {"ギ", "gi"},   {"グ", "gu"},   {"ゲ", "ge"},   {"ゴ", "go"},
      {"サ", "sa"},   {"シ", "shi"},  {"ス", "su"},   {"セ", "se"},   {"ソ", "so"},
      {"ザ", "za"},   {"ジ", "ji"},   {"ズ", "zu"},   {"ゼ", "ze"},   {"ゾ", "zo"},
      {"タ", "ta"},   {"チ", "chi"},  {"ツ", "tsu"},  {"テ", "te"},   {"ト", "to"},
      {"ダ", "da"},   {"ヂ", "ji"},   {"ヅ", "zu"},   {"デ", "de"},   {"ド", "do"},
      {"ナ", "na"},   {"ニ", "ni"},   {"ヌ", "nu"},   {"ネ", "ne"},   {"ノ", "no"},
      {"ハ", "ha"},   {"ヒ", "hi"},   {"フ", "fu"},   {"ヘ", "he"},   {"ホ", "ho"},
      {"バ", "ba"},   {"ビ", "bi"},   {"ブ", "bu"},   {"ベ", "be"},   {"ボ", "bo"},
      {"パ", "pa"},   {"ピ", "pi"},   {"プ", "pu"},   {"ペ", "pe"},   {"ポ", "po"},
      {"マ", "ma"},   {"ミ", "mi"},   {"ム", "mu"},   {"メ", "me"},   {"モ", "mo"},
      {"ヤ", "ya"},   {"ユ", "yu"},   {"ヨ", "yo"},
      {"ラ", "ra"},   {"リ", "ri"},   {"ル", "ru"},   {"レ", "re"},   {"ロ", "ro"},
      {"ワ", "wa"},   {"ヰ", "i"},    {"ヱ", "e"},    {"ヲ", "o"},    {"ン", "n"},
      {"ヴ", "vu"},
      {"ァ", "a"},    {"ィ", "i"},    {"ゥ", "u"},    {"ェ", "e"},    {"ォ", "o"},
      {"ャ", "ya"},   {"ュ", "yu"},   {"ョ", "yo"},   {"ヮ", "wa"},
      {"キャ", "kya"}, {"キュ", "kyu"}, {"キョ", "kyo"},
      {"ギャ", "gya"}, {"ギュ", "gyu"}, {"ギョ", "gyo"},
      {"シャ", "sha"}, {"シュ", "shu"}, {"ショ", "sho"}, {"シェ", "she"},
      {"ジャ", "ja"},  {"ジュ", "ju"},  {"ジョ", "jo"},  {"ジェ", "je"},
      {"チャ", "cha"}, {"チュ", "chu"}, {"チョ", "cho"}, {"チェ", "che"},
      {"ヂャ", "ja"},  {"ヂュ", "ju"},  {"ヂョ", "jo"},
      {"ニャ", "nya"}, {"ニュ", "nyu"}, {"ニョ", "nyo"},
      {"ヒャ", "hya"}, {"ヒュ", "hyu"}, {"ヒョ", "hyo"},
      {"ビャ", "bya"}, {"ビュ", "byu"}, {"ビョ", "byo"},
      {"ピャ", "pya"}, {"ピュ", "pyu"}, {"ピョ", "pyo"},
      {"ミャ", "mya"}, {"ミュ", "myu"}, {"ミョ", "myo"},
      {"リャ", "rya"}, {"リュ", "ryu"}, {"リョ", "ryo"},
      {"ファ", "fa"},  {"フィ", "fi"},  {"フェ", "fe"},  {"フォ", "fo"},  {"フュ", "fyu"},
      {"ティ", "ti"},  {"ディ", "di"},  {"トゥ", "tu"},  {"ドゥ", "du"},  {"デュ", "dyu"},
      {"ウィ", "wi"},  {"ウェ", "we"},  {"ウォ", "wo"},
      {"ヴァ", "va"},  {"ヴィ", "vi"},  {"ヴェ", "ve"},  {"ヴォ", "vo"},
      {"ツァ", "tsa"}, {"ツィ", "tsi"}, {"ツェ", "tse"}, {"ツォ", "tso"},
      {"イェ", "ye"},  {"クァ", "kwa"}, {"グァ", "gwa"},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'i' || c == 'u' || c == 'e' || c == 'o'; }

}  // namespace

std::string japanese_reading(std::string_view text, const G2pLexicon& reading_lexicon) {
  const auto cps = code_points(nfkc(text));
  const std::size_t max_len = reading_lexicon.max_key_code_points();
  std::string out;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t take = 0;
    const std::string* reading = nullptr;
    std::string cur;
    for (std::size_t len = 1; len <= max_len && i + len <= cps.size(); ++len) {
      cur += cps[i + len - 1];
      if (const std::string* r = reading_lexicon.find(cur)) {
        take = len;
        reading = r;
      }
    }
    if (reading) {
      out += *reading;
      i += take;
    } else {
      out += to_katakana(cps[i]);
      ++i;
    }
  }
  return out;
}

std::string romanize_kana(std::string_view kana) {
  std::vector<std::string> cps;
  for (const auto& cp : code_points(kana)) cps.push_back(to_katakana(cp));
  const auto& table = kana_table();
  std::string out;
  bool pending_sokuon = false;
  auto emit = [&](const std::string& romaji) {
    if (pending_sokuon) {
      if (romaji.rfind("ch", 0) == 0) {
        out.push_back('t');
      } else if (!romaji.empty() && !is_vowel(romaji[0])) {
        out.push_back(romaji[0]);
      }
      pending_sokuon = false;
    }
    out += romaji;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] == "ッ") {
      pending_sokuon = true;
      continue;
    }
    if (cps[i] == "ー") {
      for (auto it = out.rbegin(); it != out.rend(); ++it) {
        if (is_vowel(*it)) {
          out.push_back(*it);
          break;
        }
      }
      continue;
    }
    if (i + 1 < cps.size()) {
      auto it = table.find(cps[i] + cps[i + 1]);
      if (it != table.end()) {
        emit(it->second);
        ++i;
        continue;
      }
    }
    auto it = table.find(cps[i]);
    if (it != table.end()) {
      emit(it->second);
    } else {
      pending_sokuon = false;
      out += cps[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string PhoneticCache::key(PhoneticScheme scheme, Language language, std::string_view text) {
  return content_key({to_string(scheme), to_string(language), text});
}

std::optional<PhoneticText> PhoneticCache::get(PhoneticScheme scheme, Language language,
                                               std::string_view text) const {
  auto hit = cache_.get(key(scheme, language, text));
  if (!hit) return std::nullopt;
  return hit->get<PhoneticText>();
}

void PhoneticCache::put(const PhoneticText& value) {
  cache_.put(key(value.scheme, value.language, value.source_text), json(value));
}

std::string trim_llm_text(std::string_view response) {
  std::string s = trim(response);
  if (s.rfind("```", 0) == 0) {
    const auto nl = s.find('\n');
    s = nl == std::string::npos ? s.substr(3) : s.substr(nl + 1);
    const auto close = s.rfind("```");
    if (close != std::string::npos) s = s.substr(0, close);
    s = trim(s);
  }
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"\"", "\""}, {"'", "'"}, {"`", "`"}, {"“", "”"}, {"‘", "’"},
      {"「", "」"}, {"『", "』"}};
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [open, close] : pairs) {
      if (s.size() >= open.size() + close.size() && s.rfind(open, 0) == 0 &&
          s.compare(s.size() - close.size(), close.size(), close) == 0) {
        s = trim(s.substr(open.size(), s.size() - open.size() - close.size()));
        changed = true;
      }
    }
  }
  return s;
}

namespace {

PhoneticText llm_convert(PhoneticScheme scheme, std::string_view text, Language language, ChatClient& llm,
                         PhoneticCache& cache, const PromptCatalog& catalog, const std::string& model_id) {
  if (trim(text).empty()) throw PreconditionError("phonetic conversion of empty text");
  if (auto hit = cache.get(scheme, language, text)) return *hit;
  const std::string lang = casefold(to_string(language));
  const std::string template_id = (scheme == PhoneticScheme::kLsp ? "lsp." : "ipa.") + lang;
  ChatExchange ex;
  ex.messages.push_back({"user", catalog.get(template_id).render({{"text", std::string(text)}})});
  ex.temperature = 0.0;
  ex.model_id = model_id;
  ex.task = scheme == PhoneticScheme::kLsp ? "lsp" : "ipa";
  ex.vars = {{"text", std::string(text)}, {"language", std::string(to_string(language))}};
  std::string converted = trim_llm_text(llm.chat(ex));
  if (converted.empty()) {
    throw EmptyConversion(std::string(to_string(scheme)) + " conversion returned nothing for: " +
                          std::string(text));
  }
  PhoneticText out{scheme, language, std::move(converted), std::string(text)};
  cache.put(out);
  return out;
}

}  // namespace

PhoneticText to_lsp(std::string_view text, Language language, ChatClient& llm, PhoneticCache& cache,
                    const PromptCatalog& catalog, const std::string& model_id) {
  return llm_convert(PhoneticScheme::kLsp, text, language, llm, cache, catalog, model_id);
}

PhoneticText to_ipa_llm(std::string_view text, Language language, ChatClient& llm, PhoneticCache& cache,
                        const PromptCatalog& catalog, const std::string& model_id) {
  return llm_convert(PhoneticScheme::kIpa, text, language, llm, cache, catalog, model_id);
}

PhoneticConverter::PhoneticConverter(PhoneticResources resources) : res_(std::move(resources)) {
  if (!res_.cache) res_.cache = std::make_shared<PhoneticCache>();
}

PhoneticText PhoneticConverter::convert(PhoneticScheme scheme, Language language, std::string_view text) {
  auto need_llm = [&]() -> ChatClient& {
    if (!res_.llm || !res_.catalog) {
      throw PreconditionError(std::string(to_string(scheme)) + "/" + std::string(to_string(language)) +
                              " conversion needs an LLM client and prompt catalog");
    }
    return *res_.llm;
  };
  switch (scheme) {
    case PhoneticScheme::kIpa:
      if (language == Language::kEn) {
        if (!res_.en_ipa) throw PreconditionError("EN IPA conversion needs an IPA lexicon");
        return to_ipa(text, *res_.en_ipa);
      }
      return to_ipa_llm(text, language, need_llm(), *res_.cache, *res_.catalog, res_.model_id);
    case PhoneticScheme::kTtsPhoneme: {
      const auto& lex = language == Language::kEn ? res_.en_arpabet : res_.ja_reading;
      if (!lex) throw PreconditionError("TTS-phoneme conversion needs a lexicon for " +
                                        std::string(to_string(language)));
      return to_tts_phoneme(text, language, *lex);
    }
    case PhoneticScheme::kLsp:
      return to_lsp(text, language, need_llm(), *res_.cache, *res_.catalog, res_.model_id);
  }
  throw PreconditionError("unsupported phonetic scheme");
}

}  // namespace gerkit
