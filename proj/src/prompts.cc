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

#include "gerkit/prompts.h"

#include <regex>
#include <sstream>

#include "gerkit/error.h"
#include "gerkit/phonetics.h"
#include "gerkit/store.h"

namespace gerkit {
namespace {

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Calls f(begin, end, name) for each {name} in body.
template <typename F>
void scan_placeholders(const std::string& body, F&& f) {
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    std::size_t end = pos + 1;
    while (end < body.size() && is_name_char(body[end])) ++end;
    if (end < body.size() && body[end] == '}' && end > pos + 1) {
      f(pos, end + 1, body.substr(pos + 1, end - pos - 1));
      pos = end + 1;
    } else {
      ++pos;
    }
  }
}

}  // namespace

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> out;
  scan_placeholders(body, [&](std::size_t, std::size_t, const std::string& name) { out.insert(name); });
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  for (const auto& name : required) {
    auto it = bindings.find(name);
    if (it == bindings.end() || it->second.empty()) {
      throw TemplateError("template " + id + ": placeholder {" + name + "} is not bound");
    }
  }
  std::string out;
  std::size_t last = 0;
  scan_placeholders(body, [&](std::size_t b, std::size_t e, const std::string& name) {
    out.append(body, last, b - last);
    auto it = bindings.find(name);
    if (it != bindings.end()) out += it->second;
    last = e;
  });
  out.append(body, last, std::string::npos);
  return out;
}

void PromptCatalog::add(PromptTemplate t) {
  const auto names = t.placeholders();
  for (const auto& r : t.required) {
    if (!names.count(r)) throw TemplateError("template " + t.id + " requires {" + r + "} but never uses it");
  }
  templates_[t.id] = std::move(t);
}

const PromptTemplate& PromptCatalog::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw TemplateError("unknown prompt template: " + id);
  return it->second;
}

PromptCatalog PromptCatalog::builtin() {
  static const PromptCatalog catalog = [] {
    PromptCatalog c;
    c.version_ = "1";
    const Language en = Language::kEn;
    const Language ja = Language::kJa;
    c.add({"transcripts.en", en,
           "Provide {count} different English sentences in various contexts that include the term "
           "{word}{domain_clause}. Write one sentence per line.",
           {"count", "word"}});
    c.add({"transcripts.en.single", en,
           "Provide an English sentence that includes the term {word}{domain_clause}. "
           "Write it on a single line.",
           {"word"}});
    c.add({"transcripts.ja", ja,
           "「{word}」{domain_clause}という用語を含む、さまざまな文脈の異なる日本語の文を{count}個"
           "作成してください。1行に1文ずつ書いてください。",
           {"count", "word"}});
    c.add({"domain_clause.en", en, ", which is a {domain_hint}", {"domain_hint"}});
    c.add({"domain_clause.ja", ja, "（{domain_hint}）", {"domain_hint"}});
    c.add({"extract.en", en,
           "Extract highly complex words for recognition, including technical terms, names of "
           "people, and names of places. List one word per line with no other text.\n\n{text}",
           {"text"}});
    c.add({"extract.ja", ja,
           "Extract highly complex words for recognition, including technical terms, names of "
           "people, and names of places, from the following Japanese text. List one word per line "
           "with no other text.\n\n{text}",
           {"text"}});
    c.add({"lsp.en", en, "Convert the English text to simplified pronunciation.\n\n{text}", {"text"}});
    c.add({"lsp.ja", ja, "Convert the Japanese text to simplified Kana-like pronunciation.\n\n{text}",
           {"text"}});
    c.add({"ipa.ja", ja,
           "Convert the Japanese text to the International Phonetic Alphabet (IPA). Reply with the "
           "IPA only.\n\n{text}",
           {"text"}});
    c.add({"ger.system.en", en,
           "You correct errors in English automatic speech recognition (ASR) transcripts. You are "
           "given ranked ASR hypotheses, best first, and possibly the pronunciation of the first "
           "hypothesis. Reply with the corrected transcript only.",
           {}});
    c.add({"ger.system.ja", ja,
           "You correct errors in Japanese automatic speech recognition (ASR) transcripts. You are "
           "given ranked ASR hypotheses, best first, and possibly the pronunciation of the first "
           "hypothesis. Reply with the corrected transcript only.",
           {}});
    c.add({"ger.user", en, "Hypotheses:\n{hypotheses}", {"hypotheses"}});
    c.add({"ger.phonetic", en, "Pronunciation: {phonetic}", {"phonetic"}});
    return c;
  }();
  return catalog;
}

nlohmann::json PromptCatalog::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, t] : templates_) {
    arr.push_back({{"id", t.id},
                   {"language", to_string(t.language)},
                   {"body", t.body},
                   {"required", std::vector<std::string>(t.required.begin(), t.required.end())}});
  }
  return {{"version", version_}, {"templates", arr}};
}

PromptCatalog PromptCatalog::from_json(const nlohmann::json& j) {
  PromptCatalog c;
  try {
    c.version_ = j.at("version").get<std::string>();
    for (const auto& t : j.at("templates")) {
      auto req = t.value("required", std::vector<std::string>{});
      c.add({t.at("id").get<std::string>(), parse_language(t.at("language").get<std::string>()),
             t.at("body").get<std::string>(), std::set<std::string>(req.begin(), req.end())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(std::string("malformed prompt catalog: ") + e.what());
  }
  return c;
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(path.string() + ": " + e.what());
  }
}

std::string build_transcript_gen_prompt(std::string_view word, int count, Language language,
                                        const std::optional<std::string>& domain_hint,
                                        const PromptCatalog& catalog) {
  if (count < 1) throw PreconditionError("transcript count must be >= 1");
  if (trim(word).empty()) throw PreconditionError("rare word is empty");
  const std::string lang = casefold(to_string(language));
  std::string clause;
  if (domain_hint && !trim(*domain_hint).empty()) {
    clause = catalog.get("domain_clause." + lang).render({{"domain_hint", trim(*domain_hint)}});
  }
  std::string id = "transcripts." + lang;
  if (language == Language::kEn && count == 1) id += ".single";
  return catalog.get(id).render(
      {{"count", std::to_string(count)}, {"word", trim(word)}, {"domain_clause", clause}});
}

std::string build_extraction_prompt(std::string_view corpus_text, Language language,
                                    const PromptCatalog& catalog) {
  return catalog.get("extract." + casefold(to_string(language))).render({{"text", std::string(corpus_text)}});
}

std::string strip_list_marker(std::string_view line) {
  static const std::regex marker(R"(^\s*(?:\(?\d+[.):]|[-*]|•)\s*)");
  std::string s(line);
  std::smatch m;
  if (std::regex_search(s, m, marker)) s = s.substr(static_cast<std::size_t>(m.length(0)));
  return trim(s);
}

bool contains_rare_word(std::string_view text, std::string_view word, Language language) {
  const std::string w = normalize_entry(word, language);
  if (w.empty()) return false;
  const std::string t = normalize_entry(text, language);
  if (language == Language::kJa) return remove_whitespace(t).find(remove_whitespace(w)) != std::string::npos;
  const auto wt = split_whitespace(w);
  const auto tt = split_whitespace(t);
  if (wt.size() > tt.size()) return false;
  for (std::size_t i = 0; i + wt.size() <= tt.size(); ++i) {
    if (std::equal(wt.begin(), wt.end(), tt.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

std::vector<std::string> parse_generated_transcripts(std::string_view llm_response, int expected_count,
                                                     std::string_view word, Language language) {
  if (expected_count < 1) throw PreconditionError("expected_count must be >= 1");
  std::vector<std::string> items;
  std::istringstream in{std::string(llm_response)};
  std::string line;
  while (std::getline(in, line)) {
    std::string item = trim_llm_text(strip_list_marker(line));
    if (item.empty()) continue;
    if (!contains_rare_word(item, word, language)) continue;
    items.push_back(std::move(item));
    if (static_cast<int>(items.size()) == expected_count) return items;
  }
  const std::size_t found = items.size();
  throw ShortGeneration(found, std::move(items));
}

void GerRequest::validate() const {
  if (nbest.empty()) throw PreconditionError("GER request needs at least one hypothesis");
}

std::vector<ChatMessage> build_ger_messages(const GerRequest& request, const PromptCatalog& catalog) {
  request.validate();
  std::string block;
  for (std::size_t i = 0; i < request.nbest.size(); ++i) {
    if (i) block.push_back('\n');
    block += std::to_string(i + 1) + ". " + request.nbest[i];
  }
  std::string user = catalog.get("ger.user").render({{"hypotheses", block}});
  if (request.phonetic) {
    user += "\n" + catalog.get("ger.phonetic").render({{"phonetic", request.phonetic->text}});
  }
  const std::string system = catalog.get("ger.system." + casefold(to_string(request.language))).render({});
  return {{"system", system}, {"user", user}};
}

std::string parse_ger_response(std::string_view llm_response) {
  static const std::regex label(
      R"(^\s*(?:corrected(?:\s+(?:transcript|text|transcription|sentence))?|correction|output|answer|transcript|transcription|result|修正後|訂正)\s*(?::|：)\s*)",
      std::regex::icase);
  const std::string body = trim_llm_text(llm_response);
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    std::smatch m;
    if (std::regex_search(s, m, label)) s = s.substr(static_cast<std::size_t>(m.length(0)));
    s = trim_llm_text(s);
    if (!s.empty()) return s;
  }
  throw EmptyCorrection("empty correction");
}

}  // namespace gerkit
