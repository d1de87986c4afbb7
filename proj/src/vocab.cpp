#include "c2sw/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "c2sw/error.hpp"
#include "c2sw/utf8.hpp"

namespace c2sw {

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries) {
  Vocabulary v;
  v.entries_ = std::move(entries);
  v.special_.resize(v.entries_.size());
  for (TokenId id = 0; id < v.entries_.size(); ++id) {
    auto [it, inserted] = v.id_of_.emplace(v.entries_[id], id);
    if (!inserted) {
      throw Error("duplicate vocabulary entry '" + v.entries_[id] + "' on lines " +
                  std::to_string(it->second + 1) + " and " + std::to_string(id + 1));
    }
    v.special_[id] = looks_special(v.entries_[id]);
  }
  auto unk = v.id_of_.find(std::string(kUnkToken));
  if (unk == v.id_of_.end()) throw Error("vocabulary has no [UNK] entry");
  v.unk_id_ = unk->second;
  return v;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::vector<std::string> entries;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    entries.emplace_back(line);
    start = end + 1;
  }
  return from_entries(std::move(entries));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vocabulary file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = id_of_.find(std::string(token));
  if (it == id_of_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::looks_special(std::string_view token) {
  if (token.size() < 3 || token.front() != '[' || token.back() != ']') return false;
  return std::none_of(token.begin(), token.end(),
                      [](char c) { return c == ' ' || c == '\t'; });
}

std::vector<TokenId> Vocabulary::regular_ids() const {
  std::vector<TokenId> ids;
  for (TokenId id = 0; id < entries_.size(); ++id) {
    if (!special_[id]) ids.push_back(id);
  }
  return ids;
}

std::vector<std::string> tokenize_word(const Vocabulary& vocab, std::string_view word) {
  const std::u32string chars = utf8::decode(word);
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < chars.size()) {
    std::string match;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string candidate = utf8::encode(std::u32string_view(chars).substr(start, end - start));
      if (start > 0) candidate.insert(0, kContinuationMarker);
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
    }
    if (match.empty()) return {std::string(kUnkToken)};
    pieces.push_back(std::move(match));
    start = end;
  }
  if (pieces.empty()) return {std::string(kUnkToken)};
  return pieces;
}

std::vector<std::string> whitespace_split(std::string_view sentence) {
  std::vector<std::string> words;
  std::u32string current;
  for (char32_t cp : utf8::decode(sentence)) {
    if (utf8::is_space(cp)) {
      if (!current.empty()) words.push_back(utf8::encode(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) words.push_back(utf8::encode(current));
  return words;
}

CharAlphabet::CharAlphabet(std::u32string ordinary) : ordinary_(std::move(ordinary)) {
  std::sort(ordinary_.begin(), ordinary_.end());
  ordinary_.erase(std::unique(ordinary_.begin(), ordinary_.end()), ordinary_.end());
  for (std::size_t i = 0; i < ordinary_.size(); ++i) {
    index_.emplace(ordinary_[i], static_cast<int>(i) + kFirstOrdinary);
  }
}

CharAlphabet CharAlphabet::from_vocabulary(const Vocabulary& vocab, std::u32string_view extra) {
  std::set<char32_t> chars(extra.begin(), extra.end());
  chars.insert(U'#');
  for (const auto& entry : vocab.entries()) {
    for (char32_t cp : utf8::decode(entry)) chars.insert(cp);
  }
  return CharAlphabet(std::u32string(chars.begin(), chars.end()));
}

int CharAlphabet::index_of(char32_t cp) const {
  auto it = index_.find(cp);
  return it == index_.end() ? kUnkChar : it->second;
}

std::string CharAlphabet::label(int index) const {
  if (index == kUnkChar) return "[UNK_CHAR]";
  if (index == kMaskChar) return "[MASK_CHAR]";
  return utf8::encode(ordinary_.at(static_cast<std::size_t>(index - kFirstOrdinary)));
}

CharSequence char_sequence(std::string_view token, bool is_full_word, const CharAlphabet& alphabet,
                           std::size_t max_chars, bool marker_on_full_words) {
  CharSequence seq;
  seq.token = std::string(token);
  seq.is_full_word = is_full_word;
  std::u32string chars;
  if (is_full_word && marker_on_full_words) chars = utf8::decode(kContinuationMarker);
  chars += utf8::decode(token);
  if (chars.size() > max_chars) chars.resize(max_chars);
  seq.chars.reserve(chars.size());
  for (char32_t cp : chars) seq.chars.push_back(alphabet.index_of(cp));
  return seq;
}

}  // namespace c2sw
