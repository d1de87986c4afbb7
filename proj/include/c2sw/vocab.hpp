#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace c2sw {

inline constexpr std::string_view kContinuationMarker = "##";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kMaskToken = "[MASK]";

using TokenId = std::size_t;

// Ordered subword list; the line index of the vocabulary file is the token id.
class Vocabulary {
 public:
  // Rejects duplicates and requires [UNK].
  static Vocabulary from_entries(std::vector<std::string> entries);
  // One token per line, LF endings (a trailing CR is stripped).
  static Vocabulary from_text(std::string_view text);
  static Vocabulary load(const std::filesystem::path& path);

  std::size_t size() const { return entries_.size(); }
  const std::string& token(TokenId id) const { return entries_.at(id); }
  const std::vector<std::string>& entries() const { return entries_; }
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  TokenId unk_id() const { return unk_id_; }

  // Bracketed entries such as [UNK], [MASK], [PAD], [CLS], [SEP], [unused7].
  bool is_special(TokenId id) const { return special_.at(id); }
  static bool looks_special(std::string_view token);
  // Ids of all non-special entries, ascending.
  std::vector<TokenId> regular_ids() const;

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId> id_of_;
  std::vector<bool> special_;
  TokenId unk_id_ = 0;
};

// Greedy longest-prefix segmentation. Pieces after the first are looked up
// with the "##" prefix; when no prefix matches the result is {"[UNK]"}.
std::vector<std::string> tokenize_word(const Vocabulary& vocab, std::string_view word);

// Splits on runs of Unicode whitespace. Every returned word is a full word.
std::vector<std::string> whitespace_split(std::string_view sentence);

// Character inventory of the vocabulary. Index 0 is the unknown character and
// index 1 the mask character; ordinary characters follow in code point order.
class CharAlphabet {
 public:
  static constexpr int kUnkChar = 0;
  static constexpr int kMaskChar = 1;
  static constexpr int kFirstOrdinary = 2;

  CharAlphabet() = default;
  explicit CharAlphabet(std::u32string ordinary);

  // All characters of all entries plus '#' and the given extras.
  static CharAlphabet from_vocabulary(const Vocabulary& vocab, std::u32string_view extra = {});

  std::size_t size() const { return ordinary_.size() + kFirstOrdinary; }
  std::size_t ordinary_count() const { return ordinary_.size(); }
  const std::u32string& ordinary() const { return ordinary_; }
  int index_of(char32_t cp) const;
  bool contains(char32_t cp) const { return index_.count(cp) != 0; }
  // Label for an index, used by attention dumps.
  std::string label(int index) const;

  bool operator==(const CharAlphabet& other) const { return ordinary_ == other.ordinary_; }

 private:
  std::u32string ordinary_;
  std::unordered_map<char32_t, int> index_;
};

struct CharSequence {
  std::string token;
  std::vector<int> chars;
  bool is_full_word = false;
};

inline constexpr std::size_t kDefaultMaxChars = 32;

// Maps a token to alphabet indices. Full words get the "##" marker prepended
// when marker_on_full_words is set; the result is truncated to max_chars.
CharSequence char_sequence(std::string_view token, bool is_full_word, const CharAlphabet& alphabet,
                           std::size_t max_chars = kDefaultMaxChars,
                           bool marker_on_full_words = true);

}  // namespace c2sw
