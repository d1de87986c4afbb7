#include <map>
#include <random>
#include <set>

#include "c2sw/error.hpp"
#include "c2sw/utf8.hpp"
#include "c2sw/vocab.hpp"
#include "doctest.h"

using namespace c2sw;

namespace {

std::string strip_markers(const std::vector<std::string>& pieces) {
  std::string out;
  for (const auto& p : pieces) out += p.rfind("##", 0) == 0 ? p.substr(2) : p;
  return out;
}

// Longest vocabulary prefix of word, by trying every prefix length.
std::string longest_prefix_oracle(const Vocabulary& v, const std::string& word) {
  std::string best;
  for (std::size_t n = 1; n <= word.size(); ++n) {
    const std::string prefix = word.substr(0, n);
    if (v.contains(prefix)) best = prefix;
  }
  return best;
}

std::string random_string(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> letter('a', 'c');
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) s.push_back(static_cast<char>(letter(rng)));
  return s;
}

}  // namespace

TEST_SUITE("vocab") {
  TEST_CASE("load_vocabulary") {
    const Vocabulary v = Vocabulary::from_text("a\n##b\n[UNK]\ncd\n");
    CHECK(v.size() == 4);
    CHECK(*v.find("##b") == 1);
    CHECK(v.unk_id() == 2);
    CHECK(v.is_special(2));
    CHECK_FALSE(v.is_special(0));
    CHECK(v.regular_ids() == std::vector<TokenId>{0, 1, 3});

    CHECK_THROWS_WITH_AS(Vocabulary::from_text("a\n[UNK]\na\n"),
                         "duplicate vocabulary entry 'a' on lines 1 and 3", Error);
    CHECK_THROWS_WITH_AS(Vocabulary::from_text("a\nb\n"), "vocabulary has no [UNK] entry", Error);
    // CRLF files load the same ids.
    CHECK(*Vocabulary::from_text("x\r\n[UNK]\r\n").find("[UNK]") == 1);
  }

  TEST_CASE("tokenize_word") {
    const Vocabulary v = Vocabulary::from_entries({"un", "##able", "able", "[UNK]", "hello"});
    CHECK(tokenize_word(v, "unable") == std::vector<std::string>{"un", "##able"});
    CHECK(tokenize_word(v, "hello") == std::vector<std::string>{"hello"});
    CHECK(tokenize_word(v, "xyz") == std::vector<std::string>{"[UNK]"});
    // A failure midway still yields the single [UNK].
    CHECK(tokenize_word(v, "unabl") == std::vector<std::string>{"[UNK]"});

    const Vocabulary fig =
        Vocabulary::from_entries({"[UNK]", "nan", "##ote", "##chn", "##ology", "businesses"});
    CHECK(tokenize_word(fig, "nanotechnology") ==
          std::vector<std::string>{"nan", "##ote", "##chn", "##ology"});
    // Greedy commits to the longest prefix even when it leads to [UNK].
    const Vocabulary greedy = Vocabulary::from_entries({"[UNK]", "nan", "nano", "##ote", "##chn"});
    CHECK(tokenize_word(greedy, "nanote") == std::vector<std::string>{"[UNK]"});
  }

  TEST_CASE("tokenize_word round trip and greedy property on random vocabularies") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::set<std::string> entries{"[UNK]"};
      for (int i = 0; i < 12; ++i) {
        const std::string s = random_string(rng, 1, 3);
        entries.insert(s);
        entries.insert("##" + s);
      }
      const Vocabulary v = Vocabulary::from_entries({entries.begin(), entries.end()});
      for (int w = 0; w < 20; ++w) {
        const std::string word = random_string(rng, 1, 8);
        const auto pieces = tokenize_word(v, word);
        const bool unk = pieces == std::vector<std::string>{"[UNK]"};
        CHECK((unk || strip_markers(pieces) == word));
        if (!unk) CHECK(pieces.front() == longest_prefix_oracle(v, word));
      }
    }
  }

  TEST_CASE("tokenize_word respects multibyte characters") {
    const Vocabulary v = Vocabulary::from_entries({"[UNK]", "qu", "##é", "qué"});
    CHECK(tokenize_word(v, "qué") == std::vector<std::string>{"qué"});
    const Vocabulary pieces = Vocabulary::from_entries({"[UNK]", "qu", "##é"});
    CHECK(tokenize_word(pieces, "qué") == std::vector<std::string>{"qu", "##é"});
  }

  TEST_CASE("whitespace_split") {
    CHECK(whitespace_split("a  b") == std::vector<std::string>{"a", "b"});
    CHECK(whitespace_split("").empty());
    CHECK(whitespace_split("hola qué tal").size() == 3);
    CHECK(whitespace_split("\tx　y \n") == std::vector<std::string>{"x", "y"});
  }

  TEST_CASE("char_sequence") {
    const Vocabulary v = Vocabulary::from_entries({"[UNK]", "cat", "##ing"});
    const CharAlphabet alpha = CharAlphabet::from_vocabulary(v);
    auto indices = [&](std::string_view s) {
      std::vector<int> out;
      for (char32_t c : utf8::decode(s)) out.push_back(alpha.index_of(c));
      return out;
    };
    CHECK(char_sequence("cat", true, alpha).chars == indices("##cat"));
    CHECK(char_sequence("cat", false, alpha).chars == indices("cat"));
    CHECK(char_sequence("##ing", false, alpha).chars == indices("##ing"));
    CHECK(char_sequence("cat", true, alpha, 32, false).chars == indices("cat"));

    const auto unk = char_sequence("caz", false, alpha);
    CHECK(unk.chars[2] == CharAlphabet::kUnkChar);
    CHECK(char_sequence("catcatcat", true, alpha, 4).chars.size() == 4);

    for (const auto& e : v.entries()) {
      for (int c : char_sequence(e, false, alpha).chars) CHECK(c != CharAlphabet::kUnkChar);
    }
    CHECK_FALSE(alpha.contains(U'\0'));
    CHECK(alpha.label(CharAlphabet::kMaskChar) == "[MASK_CHAR]");
  }

  TEST_CASE("char_sequence is injective away from the marker collision") {
    // With the marker rule, ("w", full word) and ("##w", piece) coincide by
    // construction; the property covers tokens without a leading "##".
    std::mt19937_64 rng(9);
    const Vocabulary v = Vocabulary::from_entries({"[UNK]", "abc"});
    const CharAlphabet alpha = CharAlphabet::from_vocabulary(v);
    std::map<std::vector<int>, std::pair<std::string, bool>> seen;
    for (int i = 0; i < 2000; ++i) {
      const std::string token = random_string(rng, 1, 6);
      const bool full = (i % 2) == 0;
      const auto seq = char_sequence(token, full, alpha);
      auto [it, inserted] = seen.emplace(seq.chars, std::make_pair(token, full));
      if (!inserted) CHECK(it->second == std::make_pair(token, full));
    }
  }
}
