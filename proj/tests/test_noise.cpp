#include <algorithm>
#include <map>
#include <set>

#include "c2sw/noise.hpp"
#include "c2sw/utf8.hpp"
#include "doctest.h"
#include "support/toy.hpp"

using namespace c2sw;

namespace {

std::size_t levenshtein(const std::u32string& a, const std::u32string& b, bool transpositions) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (transpositions && i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
      }
    }
  }
  return d[a.size()][b.size()];
}

std::size_t distance(std::string_view a, std::string_view b, bool transpositions = false) {
  return levenshtein(utf8::decode(a), utf8::decode(b), transpositions);
}

std::string random_word(Rng& rng, std::size_t len) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJ";
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(letters[rng() % letters.size()]);
  return w;
}

}  // namespace

TEST_SUITE("noise") {
  TEST_CASE("apply_edit examples") {
    CHECK(apply_edit("hello", {NoiseOp::kSwap, 1}) == "hlelo");
    CHECK(apply_edit("house", {NoiseOp::kDrop, 2}) == "hose");
    CHECK(apply_edit("Hello", {NoiseOp::kToggle, 0}) == "hello");
    CHECK(apply_edit("books", {NoiseOp::kRepeat, 1}) == "boooks");
    CHECK(apply_edit("hello", {NoiseOp::kPunctuation, 2, U'-'}) == "he-llo");
    CHECK(apply_edit("hello", {NoiseOp::kPunctuation, 5, U'.'}) == "hello.");
    CHECK(apply_edit("##hello", {NoiseOp::kDrop, 0}) == "##ello");
    CHECK(apply_edit("##hello", {NoiseOp::kPunctuation, 0, U'#'}) == "###hello");
    CHECK_THROWS_AS(apply_edit("hello", {NoiseOp::kSwap, 4}), NoiseError);
    CHECK_THROWS_AS(apply_edit("hello", {NoiseOp::kDrop, 5}), NoiseError);
  }

  TEST_CASE("mistype draws from the layout's neighbor set") {
    NoiseConfig config = toy::full_noise();
    config.layouts[0].neighbors[U'o'] = U"ipkl";
    std::set<std::string> seen;
    Rng rng(5);
    for (int i = 0; i < 400; ++i) {
      NoiseEdit edit = sample_edit("sport", NoiseOp::kMistype, rng, config);
      if (edit.position != 2) continue;
      seen.insert(apply_edit("sport", edit));
    }
    CHECK(seen == std::set<std::string>{"spirt", "spprt", "spkrt", "splrt"});
  }

  TEST_CASE("mistype layout selection and fallback") {
    NoiseConfig config;
    KeyboardLayout a{"a", {{U'x', U"y"}}};
    KeyboardLayout b{"b", {{U'x', U"z"}, {U'q', U"w"}}};
    config.layouts = {a, b};
    Rng rng(2);
    std::map<std::string, int> counts;
    for (int i = 0; i < 4000; ++i) {
      NoiseEdit e = sample_edit("xxxxx", NoiseOp::kMistype, rng, config);
      counts[utf8::encode(e.replacement)]++;
    }
    CHECK(counts.size() == 2);
    CHECK(std::abs(counts["y"] - 2000) < 150);
    // '5' is on no layout: substitute from {x, y, z, q, w}.
    std::set<char32_t> fallback;
    for (int i = 0; i < 500; ++i) {
      fallback.insert(sample_edit("55555", NoiseOp::kMistype, rng, config).replacement);
    }
    CHECK(fallback == std::set<char32_t>{U'q', U'w', U'x', U'y', U'z'});
  }

  TEST_CASE("rejections") {
    const NoiseConfig config = toy::full_noise();
    Rng rng(1);
    for (NoiseOp op : kAllNoiseOps) {
      CHECK_THROWS_AS(apply_op("word", op, rng, config), NoiseError);
      CHECK_THROWS_AS(apply_op("##word", op, rng, config), NoiseError);
      CHECK_THROWS_AS(apply_op("[MASK]", op, rng, config), NoiseError);
      CHECK_NOTHROW(apply_op("##words", op, rng, config));
    }
    CHECK_THROWS_AS(apply_op("12345", NoiseOp::kToggle, rng, config), NoiseError);
    CHECK_THROWS_AS(apply_op("aaaaa", NoiseOp::kSwap, rng, config), NoiseError);
  }

  TEST_CASE("length and edit laws, marker untouched") {
    const NoiseConfig config = toy::full_noise();
    Rng rng(17);
    for (int trial = 0; trial < 3000; ++trial) {
      const bool marked = trial % 3 == 0;
      const std::string word = (marked ? "##" : "") + random_word(rng, 5 + rng() % 8);
      const NoiseOp op = kAllNoiseOps[trial % kAllNoiseOps.size()];
      std::string out;
      try {
        out = apply_op(word, op, rng, config);
      } catch (const NoiseError&) {
        CHECK(op == NoiseOp::kSwap);  // only possible for runs like "aaaaa"
        continue;
      }
      CAPTURE(word);
      CAPTURE(out);
      CHECK(out != word);
      const auto before = utf8::decode(word).size(), after = utf8::decode(out).size();
      switch (op) {
        case NoiseOp::kMistype:
        case NoiseOp::kToggle:
          CHECK(after == before);
          CHECK(distance(word, out) == 1);
          break;
        case NoiseOp::kSwap:
          CHECK(after == before);
          CHECK(distance(word, out, true) == 1);
          break;
        case NoiseOp::kDrop:
          CHECK(after + 1 == before);
          CHECK(distance(word, out) == 1);
          break;
        case NoiseOp::kRepeat:
        case NoiseOp::kPunctuation:
          CHECK(after == before + 1);
          CHECK(distance(word, out) == 1);
          break;
      }
      if (marked) CHECK(out.substr(0, 2) == "##");
    }
  }

  TEST_CASE("sample_noise") {
    Rng rng(3);
    const NoiseConfig off = disabled_noise();
    for (int i = 0; i < 200; ++i) {
      const std::string w = random_word(rng, 1 + rng() % 12);
      CHECK(sample_noisy(w, rng, off) == w);
    }
    const NoiseConfig always = toy::full_noise(1.0);
    for (int i = 0; i < 500; ++i) {
      const std::string w = random_word(rng, 4);
      CHECK(sample_noisy(w, rng, always) == w);
      CHECK(sample_noisy("##" + w, rng, always) == "##" + w);
    }
    CHECK(sample_noisy("[MASK]", rng, always) == "[MASK]");

    const NoiseConfig half = toy::full_noise(0.5);
    int changed = 0;
    for (int i = 0; i < 10000; ++i) changed += sample_noisy("international", rng, half) != "international";
    CHECK(std::abs(changed / 10000.0 - 0.5) <= 0.02);
  }

  TEST_CASE("ops are chosen uniformly") {
    const NoiseConfig config = toy::full_noise(1.0);
    Rng rng(11);
    std::map<NoiseOp, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const NoiseOutcome o = sample_noise("keyboards", rng, config);
      REQUIRE(o.op.has_value());
      counts[*o.op]++;
    }
    const double expected = draws / 6.0;
    double chi2 = 0.0;
    for (NoiseOp op : kAllNoiseOps) chi2 += (counts[op] - expected) * (counts[op] - expected) / expected;
    MESSAGE("chi-square " << chi2);
    CHECK(chi2 < 15.086);  // df = 5, p = 0.01
  }

  TEST_CASE("determinism") {
    const NoiseConfig config = toy::full_noise();
    Rng gen(4);
    std::vector<std::string> corpus;
    for (int i = 0; i < 300; ++i) corpus.push_back(random_word(gen, 3 + gen() % 9));
    auto run = [&](std::uint64_t seed) {
      Rng rng(seed);
      std::vector<std::string> out;
      for (const auto& w : corpus) out.push_back(sample_noisy(w, rng, config));
      return out;
    };
    CHECK(run(9) == run(9));
    CHECK(run(9) != run(10));
  }

  TEST_CASE("layouts") {
    const auto one = parse_layouts(R"({"qwerty": {"a": ["q", "w", "s", "z", "x"]}})");
    REQUIRE(one.size() == 1);
    CHECK(one[0].name == "qwerty");
    CHECK(one[0].neighbors.at(U'a') == U"qwszx");
    CHECK(parse_layouts("").empty());
    CHECK(parse_layouts("  \n").empty());
    const auto multi = parse_layouts(R"({"ru": {"ф": ["й", "ц"]}, "de": {"z": ["t", "u"]}})");
    CHECK(multi.size() == 2);
    CHECK_THROWS_WITH_AS(parse_layouts(R"({"q": {"a": ["a", "s"]}})"),
                         "layout 'q': key 'a' lists itself", Error);
    CHECK_THROWS_WITH_AS(parse_layouts(R"({"q": {"b": []}})"),
                         "layout 'q': key 'b' has no neighbors", Error);
    CHECK_THROWS_AS(parse_layouts(R"({"q": {"ab": ["c"]}})"), Error);
    CHECK_THROWS_AS(parse_layouts(R"({"q": {"a": ["s",]}})"), Error);
    try {
      parse_layouts("{\"q\": {\"a\": [\"s\"]}\n,,}");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("config validation") {
    NoiseConfig c;
    CHECK_THROWS_AS(c.validate(), Error);  // mistype without layouts
    c.enabled_ops = {NoiseOp::kDrop};
    CHECK_NOTHROW(c.validate());
    c.p_noise = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c.p_noise = 0.5;
    c.min_length = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_NOTHROW(disabled_noise().validate());
    NoiseConfig empty_ops;
    empty_ops.enabled_ops.clear();
    CHECK_THROWS_AS(empty_ops.validate(), Error);
    CHECK(parse_noise_op("swap") == NoiseOp::kSwap);
    CHECK_THROWS_AS(parse_noise_op("shuffle"), Error);
  }

  TEST_CASE("noise_characters covers what noise can emit") {
    const NoiseConfig config = toy::full_noise(1.0);
    const std::u32string chars = noise_characters(U"abcxyz", config);
    const std::set<char32_t> cover(chars.begin(), chars.end());
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
      std::string w;
      for (int j = 0; j < 7; ++j) w.push_back("abcxyz"[rng() % 6]);
      for (char32_t c : utf8::decode(sample_noisy(w, rng, config))) CHECK(cover.count(c) == 1);
    }
  }
}
