#include "c2sw/embedder.hpp"
#include "c2sw/error.hpp"
#include "doctest.h"
#include "support/toy.hpp"

using namespace c2sw;

namespace {

struct Fixture {
  Vocabulary vocab = Vocabulary::from_entries({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "the",
                                               "cat", "sat", "on", "mat", "play", "##ing", "##ed",
                                               "un", "##real", "a"});
  EmbeddingTable table = toy::table(16, 16, 8);
  Char2Subword model =
      Char2Subword::initialize(toy::small_config(), CharAlphabet::from_vocabulary(vocab), 8);
};

bool equals_row(const Vector& v, const EmbeddingTable& t, TokenId id) {
  const auto row = t.row(id);
  return std::equal(v.begin(), v.end(), row.begin(), row.end());
}

}  // namespace

TEST_SUITE("embedder") {
  TEST_CASE("table_only splits into pieces") {
    const Fixture f;
    const EmbeddedSequence s =
        embed_sequence(EmbedMode::kTableOnly, "the cat playing", f.vocab, f.table, nullptr);
    CHECK(s.pieces == std::vector<std::string>{"the", "cat", "play", "##ing"});
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s.provenance[i] == Provenance::kTable);
      CHECK(equals_row(s.vectors[i], f.table, *f.vocab.find(s.pieces[i])));
    }
    const EmbeddedSequence unk = embed_sequence(EmbedMode::kTableOnly, "xyz", f.vocab, f.table, nullptr);
    CHECK(unk.pieces == std::vector<std::string>{"[UNK]"});
  }

  TEST_CASE("full mode emits one module vector per word") {
    const Fixture f;
    const EmbeddedSequence s =
        embed_sequence(EmbedMode::kFull, "the  cat\tplaying zzz", f.vocab, f.table, &f.model);
    CHECK(s.pieces == std::vector<std::string>{"the", "cat", "playing", "zzz"});
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s.provenance[i] == Provenance::kChar2Subword);
      CHECK(s.vectors[i] == f.model.embed(s.pieces[i], true));
    }
  }

  TEST_CASE("hybrid uses table rows for whole-word hits only") {
    const Fixture f;
    const EmbeddedSequence all_in =
        embed_sequence(EmbedMode::kHybrid, "the cat sat on a mat", f.vocab, f.table, &f.model);
    REQUIRE(all_in.size() == 6);
    for (std::size_t i = 0; i < all_in.size(); ++i) {
      CHECK(all_in.provenance[i] == Provenance::kTable);
      CHECK(equals_row(all_in.vectors[i], f.table, *f.vocab.find(all_in.pieces[i])));
    }
    const EmbeddedSequence mixed =
        embed_sequence(EmbedMode::kHybrid, "the cat playing The", f.vocab, f.table, &f.model);
    CHECK(mixed.pieces == std::vector<std::string>{"the", "cat", "playing", "The"});
    CHECK(mixed.provenance == std::vector<Provenance>{Provenance::kTable, Provenance::kTable,
                                                      Provenance::kChar2Subword,
                                                      Provenance::kChar2Subword});
    CHECK(mixed.vectors[2] == f.model.embed("playing", true));
  }

  TEST_CASE("empty input and missing module") {
    const Fixture f;
    for (EmbedMode mode : {EmbedMode::kTableOnly, EmbedMode::kFull, EmbedMode::kHybrid}) {
      CHECK(embed_sequence(mode, "", f.vocab, f.table, &f.model).size() == 0);
      CHECK(embed_sequence(mode, " \t ", f.vocab, f.table, &f.model).size() == 0);
    }
    CHECK_THROWS_AS(embed_sequence(EmbedMode::kFull, "cat", f.vocab, f.table, nullptr), Error);
    CHECK_THROWS_AS(embed_sequence(EmbedMode::kHybrid, "cat", f.vocab, f.table, nullptr), Error);
    CHECK_THROWS_AS(embed_sequence(EmbedMode::kTableOnly, "cat", f.vocab, toy::table(15, 16, 1), nullptr),
                    Error);
  }

  TEST_CASE("full mode length equals word count on random sentences") {
    const Fixture f;
    std::mt19937_64 rng(3);
    const std::vector<std::string> words{"the", "cat", "xq", "Éclair", "play", "running", "a", "?"};
    for (int i = 0; i < 200; ++i) {
      std::string sentence;
      const std::size_t n = rng() % 9;
      for (std::size_t w = 0; w < n; ++w) sentence += (rng() % 2 ? " " : "  ") + words[rng() % words.size()];
      CHECK(embed_sequence(EmbedMode::kFull, sentence, f.vocab, f.table, &f.model).size() == n);
      const auto hybrid = embed_sequence(EmbedMode::kHybrid, sentence, f.vocab, f.table, &f.model);
      CHECK(hybrid.size() == n);
      CHECK(hybrid.provenance.size() == n);
    }
  }

  TEST_CASE("coverage_report") {
    const Fixture f;
    const std::vector<std::string> in{"the cat sat", "on a mat"};
    const Coverage all = coverage_report(in, f.vocab);
    CHECK(all.in_vocab == 1.0);
    CHECK(all.backoff == 0.0);
    const std::vector<std::string> out{"dogs ran", "quickly"};
    const Coverage none = coverage_report(out, f.vocab);
    CHECK(none.in_vocab == 0.0);
    CHECK(none.backoff == 1.0);
    CHECK(coverage_report({}, f.vocab).words == 0);

    // 20 words; hits marked *: the* cat* sat* on* the* mat* | a* cat* is playing | The dog sat*
    // on* mat* quietly | un* real ##ed* played
    const std::vector<std::string> mixed{"the cat sat on the mat", "a cat is playing",
                                         "The dog sat on mat quietly", "un real ##ed played"};
    const Coverage c = coverage_report(mixed, f.vocab);
    CHECK(c.words == 20);
    CHECK(c.in_vocab == 13.0 / 20);
    CHECK(c.backoff == 7.0 / 20);
  }

  TEST_CASE("format_embeddings") {
    EmbeddedSequence s;
    s.vectors = {{0.5, -1.0}, {0.25, 2.0}};
    s.provenance = {Provenance::kTable, Provenance::kChar2Subword};
    s.pieces = {"cat", "catz"};
    CHECK(format_embeddings(s, 2, EmbedMode::kHybrid) ==
          "2 2 hybrid\ncat\ttable\t0.5 -1\ncatz\tchar2subword\t0.25 2\n");
    CHECK(parse_embed_mode("table_only") == EmbedMode::kTableOnly);
    CHECK(embed_mode_name(EmbedMode::kFull) == "full");
    CHECK_THROWS_AS(parse_embed_mode("partial"), Error);
  }
}
