#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "c2sw/model.hpp"
#include "c2sw/objectives.hpp"
#include "c2sw/vocab.hpp"

namespace c2sw {

enum class EmbedMode {
  kTableOnly,  // WordPiece split, one table row per piece
  kFull,       // one module embedding per whitespace word
  kHybrid,     // table row for whole-word vocabulary hits, module otherwise
};

std::string_view embed_mode_name(EmbedMode mode);
EmbedMode parse_embed_mode(std::string_view name);

enum class Provenance { kTable, kChar2Subword };
std::string_view provenance_name(Provenance p);

struct EmbeddedSequence {
  std::vector<Vector> vectors;
  std::vector<Provenance> provenance;
  std::vector<std::string> pieces;

  std::size_t size() const { return vectors.size(); }
};

// model may be null for kTableOnly.
EmbeddedSequence embed_sequence(EmbedMode mode, std::string_view sentence, const Vocabulary& vocab,
                                const EmbeddingTable& table, const Char2Subword* model);

struct Coverage {
  double in_vocab = 0.0;
  double backoff = 0.0;
  std::size_t words = 0;
};

// Share of whitespace words that are whole vocabulary entries versus words the
// hybrid mode would send to the module. Both are 0 for an empty corpus.
Coverage coverage_report(std::span<const std::string> sentences, const Vocabulary& vocab);

// "n d mode" header, then token \t provenance \t d values per line.
std::string format_embeddings(const EmbeddedSequence& seq, std::size_t dim, EmbedMode mode);

}  // namespace c2sw
