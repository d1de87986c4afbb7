#include "c2sw/embedder.hpp"

#include "c2sw/error.hpp"

namespace c2sw {

std::string_view embed_mode_name(EmbedMode mode) {
  switch (mode) {
    case EmbedMode::kTableOnly: return "table_only";
    case EmbedMode::kFull: return "full";
    case EmbedMode::kHybrid: return "hybrid";
  }
  return "unknown";
}

EmbedMode parse_embed_mode(std::string_view name) {
  for (EmbedMode m : {EmbedMode::kTableOnly, EmbedMode::kFull, EmbedMode::kHybrid}) {
    if (embed_mode_name(m) == name) return m;
  }
  throw Error("unknown embedding mode '" + std::string(name) +
              "' (expected table_only, full or hybrid)");
}

std::string_view provenance_name(Provenance p) {
  return p == Provenance::kTable ? "table" : "char2subword";
}

EmbeddedSequence embed_sequence(EmbedMode mode, std::string_view sentence, const Vocabulary& vocab,
                                const EmbeddingTable& table, const Char2Subword* model) {
  if (table.size() != vocab.size()) throw Error("table and vocabulary sizes differ");
  if (mode != EmbedMode::kTableOnly && model == nullptr) {
    throw Error(std::string(embed_mode_name(mode)) + " mode needs a trained module");
  }
  EmbeddedSequence out;
  auto from_table = [&](const std::string& piece, TokenId id) {
    const auto row = table.row(id);
    out.vectors.emplace_back(row.begin(), row.end());
    out.provenance.push_back(Provenance::kTable);
    out.pieces.push_back(piece);
  };
  auto from_module = [&](const std::string& word) {
    out.vectors.push_back(model->embed(word, true));
    out.provenance.push_back(Provenance::kChar2Subword);
    out.pieces.push_back(word);
  };
  for (const auto& word : whitespace_split(sentence)) {
    switch (mode) {
      case EmbedMode::kTableOnly:
        for (const auto& piece : tokenize_word(vocab, word)) from_table(piece, *vocab.find(piece));
        break;
      case EmbedMode::kFull:
        from_module(word);
        break;
      case EmbedMode::kHybrid:
        if (auto id = vocab.find(word)) {
          from_table(word, *id);
        } else {
          from_module(word);
        }
        break;
    }
  }
  return out;
}

Coverage coverage_report(std::span<const std::string> sentences, const Vocabulary& vocab) {
  Coverage c;
  std::size_t hits = 0;
  for (const auto& sentence : sentences) {
    for (const auto& word : whitespace_split(sentence)) {
      ++c.words;
      if (vocab.contains(word)) ++hits;
    }
  }
  if (c.words > 0) {
    c.in_vocab = static_cast<double>(hits) / static_cast<double>(c.words);
    c.backoff = static_cast<double>(c.words - hits) / static_cast<double>(c.words);
  }
  return c;
}

std::string format_embeddings(const EmbeddedSequence& seq, std::size_t dim, EmbedMode mode) {
  std::string out = std::to_string(seq.size()) + " " + std::to_string(dim) + " " +
                    std::string(embed_mode_name(mode)) + "\n";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out += seq.pieces[i];
    out += '\t';
    out += provenance_name(seq.provenance[i]);
    out += '\t';
    for (std::size_t j = 0; j < seq.vectors[i].size(); ++j) {
      if (j) out += ' ';
      out += format_double(seq.vectors[i][j]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace c2sw
