#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "c2sw/model.hpp"
#include "c2sw/noise.hpp"
#include "c2sw/objectives.hpp"
#include "c2sw/vocab.hpp"

namespace c2sw {

inline constexpr std::size_t kDefaultPrecisionDepth = 15;

// Predictions for the given vocabulary ids, embedding each entry as a subword
// piece (no full-word marker).
std::vector<Vector> predict_tokens(const Char2Subword& model, const Vocabulary& vocab,
                                   std::span<const TokenId> ids);

// Fraction of ids whose arg max over e_hat . E^T is the id itself; ties go to
// the lower id.
double accuracy(std::span<const Vector> predictions, std::span<const TokenId> ids,
                const EmbeddingTable& table);

struct PrecisionReport {
  std::vector<double> precision;  // precision[k - 1] is Prec@k
  double accuracy = 0.0;
  double avg_precision = 0.0;     // mean of precision[0 .. k_max)
  std::size_t evaluated = 0;

  double at(std::size_t k) const { return precision.at(k - 1); }
  std::string to_text() const;
  static PrecisionReport parse(const std::string& text);
};

// Prec@k = |topk(e_i) ∩ topk(e_hat_i)| / k averaged over ids, for k = 1..k_max.
// Both neighbor lists come from the same cosine ranking over the table.
PrecisionReport precision_at_k(std::span<const Vector> predictions, std::span<const TokenId> ids,
                               const EmbeddingTable& table, const NeighborIndex& index,
                               std::size_t k_max);

// Accuracy and Prec@1..k_max over every regular vocabulary entry.
PrecisionReport evaluate_model(const Char2Subword& model, const Vocabulary& vocab,
                               const EmbeddingTable& table, const NeighborIndex& index,
                               std::size_t k_max = kDefaultPrecisionDepth);

struct Neighbor {
  std::string token;
  double cosine;
};

std::vector<Neighbor> neighbor_query(const Char2Subword& model, const EmbeddingTable& table,
                                     const Vocabulary& vocab, std::string_view input,
                                     bool is_full_word, std::size_t n);

struct SeqLengthStats {
  std::size_t sentences = 0;
  double mean_words = 0.0;
  std::size_t max_words = 0;
  double mean_pieces = 0.0;
  std::size_t max_pieces = 0;
  double ratio = 0.0;  // total pieces / total words, 0 for an empty corpus

  std::string to_text() const;
};

SeqLengthStats seq_length_stats(std::span<const std::string> sentences, const Vocabulary& vocab);

// JSON document with the input characters and one labeled n x n matrix per
// layer and head.
std::string dump_attention(const Char2Subword& model, std::string_view input, bool is_full_word);

struct Perturbation {
  std::string text;
  TokenId clean_id;
  NoiseOp op;
};

// per_token single-edit variants of each eligible id, ops drawn uniformly from
// the enabled set. Ineligible tokens are skipped.
std::vector<Perturbation> make_perturbations(const Vocabulary& vocab, std::span<const TokenId> ids,
                                             const NoiseConfig& config, std::size_t per_token,
                                             Rng& rng);

// Fraction of perturbations whose nearest table row (cosine) is the clean row.
double perturbation_robustness(const Char2Subword& model, const EmbeddingTable& table,
                               std::span<const Perturbation> perturbations);

}  // namespace c2sw
