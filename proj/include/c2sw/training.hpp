#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "c2sw/model.hpp"
#include "c2sw/noise.hpp"
#include "c2sw/objectives.hpp"
#include "c2sw/vocab.hpp"

namespace c2sw {

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(AdamConfig config, const Char2SubwordParams& like);
  void update(Char2SubwordParams& params, const ParamGrads& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  Char2SubwordParams m_;
  Char2SubwordParams v_;
  std::size_t t_ = 0;
};

// Rescales grads so their global L2 norm is at most max_norm.
void clip_gradient_norm(ParamGrads& grads, double max_norm);

// Vocabulary characters plus everything noise can introduce into them.
CharAlphabet training_alphabet(const Vocabulary& vocab, const NoiseConfig& noise);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  // Batches per parameter update; the effective batch is batch_size * accumulation.
  std::size_t accumulation = 1;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  LossWeights weights;
  std::size_t loss_neighbors = kDefaultLossNeighbors;
  NoiseConfig noise = disabled_noise();
  std::optional<double> grad_clip;
  // Depth of the per-epoch clean evaluation (clamped to the table size).
  std::size_t eval_k = 15;
  bool evaluate_each_epoch = true;
  // Also train on "##"-marked full-word variants of non-continuation entries.
  bool include_full_word_variants = false;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  LossBreakdown loss;  // means over the epoch's training samples
  double accuracy = 0.0;
  double prec_at_1 = 0.0;
  double prec_at_k = 0.0;  // at eval_k
  std::size_t eval_k = 0;
  double wall_time_s = 0.0;
};

struct SimulationResult {
  Char2Subword model;
  std::vector<EpochMetrics> log;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Trains the module to reproduce the frozen table rows from characters,
// minimizing the weighted four-term objective with Adam.
SimulationResult train_simulation(Char2Subword model, const Vocabulary& vocab,
                                  const EmbeddingTable& table, const TrainConfig& config,
                                  const EpochCallback& on_epoch = {});

// One JSON object per line. Wall time is only written when requested, so
// that reruns with the same seed produce identical files.
std::string metrics_to_jsonl(std::span<const EpochMetrics> log, bool include_wall_time);

enum class CharAction { kMask, kRandomize, kKeep };

struct MaskingConfig {
  double select_prob = 0.15;
  double mask_prob = 0.8;
  double random_prob = 0.1;  // keep probability is the remainder

  void validate() const;
};

struct MaskedToken {
  std::size_t position = 0;  // index in the sequence
  TokenId target = 0;
  std::vector<CharAction> actions;
  std::vector<int> masked_chars;
};

struct MaskingPlan {
  std::vector<MaskedToken> tokens;
};

// Selects each token independently and corrupts its characters 80/10/10.
MaskingPlan make_masking_plan(std::span<const TokenId> token_ids,
                              std::span<const CharSequence> char_seqs,
                              const CharAlphabet& alphabet, Rng& rng,
                              const MaskingConfig& config = {});

struct MlmStep {
  double loss = 0.0;
  ParamGrads grads;
};

// Mean cross-entropy of predicting each target through the frozen table
// projection from its masked characters. Zero loss and gradient when empty.
MlmStep mlm_step(const ModelConfig& config, const Char2SubwordParams& params,
                 std::span<const std::vector<int>> masked_seqs, std::span<const TokenId> targets,
                 const EmbeddingTable& table);

struct PretrainConfig {
  AdamConfig adam;
  std::size_t epochs = 1;
  std::size_t batch_size = 8;  // sequences per update
  std::uint64_t seed = 0;
  MaskingConfig masking;
  std::optional<double> grad_clip;

  void validate() const;
};

struct PretrainResult {
  Char2Subword model;
  std::vector<double> epoch_losses;  // mean loss per selected token
  std::vector<std::size_t> epoch_selected;
};

using Corpus = std::vector<std::vector<TokenId>>;

// Whitespace words tokenized into vocabulary ids, one sequence per sentence.
// Empty sentences are dropped.
Corpus corpus_to_ids(std::span<const std::string> sentences, const Vocabulary& vocab);

PretrainResult pretrain_mlm(Char2Subword model, const Corpus& corpus, const Vocabulary& vocab,
                            const EmbeddingTable& table, const PretrainConfig& config);

}  // namespace c2sw
