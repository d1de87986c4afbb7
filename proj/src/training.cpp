#include "c2sw/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "c2sw/error.hpp"
#include "c2sw/evaluation.hpp"
#include "c2sw/utf8.hpp"
#include "json.hpp"

namespace c2sw {

Adam::Adam(AdamConfig config, const Char2SubwordParams& like)
    : config_(config), m_(like), v_(like) {
  m_.set_zero();
  v_.set_zero();
}

void Adam::update(Char2SubwordParams& params, const ParamGrads& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  std::vector<Matrix*> p, m, v;
  std::vector<const Matrix*> g;
  for_each_tensor(params, [&](const std::string&, Matrix& t) { p.push_back(&t); });
  for_each_tensor(m_, [&](const std::string&, Matrix& t) { m.push_back(&t); });
  for_each_tensor(v_, [&](const std::string&, Matrix& t) { v.push_back(&t); });
  for_each_tensor(grads, [&](const std::string&, const Matrix& t) { g.push_back(&t); });
  if (g.size() != p.size()) throw Error("gradient does not match parameters");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!g[i]->same_shape(*p[i])) throw Error("gradient tensor shape mismatch");
    auto& pd = p[i]->data();
    auto& md = m[i]->data();
    auto& vd = v[i]->data();
    const auto& gd = g[i]->data();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      md[j] = config_.beta1 * md[j] + (1.0 - config_.beta1) * gd[j];
      vd[j] = config_.beta2 * vd[j] + (1.0 - config_.beta2) * gd[j] * gd[j];
      pd[j] -= config_.step * (md[j] / c1) / (std::sqrt(vd[j] / c2) + config_.eps);
    }
  }
}

void clip_gradient_norm(ParamGrads& grads, double max_norm) {
  double sq = 0.0;
  for_each_tensor(grads, [&](const std::string&, const Matrix& t) {
    for (double x : t.data()) sq += x * x;
  });
  const double total = std::sqrt(sq);
  if (total <= max_norm || total == 0.0) return;
  const double factor = max_norm / total;
  for_each_tensor(grads, [&](const std::string&, Matrix& t) {
    for (double& x : t.data()) x *= factor;
  });
}

CharAlphabet training_alphabet(const Vocabulary& vocab, const NoiseConfig& noise) {
  std::u32string base;
  for (TokenId id : vocab.regular_ids()) base += utf8::decode(vocab.token(id));
  return CharAlphabet::from_vocabulary(vocab, noise_characters(base, noise));
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (accumulation < 1) throw Error("accumulation must be at least 1");
  if (!(adam.step > 0.0)) throw Error("step size must be positive");
  if (loss_neighbors < 1) throw Error("loss_neighbors must be at least 1");
  if (grad_clip && !(*grad_clip > 0.0)) throw Error("grad_clip must be positive");
  weights.validate();
  noise.validate();
}

namespace {

struct Sample {
  TokenId id;
  bool full_word;
};

std::vector<Sample> simulation_samples(const Vocabulary& vocab, bool full_word_variants) {
  std::vector<Sample> samples;
  for (TokenId id : vocab.regular_ids()) {
    samples.push_back({id, false});
    if (full_word_variants && vocab.token(id).rfind(kContinuationMarker, 0) != 0) {
      samples.push_back({id, true});
    }
  }
  return samples;
}

void scale_upstream(Vector& g, double factor) {
  for (double& x : g) x *= factor;
}

}  // namespace

SimulationResult train_simulation(Char2Subword model, const Vocabulary& vocab,
                                  const EmbeddingTable& table, const TrainConfig& config,
                                  const EpochCallback& on_epoch) {
  config.validate();
  const ModelConfig& mc = model.config();
  if (table.dim() != mc.d_out) {
    throw Error("table width " + std::to_string(table.dim()) + " differs from model d_out " +
                std::to_string(mc.d_out));
  }
  if (table.size() != vocab.size()) {
    throw Error("table has " + std::to_string(table.size()) + " rows but the vocabulary has " +
                std::to_string(vocab.size()) + " entries");
  }
  const std::size_t loss_k = std::min(config.loss_neighbors, table.size());
  const std::size_t eval_k = std::min(config.eval_k, table.size());
  const NeighborIndex loss_index = build_neighbor_index(table, loss_k);
  const NeighborIndex eval_index =
      eval_k == loss_k ? loss_index : build_neighbor_index(table, eval_k);

  std::vector<Sample> samples = simulation_samples(vocab, config.include_full_word_variants);
  Rng rng(config.seed);
  Adam adam(config.adam, model.params());
  ParamGrads grads = zero_params(mc, model.alphabet().size());
  const std::size_t window = config.batch_size * config.accumulation;

  SimulationResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(samples.begin(), samples.end(), rng);
    LossBreakdown sums;
    for (std::size_t first = 0; first < samples.size(); first += window) {
      const std::size_t last = std::min(samples.size(), first + window);
      const double inv = 1.0 / static_cast<double>(last - first);
      grads.set_zero();
      for (std::size_t s = first; s < last; ++s) {
        const Sample& sample = samples[s];
        const std::string noisy = sample_noisy(vocab.token(sample.id), rng, config.noise);
        const CharSequence seq = model.sequence(noisy, sample.full_word);
        const ForwardResult fwd = forward(mc, model.params(), seq.chars);
        const auto target = table.row(sample.id);
        const LossBreakdown loss =
            combined_loss(sample.id, target, fwd.embedding, table, loss_index, config.weights);
        if (!std::isfinite(loss.total)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                             std::to_string(s) + " (token '" + vocab.token(sample.id) + "')");
        }
        sums.cos += loss.cos;
        sums.ce += loss.ce;
        sums.l2 += loss.l2;
        sums.nbr += loss.nbr;
        sums.total += loss.total;
        Vector upstream = combined_loss_gradient(sample.id, target, fwd.embedding, table,
                                                 loss_index, config.weights);
        scale_upstream(upstream, inv);
        backward_into(mc, model.params(), seq.chars, fwd.cache, upstream, grads);
      }
      if (config.grad_clip) clip_gradient_norm(grads, *config.grad_clip);
      adam.update(model.mutable_params(), grads);
    }

    EpochMetrics m;
    m.epoch = epoch;
    const double n = samples.empty() ? 1.0 : static_cast<double>(samples.size());
    m.loss = {sums.cos / n, sums.ce / n, sums.l2 / n, sums.nbr / n, sums.total / n};
    m.eval_k = eval_k;
    if (config.evaluate_each_epoch && eval_k > 0) {
      const PrecisionReport report = evaluate_model(model, vocab, table, eval_index, eval_k);
      m.accuracy = report.accuracy;
      m.prec_at_1 = report.at(1);
      m.prec_at_k = report.at(eval_k);
    }
    m.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  result.model = std::move(model);
  return result;
}

std::string metrics_to_jsonl(std::span<const EpochMetrics> log, bool include_wall_time) {
  std::string out;
  for (const auto& m : log) {
    nlohmann::ordered_json rec;
    rec["epoch"] = m.epoch;
    rec["loss"] = m.loss.total;
    rec["loss_cos"] = m.loss.cos;
    rec["loss_ce"] = m.loss.ce;
    rec["loss_l2"] = m.loss.l2;
    rec["loss_nbr"] = m.loss.nbr;
    rec["accuracy"] = m.accuracy;
    rec["prec@1"] = m.prec_at_1;
    rec["prec@" + std::to_string(m.eval_k)] = m.prec_at_k;
    if (include_wall_time) rec["wall_time_s"] = m.wall_time_s;
    out += rec.dump() + "\n";
  }
  return out;
}

void MaskingConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(select_prob) || !prob(mask_prob) || !prob(random_prob) ||
      mask_prob + random_prob > 1.0) {
    throw Error("masking probabilities must lie in [0, 1] with mask + random <= 1");
  }
}

MaskingPlan make_masking_plan(std::span<const TokenId> token_ids,
                              std::span<const CharSequence> char_seqs,
                              const CharAlphabet& alphabet, Rng& rng,
                              const MaskingConfig& config) {
  config.validate();
  if (token_ids.size() != char_seqs.size()) {
    throw Error("masking plan needs one character sequence per token");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MaskingPlan plan;
  for (std::size_t pos = 0; pos < token_ids.size(); ++pos) {
    if (!(unit(rng) < config.select_prob)) continue;
    MaskedToken t;
    t.position = pos;
    t.target = token_ids[pos];
    t.masked_chars = char_seqs[pos].chars;
    for (int& c : t.masked_chars) {
      const double u = unit(rng);
      CharAction action = CharAction::kKeep;
      if (u < config.mask_prob) {
        action = CharAction::kMask;
        c = CharAlphabet::kMaskChar;
      } else if (u < config.mask_prob + config.random_prob) {
        action = CharAction::kRandomize;
        const std::size_t ordinary = alphabet.ordinary_count();
        const bool is_ordinary = c >= CharAlphabet::kFirstOrdinary;
        const std::size_t choices = is_ordinary ? ordinary - 1 : ordinary;
        if (choices > 0) {
          int r = CharAlphabet::kFirstOrdinary +
                  static_cast<int>(std::uniform_int_distribution<std::size_t>(0, choices - 1)(rng));
          if (is_ordinary && r >= c) ++r;  // skip the original character
          c = r;
        }
      }
      t.actions.push_back(action);
    }
    plan.tokens.push_back(std::move(t));
  }
  return plan;
}

MlmStep mlm_step(const ModelConfig& config, const Char2SubwordParams& params,
                 std::span<const std::vector<int>> masked_seqs, std::span<const TokenId> targets,
                 const EmbeddingTable& table) {
  if (masked_seqs.size() != targets.size()) {
    throw Error("mlm_step needs one target per masked sequence");
  }
  if (table.dim() != config.d_out) throw Error("table width differs from model d_out");
  MlmStep step{0.0, zero_params(config, params.char_embeddings.rows())};
  if (targets.empty()) return step;
  const double inv = 1.0 / static_cast<double>(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const ForwardResult fwd = forward(config, params, masked_seqs[i]);
    step.loss += loss_ce(targets[i], fwd.embedding, table) * inv;
    Vector upstream = loss_ce_gradient(targets[i], fwd.embedding, table);
    scale_upstream(upstream, inv);
    backward_into(config, params, masked_seqs[i], fwd.cache, upstream, step.grads);
  }
  return step;
}

void PretrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (!(adam.step > 0.0)) throw Error("step size must be positive");
  if (grad_clip && !(*grad_clip > 0.0)) throw Error("grad_clip must be positive");
  masking.validate();
}

Corpus corpus_to_ids(std::span<const std::string> sentences, const Vocabulary& vocab) {
  Corpus corpus;
  for (const auto& sentence : sentences) {
    std::vector<TokenId> ids;
    for (const auto& word : whitespace_split(sentence)) {
      for (const auto& piece : tokenize_word(vocab, word)) ids.push_back(*vocab.find(piece));
    }
    if (!ids.empty()) corpus.push_back(std::move(ids));
  }
  return corpus;
}

PretrainResult pretrain_mlm(Char2Subword model, const Corpus& corpus, const Vocabulary& vocab,
                            const EmbeddingTable& table, const PretrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error("pre-training corpus is empty");
  if (table.size() != vocab.size()) throw Error("table and vocabulary sizes differ");
  const ModelConfig& mc = model.config();
  if (table.dim() != mc.d_out) throw Error("table width differs from model d_out");

  // Character sequences per vocabulary id, built once.
  std::vector<CharSequence> by_id(vocab.size());
  for (TokenId id = 0; id < vocab.size(); ++id) by_id[id] = model.sequence(vocab.token(id), false);

  Rng rng(config.seed);
  Adam adam(config.adam, model.params());
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  PretrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t selected = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      std::vector<std::vector<int>> masked;
      std::vector<TokenId> targets;
      for (std::size_t s = first; s < last; ++s) {
        const auto& ids = corpus[order[s]];
        std::vector<CharSequence> seqs;
        seqs.reserve(ids.size());
        for (TokenId id : ids) seqs.push_back(by_id.at(id));
        MaskingPlan plan = make_masking_plan(ids, seqs, model.alphabet(), rng, config.masking);
        for (auto& t : plan.tokens) {
          masked.push_back(std::move(t.masked_chars));
          targets.push_back(t.target);
        }
      }
      if (targets.empty()) continue;
      MlmStep step = mlm_step(mc, model.params(), masked, targets, table);
      if (!std::isfinite(step.loss)) {
        throw NumericError("non-finite MLM loss at epoch " + std::to_string(epoch));
      }
      loss_sum += step.loss * static_cast<double>(targets.size());
      selected += targets.size();
      if (config.grad_clip) clip_gradient_norm(step.grads, *config.grad_clip);
      adam.update(model.mutable_params(), step.grads);
    }
    result.epoch_losses.push_back(selected ? loss_sum / static_cast<double>(selected) : 0.0);
    result.epoch_selected.push_back(selected);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace c2sw
