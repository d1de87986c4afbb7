#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "c2sw/numerics.hpp"
#include "c2sw/vocab.hpp"

namespace c2sw {

struct ModelConfig {
  std::size_t d_char = 64;    // character embedding width, kept through every layer
  std::size_t d_out = 768;    // output width, equal to the embedding table width
  std::size_t n_layers = 8;
  std::size_t n_heads = 8;
  std::size_t max_chars = kDefaultMaxChars;
  double ln_eps = kDefaultLayerNormEps;
  // Residuals add the layer-normalized input by default; this switches to the
  // usual pre-LN form that adds the raw input.
  bool standard_preln = false;
  bool marker_on_full_words = true;

  std::size_t head_dim() const { return d_char / n_heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  std::vector<Matrix> wq, wk, wv;  // one d_char x head_dim matrix per head
  Matrix wo;                       // d_char x d_char
  Matrix ln1_gain, ln1_bias;       // 1 x d_char
  Matrix w1, b1;                   // d_char x 4 d_char, 1 x 4 d_char
  Matrix w2, b2;                   // 4 d_char x d_char, 1 x d_char
  Matrix ln2_gain, ln2_bias;

  bool operator==(const LayerParams&) const = default;
};

// Every trainable tensor of the module. Gradients use the same type.
struct Char2SubwordParams {
  Matrix char_embeddings;  // alphabet x d_char
  std::vector<LayerParams> layers;
  Matrix w_e, b_e;              // d_char x d_out, 1 x d_out
  Matrix out_gain, out_bias;    // 1 x d_out

  std::size_t count() const;
  Vector flatten() const;
  void assign(std::span<const double> flat);
  void set_zero();
  bool operator==(const Char2SubwordParams&) const = default;
};

using ParamGrads = Char2SubwordParams;

// Visits tensors in a fixed order with stable names ("layer0.head1.wq", ...).
template <typename Params, typename Fn>
void for_each_tensor(Params& params, Fn&& fn) {
  fn(std::string("char_embeddings"), params.char_embeddings);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layer.wq.size(); ++h) {
      const std::string head = prefix + "head" + std::to_string(h) + ".";
      fn(head + "wq", layer.wq[h]);
      fn(head + "wk", layer.wk[h]);
      fn(head + "wv", layer.wv[h]);
    }
    fn(prefix + "wo", layer.wo);
    fn(prefix + "ln1.gain", layer.ln1_gain);
    fn(prefix + "ln1.bias", layer.ln1_bias);
    fn(prefix + "ffn.w1", layer.w1);
    fn(prefix + "ffn.b1", layer.b1);
    fn(prefix + "ffn.w2", layer.w2);
    fn(prefix + "ffn.b2", layer.b2);
    fn(prefix + "ln2.gain", layer.ln2_gain);
    fn(prefix + "ln2.bias", layer.ln2_bias);
  }
  fn(std::string("head.w_e"), params.w_e);
  fn(std::string("head.b_e"), params.b_e);
  fn(std::string("head.ln.gain"), params.out_gain);
  fn(std::string("head.ln.bias"), params.out_bias);
}

// All-zero tensors with the shapes implied by the config.
Char2SubwordParams zero_params(const ModelConfig& config, std::size_t alphabet_size);

// Xavier-uniform weights, zero biases, unit layer-norm gains.
Char2SubwordParams init_params(const ModelConfig& config, std::size_t alphabet_size,
                               std::uint64_t seed);

std::size_t param_count(const ModelConfig& config, std::size_t alphabet_size);
std::size_t table_param_count(std::size_t vocab_size, std::size_t dim);

// attention[layer][head] is an n x n row-stochastic matrix.
using AttentionMaps = std::vector<std::vector<Matrix>>;

struct LayerCache {
  Matrix input;
  Matrix normed;  // LayerNorm(input)
  std::vector<Matrix> q, k, v, probs;
  Matrix heads;   // concatenated head outputs, n x d_char
  Matrix mid;     // after attention + residual
  Matrix mid_normed;
  Matrix ffn_pre;  // before GELU, n x 4 d_char
  Matrix ffn_act;
};

struct ForwardCache {
  std::vector<int> chars;
  std::vector<LayerCache> layers;
  Matrix top;        // output of the last layer, n x d_char
  Matrix projected;  // top * W_e + b_e, n x d_out
  std::vector<std::size_t> pool_argmax;
  Vector pooled;
};

struct ForwardResult {
  Vector embedding;
  AttentionMaps attention;
  ForwardCache cache;
};

ForwardResult forward(const ModelConfig& config, const Char2SubwordParams& params,
                      std::span<const int> chars);

// Exact gradient of <embedding, upstream> with respect to every parameter.
ParamGrads backward(const ModelConfig& config, const Char2SubwordParams& params,
                    std::span<const int> chars, const ForwardCache& cache,
                    std::span<const double> upstream);
// Same, accumulating into an existing gradient.
void backward_into(const ModelConfig& config, const Char2SubwordParams& params,
                   std::span<const int> chars, const ForwardCache& cache,
                   std::span<const double> upstream, ParamGrads& grads);

// A trained module together with the alphabet it was trained on.
class Char2Subword {
 public:
  Char2Subword() = default;
  Char2Subword(ModelConfig config, CharAlphabet alphabet, Char2SubwordParams params);
  static Char2Subword initialize(const ModelConfig& config, CharAlphabet alphabet,
                                 std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const CharAlphabet& alphabet() const { return alphabet_; }
  const Char2SubwordParams& params() const { return params_; }
  Char2SubwordParams& mutable_params() { return params_; }

  CharSequence sequence(std::string_view token, bool is_full_word) const;
  Vector embed(std::string_view token, bool is_full_word) const;
  ForwardResult run(std::string_view token, bool is_full_word) const;

 private:
  ModelConfig config_;
  CharAlphabet alphabet_;
  Char2SubwordParams params_;
};

}  // namespace c2sw
