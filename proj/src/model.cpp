#include "c2sw/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "c2sw/error.hpp"

namespace c2sw {

void ModelConfig::validate() const {
  if (d_char == 0 || d_out == 0 || n_heads == 0 || max_chars == 0) {
    throw Error("model config counts must be at least 1");
  }
  if (d_char % n_heads != 0) {
    throw Error("d_char " + std::to_string(d_char) + " is not divisible by n_heads " +
                std::to_string(n_heads));
  }
  if (d_char % 2 != 0) throw Error("d_char must be even for sinusoidal positions");
  if (!(ln_eps > 0.0)) throw Error("ln_eps must be positive");
}

std::size_t Char2SubwordParams::count() const {
  std::size_t total = 0;
  for_each_tensor(*this, [&](const std::string&, const Matrix& m) { total += m.size(); });
  return total;
}

Vector Char2SubwordParams::flatten() const {
  Vector flat;
  flat.reserve(count());
  for_each_tensor(*this, [&](const std::string&, const Matrix& m) {
    flat.insert(flat.end(), m.data().begin(), m.data().end());
  });
  return flat;
}

void Char2SubwordParams::assign(std::span<const double> flat) {
  if (flat.size() != count()) {
    throw Error("flat parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                std::to_string(count()));
  }
  std::size_t offset = 0;
  for_each_tensor(*this, [&](const std::string&, Matrix& m) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), m.size(), m.data().begin());
    offset += m.size();
  });
}

void Char2SubwordParams::set_zero() {
  for_each_tensor(*this, [](const std::string&, Matrix& m) { m.set_zero(); });
}

Char2SubwordParams zero_params(const ModelConfig& config, std::size_t alphabet_size) {
  config.validate();
  const std::size_t d = config.d_char;
  const std::size_t hd = config.head_dim();
  Char2SubwordParams p;
  p.char_embeddings = Matrix(alphabet_size, d);
  p.layers.resize(config.n_layers);
  for (auto& layer : p.layers) {
    layer.wq.assign(config.n_heads, Matrix(d, hd));
    layer.wk.assign(config.n_heads, Matrix(d, hd));
    layer.wv.assign(config.n_heads, Matrix(d, hd));
    layer.wo = Matrix(d, d);
    layer.ln1_gain = Matrix(1, d);
    layer.ln1_bias = Matrix(1, d);
    layer.w1 = Matrix(d, 4 * d);
    layer.b1 = Matrix(1, 4 * d);
    layer.w2 = Matrix(4 * d, d);
    layer.b2 = Matrix(1, d);
    layer.ln2_gain = Matrix(1, d);
    layer.ln2_bias = Matrix(1, d);
  }
  p.w_e = Matrix(d, config.d_out);
  p.b_e = Matrix(1, config.d_out);
  p.out_gain = Matrix(1, config.d_out);
  p.out_bias = Matrix(1, config.d_out);
  return p;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Char2SubwordParams init_params(const ModelConfig& config, std::size_t alphabet_size,
                               std::uint64_t seed) {
  Char2SubwordParams p = zero_params(config, alphabet_size);
  std::mt19937_64 rng(seed);
  for_each_tensor(p, [&](const std::string& name, Matrix& m) {
    if (ends_with(name, ".gain")) {
      std::fill(m.data().begin(), m.data().end(), 1.0);
    } else if (m.rows() > 1) {
      const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : m.data()) v = dist(rng);
    }
    // 1 x n tensors that are not gains are biases and stay zero.
  });
  return p;
}

std::size_t param_count(const ModelConfig& config, std::size_t alphabet_size) {
  return zero_params(config, alphabet_size).count();
}

std::size_t table_param_count(std::size_t vocab_size, std::size_t dim) { return vocab_size * dim; }

namespace {

Matrix layer_norm_rows(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vector y = layer_norm(x.row(r), gain.row(0), bias.row(0), eps);
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

Matrix layer_norm_rows_backward(const Matrix& x, const Matrix& gain, double eps,
                                const Matrix& upstream, Matrix& gain_grad, Matrix& bias_grad) {
  Matrix dx(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vector g = layer_norm_backward(x.row(r), gain.row(0), eps, upstream.row(r),
                                         gain_grad.row(0), bias_grad.row(0));
    std::copy(g.begin(), g.end(), dx.row(r).begin());
  }
  return dx;
}

void add_row_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bias(0, c);
  }
}

void accumulate_column_sums(const Matrix& m, Matrix& out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += m(r, c);
  }
}

Matrix column_block(const Matrix& m, std::size_t first, std::size_t width) {
  Matrix out(m.rows(), width);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out(r, c) = m(r, first + c);
  }
  return out;
}

void scale(Matrix& m, double factor) {
  for (double& v : m.data()) v *= factor;
}

void check_shapes(const ModelConfig& config, const Char2SubwordParams& params) {
  config.validate();
  if (params.layers.size() != config.n_layers || params.w_e.cols() != config.d_out ||
      params.char_embeddings.cols() != config.d_char) {
    throw Error("parameters do not match the model config");
  }
}

}  // namespace

ForwardResult forward(const ModelConfig& config, const Char2SubwordParams& params,
                      std::span<const int> chars) {
  check_shapes(config, params);
  if (chars.empty()) throw Error("cannot embed an empty character sequence");
  if (chars.size() > config.max_chars) {
    throw Error("character sequence of length " + std::to_string(chars.size()) +
                " exceeds max_chars " + std::to_string(config.max_chars));
  }
  const std::size_t n = chars.size();
  const std::size_t d = config.d_char;
  const std::size_t hd = config.head_dim();
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(d));

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.chars.assign(chars.begin(), chars.end());

  Matrix x(n, d);
  for (std::size_t p = 0; p < n; ++p) {
    const auto c = static_cast<std::size_t>(chars[p]);
    if (c >= params.char_embeddings.rows()) {
      throw Error("character index " + std::to_string(c) + " outside the alphabet");
    }
    const Vector pe = sinusoidal_pe(p, d);
    for (std::size_t j = 0; j < d; ++j) x(p, j) = params.char_embeddings(c, j) + pe[j];
  }

  result.attention.resize(config.n_layers);
  cache.layers.resize(config.n_layers);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const LayerParams& lp = params.layers[l];
    LayerCache& lc = cache.layers[l];
    lc.input = x;
    lc.normed = layer_norm_rows(x, lp.ln1_gain, lp.ln1_bias, config.ln_eps);
    lc.heads = Matrix(n, d);
    for (std::size_t h = 0; h < config.n_heads; ++h) {
      Matrix q = matmul(lc.normed, lp.wq[h]);
      Matrix k = matmul(lc.normed, lp.wk[h]);
      Matrix v = matmul(lc.normed, lp.wv[h]);
      Matrix scores = matmul_nt(q, k);
      scale(scores, score_scale);
      Matrix probs = softmax_rows(scores);
      const Matrix out = matmul(probs, v);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < hd; ++c) lc.heads(r, h * hd + c) = out(r, c);
      }
      result.attention[l].push_back(probs);
      lc.q.push_back(std::move(q));
      lc.k.push_back(std::move(k));
      lc.v.push_back(std::move(v));
      lc.probs.push_back(std::move(probs));
    }
    lc.mid = matmul(lc.heads, lp.wo);
    lc.mid += config.standard_preln ? lc.input : lc.normed;
    lc.mid_normed = layer_norm_rows(lc.mid, lp.ln2_gain, lp.ln2_bias, config.ln_eps);
    lc.ffn_pre = matmul(lc.mid_normed, lp.w1);
    add_row_bias(lc.ffn_pre, lp.b1);
    lc.ffn_act = lc.ffn_pre;
    for (double& v : lc.ffn_act.data()) v = gelu(v);
    x = matmul(lc.ffn_act, lp.w2);
    add_row_bias(x, lp.b2);
    x += config.standard_preln ? lc.mid : lc.mid_normed;
  }

  cache.top = x;
  cache.projected = matmul(x, params.w_e);
  add_row_bias(cache.projected, params.b_e);
  cache.pooled.assign(config.d_out, 0.0);
  cache.pool_argmax.assign(config.d_out, 0);
  for (std::size_t c = 0; c < config.d_out; ++c) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < n; ++p) {
      if (cache.projected(p, c) > cache.projected(best, c)) best = p;
    }
    cache.pool_argmax[c] = best;
    cache.pooled[c] = cache.projected(best, c);
  }
  result.embedding =
      layer_norm(cache.pooled, params.out_gain.row(0), params.out_bias.row(0), config.ln_eps);
  return result;
}

void backward_into(const ModelConfig& config, const Char2SubwordParams& params,
                   std::span<const int> chars, const ForwardCache& cache,
                   std::span<const double> upstream, ParamGrads& grads) {
  check_shapes(config, params);
  if (!std::equal(chars.begin(), chars.end(), cache.chars.begin(), cache.chars.end()) ||
      cache.layers.size() != config.n_layers || cache.pooled.size() != config.d_out) {
    throw Error("forward cache does not belong to this input");
  }
  if (upstream.size() != config.d_out) {
    throw Error("upstream gradient has " + std::to_string(upstream.size()) + " entries, expected " +
                std::to_string(config.d_out));
  }
  const std::size_t n = chars.size();
  const std::size_t d = config.d_char;
  const std::size_t hd = config.head_dim();
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(d));

  const Vector d_pooled = layer_norm_backward(cache.pooled, params.out_gain.row(0), config.ln_eps,
                                              upstream, grads.out_gain.row(0),
                                              grads.out_bias.row(0));
  Matrix d_projected(n, config.d_out);
  for (std::size_t c = 0; c < config.d_out; ++c) {
    d_projected(cache.pool_argmax[c], c) = d_pooled[c];
    grads.b_e(0, c) += d_pooled[c];
  }
  grads.w_e += matmul_tn(cache.top, d_projected);
  Matrix dx = matmul_nt(d_projected, params.w_e);

  for (std::size_t l = config.n_layers; l-- > 0;) {
    const LayerParams& lp = params.layers[l];
    const LayerCache& lc = cache.layers[l];
    LayerParams& lg = grads.layers[l];

    // x_next = FFN(mid_normed) + residual
    grads.layers[l].w2 += matmul_tn(lc.ffn_act, dx);
    accumulate_column_sums(dx, lg.b2);
    Matrix d_pre = matmul_nt(dx, lp.w2);
    for (std::size_t i = 0; i < d_pre.size(); ++i) {
      d_pre.data()[i] *= gelu_derivative(lc.ffn_pre.data()[i]);
    }
    lg.w1 += matmul_tn(lc.mid_normed, d_pre);
    accumulate_column_sums(d_pre, lg.b1);
    Matrix d_mid_normed = matmul_nt(d_pre, lp.w1);
    if (!config.standard_preln) d_mid_normed += dx;
    Matrix d_mid = layer_norm_rows_backward(lc.mid, lp.ln2_gain, config.ln_eps, d_mid_normed,
                                            lg.ln2_gain, lg.ln2_bias);
    if (config.standard_preln) d_mid += dx;

    // mid = MultiHead(normed) + residual
    lg.wo += matmul_tn(lc.heads, d_mid);
    const Matrix d_heads = matmul_nt(d_mid, lp.wo);
    Matrix d_normed(n, d);
    for (std::size_t h = 0; h < config.n_heads; ++h) {
      const Matrix d_out = column_block(d_heads, h * hd, hd);
      const Matrix d_probs = matmul_nt(d_out, lc.v[h]);
      const Matrix d_v = matmul_tn(lc.probs[h], d_out);
      Matrix d_scores = softmax_rows_backward(lc.probs[h], d_probs);
      scale(d_scores, score_scale);
      const Matrix d_q = matmul(d_scores, lc.k[h]);
      const Matrix d_k = matmul_tn(d_scores, lc.q[h]);
      lg.wq[h] += matmul_tn(lc.normed, d_q);
      lg.wk[h] += matmul_tn(lc.normed, d_k);
      lg.wv[h] += matmul_tn(lc.normed, d_v);
      d_normed += matmul_nt(d_q, lp.wq[h]);
      d_normed += matmul_nt(d_k, lp.wk[h]);
      d_normed += matmul_nt(d_v, lp.wv[h]);
    }
    if (!config.standard_preln) d_normed += d_mid;
    Matrix d_input = layer_norm_rows_backward(lc.input, lp.ln1_gain, config.ln_eps, d_normed,
                                              lg.ln1_gain, lg.ln1_bias);
    if (config.standard_preln) d_input += d_mid;
    dx = std::move(d_input);
  }

  for (std::size_t p = 0; p < n; ++p) {
    auto row = grads.char_embeddings.row(static_cast<std::size_t>(chars[p]));
    for (std::size_t j = 0; j < d; ++j) row[j] += dx(p, j);
  }
}

ParamGrads backward(const ModelConfig& config, const Char2SubwordParams& params,
                    std::span<const int> chars, const ForwardCache& cache,
                    std::span<const double> upstream) {
  ParamGrads grads = zero_params(config, params.char_embeddings.rows());
  backward_into(config, params, chars, cache, upstream, grads);
  return grads;
}

Char2Subword::Char2Subword(ModelConfig config, CharAlphabet alphabet, Char2SubwordParams params)
    : config_(config), alphabet_(std::move(alphabet)), params_(std::move(params)) {
  check_shapes(config_, params_);
  if (params_.char_embeddings.rows() != alphabet_.size()) {
    throw Error("character embedding rows " + std::to_string(params_.char_embeddings.rows()) +
                " do not match alphabet size " + std::to_string(alphabet_.size()));
  }
}

Char2Subword Char2Subword::initialize(const ModelConfig& config, CharAlphabet alphabet,
                                      std::uint64_t seed) {
  auto params = init_params(config, alphabet.size(), seed);
  return Char2Subword(config, std::move(alphabet), std::move(params));
}

CharSequence Char2Subword::sequence(std::string_view token, bool is_full_word) const {
  return char_sequence(token, is_full_word, alphabet_, config_.max_chars,
                       config_.marker_on_full_words);
}

ForwardResult Char2Subword::run(std::string_view token, bool is_full_word) const {
  return forward(config_, params_, sequence(token, is_full_word).chars);
}

Vector Char2Subword::embed(std::string_view token, bool is_full_word) const {
  return run(token, is_full_word).embedding;
}

}  // namespace c2sw
