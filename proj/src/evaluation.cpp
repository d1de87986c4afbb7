#include "c2sw/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "c2sw/error.hpp"
#include "json.hpp"

namespace c2sw {

std::vector<Vector> predict_tokens(const Char2Subword& model, const Vocabulary& vocab,
                                   std::span<const TokenId> ids) {
  std::vector<Vector> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(model.embed(vocab.token(id), false));
  return out;
}

namespace {

void check_aligned(std::span<const Vector> predictions, std::span<const TokenId> ids) {
  if (predictions.size() != ids.size()) {
    throw Error("got " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(ids.size()) + " ids");
  }
}

}  // namespace

double accuracy(std::span<const Vector> predictions, std::span<const TokenId> ids,
                const EmbeddingTable& table) {
  check_aligned(predictions, ids);
  if (ids.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    TokenId best = 0;
    double best_score = dot(predictions[i], table.row(0));
    for (TokenId v = 1; v < table.size(); ++v) {
      const double s = dot(predictions[i], table.row(v));
      if (s > best_score) {
        best = v;
        best_score = s;
      }
    }
    if (best == ids[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ids.size());
}

PrecisionReport precision_at_k(std::span<const Vector> predictions, std::span<const TokenId> ids,
                               const EmbeddingTable& table, const NeighborIndex& index,
                               std::size_t k_max) {
  check_aligned(predictions, ids);
  if (k_max == 0) throw Error("precision depth must be at least 1");
  if (k_max > index.k) {
    throw Error("precision depth " + std::to_string(k_max) + " exceeds neighbor index depth " +
                std::to_string(index.k));
  }
  if (index.neighbors.size() != table.size()) throw Error("neighbor index does not match table");
  PrecisionReport report;
  report.precision.assign(k_max, 0.0);
  report.evaluated = ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& truth = index.neighbors.at(ids[i]);
    const auto predicted = top_k_by_cosine(table, predictions[i], k_max);
    for (std::size_t k = 1; k <= k_max; ++k) {
      std::size_t overlap = 0;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          if (truth[a] == predicted[b].first) {
            ++overlap;
            break;
          }
        }
      }
      report.precision[k - 1] += static_cast<double>(overlap) / static_cast<double>(k);
    }
  }
  if (!ids.empty()) {
    for (double& p : report.precision) p /= static_cast<double>(ids.size());
  }
  double sum = 0.0;
  for (double p : report.precision) sum += p;
  report.avg_precision = sum / static_cast<double>(k_max);
  return report;
}

PrecisionReport evaluate_model(const Char2Subword& model, const Vocabulary& vocab,
                               const EmbeddingTable& table, const NeighborIndex& index,
                               std::size_t k_max) {
  const std::vector<TokenId> ids = vocab.regular_ids();
  const auto predictions = predict_tokens(model, vocab, ids);
  for (const auto& p : predictions) {
    if (!all_finite(p)) throw NumericError("non-finite prediction during evaluation");
  }
  PrecisionReport report = precision_at_k(predictions, ids, table, index, k_max);
  report.accuracy = accuracy(predictions, ids, table);
  return report;
}

std::string PrecisionReport::to_text() const {
  std::string out = "evaluated=" + std::to_string(evaluated) + "\n";
  out += "accuracy=" + format_double(accuracy) + "\n";
  for (std::size_t k = 1; k <= precision.size(); ++k) {
    out += "prec@" + std::to_string(k) + "=" + format_double(precision[k - 1]) + "\n";
  }
  out += "avg_precision=" + format_double(avg_precision) + "\n";
  return out;
}

namespace {

double parse_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("precision report: bad value for " + key + ": '" + s + "'");
  }
  return v;
}

}  // namespace

PrecisionReport PrecisionReport::parse(const std::string& text) {
  PrecisionReport r;
  std::map<std::size_t, double> by_k;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("precision report: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "evaluated") {
      r.evaluated = static_cast<std::size_t>(parse_double(value, key));
    } else if (key == "accuracy") {
      r.accuracy = parse_double(value, key);
    } else if (key == "avg_precision") {
      r.avg_precision = parse_double(value, key);
    } else if (key.rfind("prec@", 0) == 0) {
      by_k[std::stoul(key.substr(5))] = parse_double(value, key);
    } else {
      throw Error("precision report: unknown key '" + key + "'");
    }
  }
  for (std::size_t k = 1; k <= by_k.size(); ++k) {
    if (!by_k.count(k)) throw Error("precision report: missing prec@" + std::to_string(k));
    r.precision.push_back(by_k[k]);
  }
  return r;
}

std::vector<Neighbor> neighbor_query(const Char2Subword& model, const EmbeddingTable& table,
                                     const Vocabulary& vocab, std::string_view input,
                                     bool is_full_word, std::size_t n) {
  if (n > table.size()) {
    throw Error("requested " + std::to_string(n) + " neighbors from a table of " +
                std::to_string(table.size()) + " rows");
  }
  if (n == 0) return {};
  const Vector e_hat = model.embed(input, is_full_word);
  std::vector<Neighbor> out;
  for (const auto& [id, cos] : top_k_by_cosine(table, e_hat, n)) {
    out.push_back({vocab.token(id), cos});
  }
  return out;
}

std::string SeqLengthStats::to_text() const {
  return "sentences=" + std::to_string(sentences) + "\nmean_words=" + format_double(mean_words) +
         "\nmax_words=" + std::to_string(max_words) + "\nmean_pieces=" +
         format_double(mean_pieces) + "\nmax_pieces=" + std::to_string(max_pieces) +
         "\nratio=" + format_double(ratio) + "\n";
}

SeqLengthStats seq_length_stats(std::span<const std::string> sentences, const Vocabulary& vocab) {
  SeqLengthStats s;
  std::size_t total_words = 0;
  std::size_t total_pieces = 0;
  for (const auto& sentence : sentences) {
    const auto words = whitespace_split(sentence);
    std::size_t pieces = 0;
    for (const auto& w : words) pieces += tokenize_word(vocab, w).size();
    total_words += words.size();
    total_pieces += pieces;
    s.max_words = std::max(s.max_words, words.size());
    s.max_pieces = std::max(s.max_pieces, pieces);
  }
  s.sentences = sentences.size();
  if (!sentences.empty()) {
    s.mean_words = static_cast<double>(total_words) / static_cast<double>(sentences.size());
    s.mean_pieces = static_cast<double>(total_pieces) / static_cast<double>(sentences.size());
  }
  if (total_words > 0) {
    s.ratio = static_cast<double>(total_pieces) / static_cast<double>(total_words);
  }
  return s;
}

std::string dump_attention(const Char2Subword& model, std::string_view input, bool is_full_word) {
  const CharSequence seq = model.sequence(input, is_full_word);
  const ForwardResult fwd = forward(model.config(), model.params(), seq.chars);
  nlohmann::ordered_json doc;
  doc["input"] = std::string(input);
  doc["is_full_word"] = is_full_word;
  std::vector<std::string> labels;
  for (int c : seq.chars) labels.push_back(model.alphabet().label(c));
  doc["chars"] = labels;
  doc["n_layers"] = model.config().n_layers;
  doc["n_heads"] = model.config().n_heads;
  auto maps = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < fwd.attention.size(); ++l) {
    for (std::size_t h = 0; h < fwd.attention[l].size(); ++h) {
      const Matrix& m = fwd.attention[l][h];
      auto rows = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back({{"char", labels[r]}, {"probs", std::vector<double>(row.begin(), row.end())}});
      }
      maps.push_back({{"layer", l}, {"head", h}, {"rows", rows}});
    }
  }
  doc["maps"] = maps;
  return doc.dump(1) + "\n";
}

std::vector<Perturbation> make_perturbations(const Vocabulary& vocab, std::span<const TokenId> ids,
                                             const NoiseConfig& config, std::size_t per_token,
                                             Rng& rng) {
  std::vector<Perturbation> out;
  if (config.enabled_ops.empty()) return out;
  for (TokenId id : ids) {
    const std::string& token = vocab.token(id);
    for (std::size_t i = 0; i < per_token; ++i) {
      const NoiseOp op = config.enabled_ops[std::uniform_int_distribution<std::size_t>(
          0, config.enabled_ops.size() - 1)(rng)];
      try {
        out.push_back({apply_op(token, op, rng, config), id, op});
      } catch (const NoiseError&) {
        continue;
      }
    }
  }
  return out;
}

double perturbation_robustness(const Char2Subword& model, const EmbeddingTable& table,
                               std::span<const Perturbation> perturbations) {
  if (perturbations.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : perturbations) {
    const Vector e_hat = model.embed(p.text, false);
    if (top_k_by_cosine(table, e_hat, 1).front().first == p.clean_id) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(perturbations.size());
}

}  // namespace c2sw
