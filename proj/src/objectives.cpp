#include "c2sw/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "c2sw/binary_io.hpp"
#include "c2sw/error.hpp"
#include "c2sw/file_io.hpp"

namespace c2sw {

namespace {

constexpr std::string_view kTableMagic = "EMBT";

void check_target(TokenId target, const EmbeddingTable& table) {
  if (target >= table.size()) {
    throw Error("target id " + std::to_string(target) + " out of range for table of " +
                std::to_string(table.size()) + " rows");
  }
}

void check_dim(std::span<const double> v, const EmbeddingTable& table, const char* what) {
  if (v.size() != table.dim()) {
    throw Error(std::string(what) + " has dimension " + std::to_string(v.size()) +
                ", table has " + std::to_string(table.dim()));
  }
}

const std::vector<TokenId>& neighbors_of(TokenId target, const EmbeddingTable& table,
                                         const NeighborIndex& index) {
  if (index.neighbors.size() != table.size()) {
    throw Error("neighbor index covers " + std::to_string(index.neighbors.size()) +
                " rows but the table has " + std::to_string(table.size()));
  }
  check_target(target, table);
  return index.neighbors[target];
}

}  // namespace

EmbeddingTable::EmbeddingTable(Matrix matrix) : matrix_(std::move(matrix)) {
  norms_.resize(matrix_.rows());
  for (std::size_t i = 0; i < matrix_.rows(); ++i) {
    norms_[i] = norm(matrix_.row(i));
    if (norms_[i] == 0.0) throw Error("embedding table row " + std::to_string(i) + " has zero norm");
    if (!all_finite(matrix_.row(i))) {
      throw Error("embedding table row " + std::to_string(i) + " is not finite");
    }
  }
}

EmbeddingTable EmbeddingTable::parse(const std::string& bytes) {
  if (bytes.compare(0, kTableMagic.size(), kTableMagic) == 0) {
    binary::Reader in(bytes, "embedding table");
    in.take(kTableMagic.size());
    const std::size_t v = in.get<std::uint32_t>();
    const std::size_t d = in.get<std::uint32_t>();
    std::vector<double> data(v * d);
    for (double& x : data) x = static_cast<double>(in.get<float>());
    if (!in.at_end()) throw Error("embedding table: trailing bytes after payload");
    return EmbeddingTable(Matrix(v, d, std::move(data)));
  }
  std::istringstream in(bytes);
  std::size_t v = 0;
  std::size_t d = 0;
  if (!(in >> v >> d)) throw Error("embedding table: expected header 'v d'");
  std::vector<double> data(v * d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(in >> data[i])) {
      throw Error("embedding table: row " + std::to_string(i / d) + " has fewer than " +
                  std::to_string(d) + " values");
    }
  }
  std::string extra;
  if (in >> extra) throw Error("embedding table: more values than the header declares");
  return EmbeddingTable(Matrix(v, d, std::move(data)));
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::string EmbeddingTable::to_text() const {
  std::string out = std::to_string(size()) + " " + std::to_string(dim()) + "\n";
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < dim(); ++j) {
      if (j) out += ' ';
      out += format_double(matrix_(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string EmbeddingTable::to_binary() const {
  std::string out(kTableMagic);
  binary::put(out, static_cast<std::uint32_t>(size()));
  binary::put(out, static_cast<std::uint32_t>(dim()));
  for (double v : matrix_.data()) binary::put(out, static_cast<float>(v));
  return out;
}

std::uint64_t EmbeddingTable::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(matrix_.data().data());
  for (std::size_t i = 0; i < matrix_.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<ScoredId> top_k_by_cosine(const EmbeddingTable& table, std::span<const double> query,
                                      std::size_t k) {
  check_dim(query, table, "query");
  const double qn = norm(query);
  if (qn == 0.0) throw Error("cannot rank neighbors of a zero-norm query");
  std::vector<ScoredId> scored(table.size());
  for (TokenId j = 0; j < table.size(); ++j) {
    const double c = std::clamp(dot(query, table.row(j)) / (qn * table.row_norm(j)), -1.0, 1.0);
    scored[j] = {j, c};
  }
  k = std::min(k, scored.size());
  auto better = [](const ScoredId& a, const ScoredId& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    better);
  scored.resize(k);
  return scored;
}

NeighborIndex build_neighbor_index(const EmbeddingTable& table, std::size_t k) {
  if (k > table.size()) {
    throw Error("neighbor count " + std::to_string(k) + " exceeds table size " +
                std::to_string(table.size()));
  }
  NeighborIndex index;
  index.k = k;
  index.neighbors.resize(table.size());
  for (TokenId i = 0; i < table.size(); ++i) {
    for (const auto& [id, score] : top_k_by_cosine(table, table.row(i), k)) {
      index.neighbors[i].push_back(id);
    }
  }
  return index;
}

void LossWeights::validate() const {
  for (double w : {cos, ce, l2, nbr}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("loss weights must be finite and >= 0");
  }
  if (cos == 0.0 && ce == 0.0 && l2 == 0.0 && nbr == 0.0) {
    throw Error("at least one loss weight must be positive");
  }
}

double loss_cos(std::span<const double> e, std::span<const double> e_hat) {
  return 1.0 - cosine_similarity(e, e_hat);
}

namespace {

// Softmax probabilities of e_hat . E^T.
Vector vocab_probabilities(std::span<const double> e_hat, const EmbeddingTable& table) {
  Vector logits(table.size());
  for (TokenId v = 0; v < table.size(); ++v) logits[v] = dot(e_hat, table.row(v));
  const double max = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max);
    total += z;
  }
  for (double& z : logits) z /= total;
  return logits;
}

}  // namespace

double loss_ce(TokenId target, std::span<const double> e_hat, const EmbeddingTable& table) {
  check_target(target, table);
  check_dim(e_hat, table, "prediction");
  Vector logits(table.size());
  for (TokenId v = 0; v < table.size(); ++v) logits[v] = dot(e_hat, table.row(v));
  const double max = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - max);
  return -(logits[target] - max - std::log(total));
}

double loss_l2(std::span<const double> e, std::span<const double> e_hat, bool squared) {
  if (e.size() != e_hat.size()) throw Error("loss_l2 dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += (e[i] - e_hat[i]) * (e[i] - e_hat[i]);
  return squared ? s : std::sqrt(s);
}

double loss_nbr(TokenId target, std::span<const double> e_hat, const EmbeddingTable& table,
                const NeighborIndex& index) {
  const auto& nbrs = neighbors_of(target, table, index);
  check_dim(e_hat, table, "prediction");
  if (nbrs.empty()) return 0.0;
  const auto e = table.row(target);
  double s = 0.0;
  for (TokenId n : nbrs) {
    const double dis_target = 1.0 - cosine_similarity(e, table.row(n));
    const double dis_pred = 1.0 - cosine_similarity(e_hat, table.row(n));
    s += (dis_target - dis_pred) * (dis_target - dis_pred);
  }
  return s / static_cast<double>(nbrs.size());
}

LossBreakdown combined_loss(TokenId target, std::span<const double> e,
                            std::span<const double> e_hat, const EmbeddingTable& table,
                            const NeighborIndex& index, const LossWeights& weights) {
  weights.validate();
  LossBreakdown out;
  out.cos = loss_cos(e, e_hat);
  out.ce = loss_ce(target, e_hat, table);
  out.l2 = loss_l2(e, e_hat, weights.squared_l2);
  out.nbr = loss_nbr(target, e_hat, table, index);
  out.total = weights.cos * out.cos + weights.ce * out.ce + weights.l2 * out.l2 +
              weights.nbr * out.nbr;
  return out;
}

Vector loss_cos_gradient(std::span<const double> e, std::span<const double> e_hat) {
  const double ne = norm(e);
  const double nh = norm(e_hat);
  if (ne == 0.0 || nh == 0.0) throw Error("cosine loss of a zero-norm vector");
  const double c = dot(e, e_hat) / (ne * nh);
  Vector g(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    g[i] = -(e[i] / (ne * nh) - c * e_hat[i] / (nh * nh));
  }
  return g;
}

Vector loss_ce_gradient(TokenId target, std::span<const double> e_hat,
                        const EmbeddingTable& table) {
  check_target(target, table);
  check_dim(e_hat, table, "prediction");
  const Vector p = vocab_probabilities(e_hat, table);
  Vector g(table.dim());
  for (TokenId v = 0; v < table.size(); ++v) {
    const auto row = table.row(v);
    const double w = p[v] - (v == target ? 1.0 : 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * row[i];
  }
  return g;
}

Vector loss_l2_gradient(std::span<const double> e, std::span<const double> e_hat, bool squared) {
  if (e.size() != e_hat.size()) throw Error("loss_l2 dimension mismatch");
  Vector g(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) g[i] = e_hat[i] - e[i];
  if (squared) {
    for (double& v : g) v *= 2.0;
    return g;
  }
  const double dist = norm(g);
  // The distance is not differentiable at e_hat == e; use 0 there.
  if (dist == 0.0) return Vector(e.size(), 0.0);
  for (double& v : g) v /= dist;
  return g;
}

Vector loss_nbr_gradient(TokenId target, std::span<const double> e_hat,
                         const EmbeddingTable& table, const NeighborIndex& index) {
  const auto& nbrs = neighbors_of(target, table, index);
  check_dim(e_hat, table, "prediction");
  Vector g(table.dim());
  if (nbrs.empty()) return g;
  const auto e = table.row(target);
  const double nh = norm(e_hat);
  if (nh == 0.0) throw Error("neighbor loss of a zero-norm prediction");
  const double scale = 2.0 / static_cast<double>(nbrs.size());
  for (TokenId n : nbrs) {
    const auto row = table.row(n);
    const double nn = table.row_norm(n);
    const double cos_pred = dot(e_hat, row) / (nh * nn);
    const double cos_target = cosine_similarity(e, row);
    // dis_target - dis_pred == cos_pred - cos_target
    const double w = scale * (cos_pred - cos_target);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += w * (row[i] / (nh * nn) - cos_pred * e_hat[i] / (nh * nh));
    }
  }
  return g;
}

Vector combined_loss_gradient(TokenId target, std::span<const double> e,
                              std::span<const double> e_hat, const EmbeddingTable& table,
                              const NeighborIndex& index, const LossWeights& weights) {
  weights.validate();
  check_dim(e, table, "target vector");
  check_dim(e_hat, table, "prediction");
  Vector g(e_hat.size(), 0.0);
  auto add = [&](double w, const Vector& part) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * part[i];
  };
  if (weights.cos > 0.0) add(weights.cos, loss_cos_gradient(e, e_hat));
  if (weights.ce > 0.0) add(weights.ce, loss_ce_gradient(target, e_hat, table));
  if (weights.l2 > 0.0) add(weights.l2, loss_l2_gradient(e, e_hat, weights.squared_l2));
  if (weights.nbr > 0.0) add(weights.nbr, loss_nbr_gradient(target, e_hat, table, index));
  return g;
}

}  // namespace c2sw
