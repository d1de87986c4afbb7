#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "c2sw/numerics.hpp"
#include "c2sw/vocab.hpp"

namespace c2sw {

// The frozen |V| x d simulation target. There is no mutable access to the
// matrix once constructed.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws if any row has zero norm.
  explicit EmbeddingTable(Matrix matrix);

  // Text: "v d" header then v rows of d decimals. Binary: "EMBT", u32 v,
  // u32 d, row-major little-endian f32. Detected by the magic bytes.
  static EmbeddingTable parse(const std::string& bytes);
  static EmbeddingTable load(const std::filesystem::path& path);
  std::string to_text() const;
  std::string to_binary() const;

  std::size_t size() const { return matrix_.rows(); }
  std::size_t dim() const { return matrix_.cols(); }
  const Matrix& matrix() const { return matrix_; }
  std::span<const double> row(TokenId id) const { return matrix_.row(id); }
  double row_norm(TokenId id) const { return norms_[id]; }

  // FNV-1a over the raw payload bytes.
  std::uint64_t checksum() const;

 private:
  Matrix matrix_;
  std::vector<double> norms_;
};

using ScoredId = std::pair<TokenId, double>;

// Cosine between query and every row, the k best sorted by descending cosine
// then ascending id. Exact brute force.
std::vector<ScoredId> top_k_by_cosine(const EmbeddingTable& table, std::span<const double> query,
                                      std::size_t k);

// Per-row top-k lists (the row itself included).
struct NeighborIndex {
  std::size_t k = 0;
  std::vector<std::vector<TokenId>> neighbors;
};

NeighborIndex build_neighbor_index(const EmbeddingTable& table, std::size_t k);

struct LossWeights {
  double cos = 1.0;
  double ce = 1.0;
  double l2 = 1.0;
  double nbr = 1.0;
  // Use ||e - e_hat||^2 instead of the Euclidean distance.
  bool squared_l2 = false;

  void validate() const;
};

inline constexpr std::size_t kDefaultLossNeighbors = 5;

struct LossBreakdown {
  double cos = 0.0;
  double ce = 0.0;
  double l2 = 0.0;
  double nbr = 0.0;
  double total = 0.0;
};

double loss_cos(std::span<const double> e, std::span<const double> e_hat);
double loss_ce(TokenId target, std::span<const double> e_hat, const EmbeddingTable& table);
double loss_l2(std::span<const double> e, std::span<const double> e_hat, bool squared = false);
double loss_nbr(TokenId target, std::span<const double> e_hat, const EmbeddingTable& table,
                const NeighborIndex& index);

LossBreakdown combined_loss(TokenId target, std::span<const double> e,
                            std::span<const double> e_hat, const EmbeddingTable& table,
                            const NeighborIndex& index, const LossWeights& weights);

// d(total)/d(e_hat). The table only enters as a constant.
Vector combined_loss_gradient(TokenId target, std::span<const double> e,
                              std::span<const double> e_hat, const EmbeddingTable& table,
                              const NeighborIndex& index, const LossWeights& weights);

// Gradients of the individual terms, exposed for tests and the trainer.
Vector loss_cos_gradient(std::span<const double> e, std::span<const double> e_hat);
Vector loss_ce_gradient(TokenId target, std::span<const double> e_hat,
                        const EmbeddingTable& table);
Vector loss_l2_gradient(std::span<const double> e, std::span<const double> e_hat, bool squared);
Vector loss_nbr_gradient(TokenId target, std::span<const double> e_hat,
                         const EmbeddingTable& table, const NeighborIndex& index);

}  // namespace c2sw
