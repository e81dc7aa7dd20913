#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gfl/graph.hpp"

namespace gfl {

/// Named row blocks of the activation matrix Z (h x n, one column per vertex).
enum class Block { incidence, lambda, phi, gamma, whole };

std::string_view to_string(Block b);

struct BlockRange {
  Block name;
  int begin = 0;  // first row, 0-based
  int size = 0;
  int end() const { return begin + size; }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

/// Ordered partition of the rows of Z into named blocks.
class BlockLayout {
 public:
  /// rows [B^T; Psi^T; Phi^T]: d + k + k.
  static BlockLayout standard(int d, int k);
  /// rows [B^T; Phi^T]: d + k, used by the eigenvector dynamics.
  static BlockLayout eigen(int d, int k);
  /// rows [Gamma^T; Lambda^T; Phi^T]: three n-row blocks.
  static BlockLayout triple(int n);
  /// a single n-row block.
  static BlockLayout single(int n);
  /// Arbitrary layout; blocks must be non-empty, distinct and contiguous from row 0.
  static BlockLayout from_blocks(std::vector<BlockRange> blocks);

  int height() const;
  const std::vector<BlockRange>& blocks() const { return blocks_; }
  bool has(Block b) const;
  const BlockRange& at(Block b) const;

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;

 private:
  explicit BlockLayout(std::vector<BlockRange> blocks) : blocks_(std::move(blocks)) {}
  std::vector<BlockRange> blocks_;
};

struct TransformerState {
  Matrix z;
  BlockLayout layout;

  Matrix block(Block b) const;
};

/// One layer of the full dynamics. `query_key` stores the product (W^Q)^T W^K.
struct LayerWeights {
  Matrix value;
  Matrix query_key;
  Matrix residual;

  static LayerWeights zeros(int h);
  int height() const { return static_cast<int>(value.rows()); }
};

/// W^V Z Z^T (W^Q)^T W^K Z, evaluated right to left so no h x h Gram matrix of Z is formed.
Matrix attention(const Matrix& z, const LayerWeights& w);

/// Z_{l+1} = Z_l + Attn(Z_l) + W^R Z_l for every layer. With normalize_blocks the
/// first block and the union of the remaining blocks are each rescaled to unit
/// Frobenius norm after every layer. Returns Z_0 .. Z_L.
std::vector<TransformerState> forward(const TransformerState& z0, std::span<const LayerWeights> weights,
                                      bool normalize_blocks = false);

/// As forward, but after every layer each row of the Phi block is rescaled to
/// unit Euclidean norm; rows with norm below 1e-15 are left as they are.
std::vector<TransformerState> forward_eig(const TransformerState& z0, std::span<const LayerWeights> weights);

/// One layer of the parameter-efficient dynamics; the Phi blocks are m x m with m = 2k.
struct EfficientLayerWeights {
  double alpha_value = 0.0;
  double alpha_query = 0.0;
  double alpha_key = 0.0;
  double alpha_residual = 0.0;
  Matrix value_phi;
  Matrix query_phi;
  Matrix key_phi;
  Matrix residual_phi;

  static EfficientLayerWeights zeros(int m);
  int phi_height() const { return static_cast<int>(value_phi.rows()); }
};

/// Trajectory of the efficient dynamics; entry l holds B_l^T (d x n) and Phi_l^T (m x n).
struct EfficientTrajectory {
  std::vector<Matrix> incidence;
  std::vector<Matrix> phi;

  const Matrix& final_incidence() const { return incidence.back(); }
  const Matrix& final_phi() const { return phi.back(); }
};

/// B^T <- (1 + a_R) B^T + a_V B^T S,  Phi^T <- (I + W^{R,Phi}) Phi^T + W^{V,Phi} Phi^T S,
/// S = a_Q a_K B B^T + Phi (W^{Q,Phi})^T W^{K,Phi} Phi^T.
/// When normalize_rows is set, those rows of Phi^T are rescaled to unit norm after every
/// layer (the eigenvector variant); zero rows pass through.
EfficientTrajectory efficient_forward(const Matrix& incidence_t, const Matrix& phi_t,
                                      std::span<const EfficientLayerWeights> weights,
                                      std::optional<BlockRange> normalize_rows = std::nullopt);

/// Block-diagonal embedding of an efficient layer into the full dynamics with h = d + m.
LayerWeights to_full(const EfficientLayerWeights& w, int d);

}  // namespace gfl
