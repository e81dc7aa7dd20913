#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "gfl/transformer.hpp"

namespace gfl {

enum class TaskKind {
  electric_gd,
  sqrt_series,
  heat_series,
  electric_fast,
  heat_fast,
  subspace_top_k,
  subspace_bottom_k,
};

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> parse_task_kind(std::string_view name);

/// Parameters of one verification task. Unused fields are ignored by kinds
/// that do not need them.
struct TaskSpec {
  TaskKind kind = TaskKind::electric_gd;
  int layers = 1;
  double step = 0.0;             // delta: electric_gd, electric_fast
  double temperature = 0.5;      // s: heat kinds
  int k = 1;                     // demands / eigenvectors
  double shift = 0.0;            // mu: subspace_bottom_k
  double lambda_max_hint = 0.0;  // upper bound on the largest Laplacian eigenvalue

  /// Checks the construction preconditions against lambda_max_hint.
  void validate() const;
  bool is_subspace() const { return kind == TaskKind::subspace_top_k || kind == TaskKind::subspace_bottom_k; }

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Initial state plus layer stack.
struct Program {
  TransformerState initial;
  std::vector<LayerWeights> layers;
};

/// Z_0 = [B^T; Psi^T; 0].
TransformerState standard_input(const Matrix& incidence, const Matrix& psi);

/// Z_0 = [B^T; Phi_0^T].
TransformerState eigen_input(const Matrix& incidence, const Matrix& phi0);

/// Gradient descent on 1/2 phi^T L phi - phi^T psi: Phi <- Phi - step (L Phi - Psi) per layer.
std::vector<LayerWeights> electric_gd_weights(int d, int k, double step, int layers);

/// alpha_l = sqrt(step) binom(2l, l) / 4^l via alpha_{l+1} = alpha_l (2l+1)/(2l+2).
std::vector<double> sqrt_series_coefficients(double step, int count);

/// alpha_l = (-s)^l / l! via alpha_{l+1} = alpha_l (-s)/(l+1).
std::vector<double> heat_series_coefficients(double s, int count);

/// Truncated binomial series for sqrt(L^+) Psi with step 1/lambda_max_hint.
std::vector<LayerWeights> sqrt_series_weights(int d, int k, double lambda_max_hint, int layers);

/// Truncated exponential series for exp(-s L) Psi.
std::vector<LayerWeights> heat_series_weights(int d, int k, double s, int layers);

/// Squaring construction: Gamma_l = (I_hat - step L)^(2^l),
/// Phi_L = step prod_{i<L} (I + Gamma_i) I_hat.
Program electric_fast_build(const Matrix& lap, double step, int layers);

/// Cubing construction: Z_0 = I - 3^{-L} s L, Z_{l+1} = Z_l^3.
Program heat_fast_build(const Matrix& lap, double s, int layers);

/// Orthogonalises Phi column `column` (0-based) against every later column;
/// forward_eig then renormalises it.
LayerWeights ortho_layer_weights(const BlockLayout& layout, int column);

enum class SubspaceMode { top, bottom };

/// Multiply layer: Phi <- L Phi (top) or (shift I - L) Phi (bottom).
LayerWeights subspace_multiply_weights(const BlockLayout& layout, SubspaceMode mode, double shift);

/// total_layers / (k+1) units of one multiply layer followed by ortho layers
/// for columns k-1 down to 0. Each unit is one subspace iteration whose QR runs
/// in reversed column order.
std::vector<LayerWeights> subspace_weights(const BlockLayout& layout, int total_layers, SubspaceMode mode,
                                           double shift = 0.0);

/// Efficient-dynamics weights reproducing the full construction for task.kind
/// layer by layer (Phi blocks are 2k x 2k). Throws for electric_fast and heat_fast.
std::vector<EfficientLayerWeights> efficient_config(const TaskSpec& task);

}  // namespace gfl
