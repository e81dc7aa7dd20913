#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfl/constructions.hpp"

namespace gfl {

/// Multiplier applied to a bound before comparing it with a measured error.
inline constexpr double kBoundSlack = 1.0 + 1e-6;

/// Projector-distance tolerance used as the per-unit check for the subspace tasks.
inline constexpr double kSubspaceTolerance = 1e-8;

enum class Engine { full, efficient };

std::string_view to_string(Engine e);

/// Closed-form error bound of the task at layer l, or nullopt when the
/// bound's preconditions do not hold (including every subspace task, which
/// has no closed-form rate).
std::optional<double> bound(const TaskSpec& task, double lambda_min, double lambda_max, double psi_norm, int layer);

struct LayerResult {
  int layer = 0;
  double error = 0.0;
  std::optional<double> bound;
  std::optional<double> loss;  // loss_U for the demand tasks, mean loss_eig for subspace tasks

  /// nullopt when no bound applies.
  std::optional<bool> satisfied() const;
};

struct ReportMetadata {
  std::uint64_t seed = 0;
  int trial = 0;
  std::string prng{kPrngName};
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int n = 0;
  int d = 0;
};

struct ErrorReport {
  TaskSpec task;
  Engine engine = Engine::full;
  std::vector<LayerResult> layers;
  ReportMetadata metadata;
  std::string failure;  // set when the trial aborted; layers is then empty

  bool failed() const { return !failure.empty(); }
  /// True when no applicable bound is violated and the trial did not fail.
  bool all_satisfied() const;
  /// max error / bound over applicable layers.
  std::optional<double> worst_margin() const;
};

/// Builds the task's weights, runs the chosen engine and compares every layer
/// l = 1..L with the exact target.
///
/// Demand tasks measure max_i ||phi_i - t_i|| against bound * max_i ||psi_i||.
/// electric_gd and sqrt_series bounds apply only to demands orthogonal to 1;
/// electric_fast and heat_fast measure the operator norm against L^+ and
/// exp(-sL). Subspace tasks treat the demands as Phi_0 (orthonormalised),
/// report only unit boundaries, and measure ||Phi Phi^T - Q Q^T||_2 against the
/// reference subspace iteration with tolerance kSubspaceTolerance.
///
/// A zero lambda_max_hint is replaced by the oracle lambda_max. Metadata seed
/// and trial are left for the caller.
ErrorReport run_task(const Graph& g, const TaskSpec& task, const DemandSet& demands, Engine engine = Engine::full);

/// (1/k) sum_i || p_i/||p_i|| - t_i/||t_i|| ||^2.
double loss_u(const Matrix& predictions, const Matrix& targets);

struct EigenLoss {
  std::vector<double> per_column;  // min(||phi_i - v_i||^2, ||phi_i + v_i||^2)
  std::vector<double> running_mean;  // entry j averages columns 0..j
  double mean() const { return running_mean.empty() ? 0.0 : running_mean.back(); }
};

EigenLoss loss_eig(const Matrix& phi, const Matrix& eigvecs);

/// ||P_a - P_b||_2 for the orthogonal projectors onto span(a) and span(b);
/// both inputs must have orthonormal columns.
double projector_distance(const Matrix& a, const Matrix& b);

struct EquivarianceVerdict {
  bool pass = true;
  std::optional<int> first_violation;  // layer index
  double max_deviation = 0.0;
};

/// Runs the efficient dynamics on B and on the edge-permuted B U and checks
/// B-side equivariance and Phi-side invariance at every layer. Deviations are
/// measured entrywise, relative to max(1, largest entry).
EquivarianceVerdict check_equivariance(const Graph& g, std::span<const EfficientLayerWeights> config,
                                       std::span<const int> edge_perm, const Matrix& phi0_t, double tol = 1e-10);

}  // namespace gfl
