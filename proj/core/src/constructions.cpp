#include "gfl/constructions.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "gfl/densela.hpp"

namespace gfl {

namespace {

constexpr std::array<std::pair<TaskKind, std::string_view>, 7> kTaskNames{{
    {TaskKind::electric_gd, "electric_gd"},
    {TaskKind::sqrt_series, "sqrt_series"},
    {TaskKind::heat_series, "heat_series"},
    {TaskKind::electric_fast, "electric_fast"},
    {TaskKind::heat_fast, "heat_fast"},
    {TaskKind::subspace_top_k, "subspace_top_k"},
    {TaskKind::subspace_bottom_k, "subspace_bottom_k"},
}};

// Relative slack when comparing a step or shift against lambda_max_hint, so that
// step = 1 / lambda_max passes despite round-off.
constexpr double kHintSlack = 1e-12;

void set_identity(Matrix& m, const BlockRange& rows, const BlockRange& cols, double value) {
  m.block(rows.begin, cols.begin, rows.size, cols.size).diagonal().setConstant(value);
}

void require_nonnegative_layers(int layers, const char* who) {
  if (layers < 0) throw InvalidArgument(std::string(who) + ": layer count must be non-negative");
}

// Lambda-to-Phi coupling shared by the two power-series constructions.
std::vector<LayerWeights> series_weights(int d, int k, const std::vector<double>& coefficients, double lambda_gain,
                                         double lambda_decay) {
  const auto layout = BlockLayout::standard(d, k);
  const auto& b = layout.at(Block::incidence);
  const auto& lam = layout.at(Block::lambda);
  const auto& phi = layout.at(Block::phi);

  std::vector<LayerWeights> out;
  out.reserve(coefficients.size());
  for (double alpha : coefficients) {
    LayerWeights w = LayerWeights::zeros(layout.height());
    set_identity(w.value, lam, lam, lambda_gain);
    set_identity(w.query_key, b, b, 1.0);
    if (lambda_decay != 0.0) set_identity(w.residual, lam, lam, lambda_decay);
    set_identity(w.residual, phi, lam, alpha);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  for (auto [k, name] : kTaskNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) {
  for (auto [k, n] : kTaskNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void TaskSpec::validate() const {
  const std::string who(to_string(kind));
  if (layers < 0) throw InvalidArgument(who + ": layer count must be non-negative");
  if (k < 1) throw InvalidArgument(who + ": k must be >= 1");
  if (lambda_max_hint < 0.0 || !std::isfinite(lambda_max_hint)) {
    throw InvalidArgument(who + ": lambda_max_hint must be finite and non-negative");
  }
  switch (kind) {
    case TaskKind::electric_gd:
    case TaskKind::electric_fast:
      if (!(step > 0.0)) throw InvalidArgument(who + ": step must be positive");
      if (lambda_max_hint > 0.0 && step * lambda_max_hint > 1.0 + kHintSlack) {
        throw InvalidArgument(who + ": step * lambda_max must not exceed 1");
      }
      break;
    case TaskKind::sqrt_series:
      // The step 1/lambda_max_hint is checked by the builders; a zero hint means "not yet known".
      break;
    case TaskKind::heat_series:
    case TaskKind::heat_fast:
      // Layer-count preconditions only gate the error bound; they are not rejected here.
      if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw InvalidArgument(who + ": temperature must be finite and non-negative");
      }
      break;
    case TaskKind::subspace_bottom_k:
      if (shift < lambda_max_hint * (1.0 - kHintSlack)) {
        throw InvalidArgument(who + ": shift mu must be >= lambda_max");
      }
      [[fallthrough]];
    case TaskKind::subspace_top_k:
      if (layers % (k + 1) != 0) {
        throw InvalidArgument(who + ": layer count must be a multiple of k+1");
      }
      break;
  }
}

TransformerState standard_input(const Matrix& incidence, const Matrix& psi) {
  if (incidence.rows() != psi.rows()) throw InvalidArgument("standard_input: B and Psi disagree on n");
  const auto d = static_cast<int>(incidence.cols());
  const auto k = static_cast<int>(psi.cols());
  auto layout = BlockLayout::standard(d, k);
  Matrix z = Matrix::Zero(layout.height(), incidence.rows());
  z.topRows(d) = incidence.transpose();
  z.middleRows(d, k) = psi.transpose();
  return {std::move(z), std::move(layout)};
}

TransformerState eigen_input(const Matrix& incidence, const Matrix& phi0) {
  if (incidence.rows() != phi0.rows()) throw InvalidArgument("eigen_input: B and Phi_0 disagree on n");
  const auto d = static_cast<int>(incidence.cols());
  const auto k = static_cast<int>(phi0.cols());
  auto layout = BlockLayout::eigen(d, k);
  Matrix z(layout.height(), incidence.rows());
  z.topRows(d) = incidence.transpose();
  z.bottomRows(k) = phi0.transpose();
  return {std::move(z), std::move(layout)};
}

std::vector<LayerWeights> electric_gd_weights(int d, int k, double step, int layers) {
  require_nonnegative_layers(layers, "electric_gd_weights");
  if (!(step >= 0.0)) throw InvalidArgument("electric_gd_weights: step must be non-negative");
  const auto layout = BlockLayout::standard(d, k);
  const auto& b = layout.at(Block::incidence);
  const auto& lam = layout.at(Block::lambda);
  const auto& phi = layout.at(Block::phi);

  LayerWeights w = LayerWeights::zeros(layout.height());
  set_identity(w.value, phi, phi, -step);
  set_identity(w.query_key, b, b, 1.0);
  set_identity(w.residual, phi, lam, step);
  return std::vector<LayerWeights>(static_cast<std::size_t>(layers), w);
}

std::vector<double> sqrt_series_coefficients(double step, int count) {
  if (!(step > 0.0)) throw InvalidArgument("sqrt_series_coefficients: step must be positive");
  std::vector<double> alpha;
  alpha.reserve(static_cast<std::size_t>(std::max(count, 0)));
  double a = std::sqrt(step);
  for (int l = 0; l < count; ++l) {
    alpha.push_back(a);
    a *= (2.0 * l + 1.0) / (2.0 * l + 2.0);
  }
  return alpha;
}

std::vector<double> heat_series_coefficients(double s, int count) {
  std::vector<double> alpha;
  alpha.reserve(static_cast<std::size_t>(std::max(count, 0)));
  double a = 1.0;
  for (int l = 0; l < count; ++l) {
    alpha.push_back(a);
    a *= -s / (l + 1.0);
  }
  return alpha;
}

std::vector<LayerWeights> sqrt_series_weights(int d, int k, double lambda_max_hint, int layers) {
  require_nonnegative_layers(layers, "sqrt_series_weights");
  if (!(lambda_max_hint > 0.0)) throw InvalidArgument("sqrt_series_weights: lambda_max_hint must be positive");
  const double step = 1.0 / lambda_max_hint;
  // Lambda <- (I - step L) Lambda, Phi <- Phi + alpha_l Lambda.
  return series_weights(d, k, sqrt_series_coefficients(step, layers), -step, 0.0);
}

std::vector<LayerWeights> heat_series_weights(int d, int k, double s, int layers) {
  require_nonnegative_layers(layers, "heat_series_weights");
  // Lambda <- L Lambda, Phi <- Phi + alpha_l Lambda.
  return series_weights(d, k, heat_series_coefficients(s, layers), 1.0, -1.0);
}

Program electric_fast_build(const Matrix& lap, double step, int layers) {
  require_nonnegative_layers(layers, "electric_fast_build");
  if (lap.rows() != lap.cols()) throw InvalidArgument("electric_fast_build: Laplacian must be square");
  if (!(step > 0.0)) throw InvalidArgument("electric_fast_build: step must be positive");
  const auto n = static_cast<int>(lap.rows());
  const Matrix centre = centering_projector(n);
  if (step * spectral_norm(lap) > 1.0 + kHintSlack) {
    throw InvalidArgument("electric_fast_build: step * lambda_max must not exceed 1");
  }

  auto layout = BlockLayout::triple(n);
  const auto& gamma = layout.at(Block::gamma);
  const auto& lam = layout.at(Block::lambda);
  const auto& phi = layout.at(Block::phi);

  Matrix z(layout.height(), n);
  z.middleRows(gamma.begin, n) = (centre - step * lap).transpose();
  z.middleRows(lam.begin, n) = Matrix::Identity(n, n);
  z.middleRows(phi.begin, n) = step * centre;

  LayerWeights w = LayerWeights::zeros(layout.height());
  set_identity(w.value, gamma, gamma, 1.0);
  set_identity(w.value, phi, phi, 1.0);
  set_identity(w.query_key, lam, gamma, 1.0);
  set_identity(w.residual, gamma, gamma, -1.0);

  return {{std::move(z), std::move(layout)}, std::vector<LayerWeights>(static_cast<std::size_t>(layers), w)};
}

Program heat_fast_build(const Matrix& lap, double s, int layers) {
  require_nonnegative_layers(layers, "heat_fast_build");
  if (lap.rows() != lap.cols()) throw InvalidArgument("heat_fast_build: Laplacian must be square");
  if (!(s >= 0.0)) throw InvalidArgument("heat_fast_build: temperature must be non-negative");
  const auto n = static_cast<int>(lap.rows());
  const double scale = s / std::pow(3.0, layers);

  LayerWeights w{Matrix::Identity(n, n), Matrix::Identity(n, n), -Matrix::Identity(n, n)};
  return {{Matrix::Identity(n, n) - scale * lap, BlockLayout::single(n)},
          std::vector<LayerWeights>(static_cast<std::size_t>(layers), w)};
}

LayerWeights ortho_layer_weights(const BlockLayout& layout, int column) {
  const auto& phi = layout.at(Block::phi);
  if (column < 0 || column >= phi.size) {
    throw InvalidArgument("ortho_layer_weights: column " + std::to_string(column) + " out of range [0, " +
                          std::to_string(phi.size) + ")");
  }
  LayerWeights w = LayerWeights::zeros(layout.height());
  w.value(phi.begin + column, phi.begin + column) = -1.0;
  for (int j = column + 1; j < phi.size; ++j) w.query_key(phi.begin + j, phi.begin + j) = 1.0;
  return w;
}

LayerWeights subspace_multiply_weights(const BlockLayout& layout, SubspaceMode mode, double shift) {
  const auto& b = layout.at(Block::incidence);
  const auto& phi = layout.at(Block::phi);
  LayerWeights w = LayerWeights::zeros(layout.height());
  set_identity(w.query_key, b, b, 1.0);
  if (mode == SubspaceMode::top) {
    set_identity(w.value, phi, phi, 1.0);
    set_identity(w.residual, phi, phi, -1.0);
  } else {
    set_identity(w.value, phi, phi, -1.0);
    set_identity(w.residual, phi, phi, shift - 1.0);
  }
  return w;
}

std::vector<LayerWeights> subspace_weights(const BlockLayout& layout, int total_layers, SubspaceMode mode,
                                           double shift) {
  const int k = layout.at(Block::phi).size;
  if (total_layers < 0 || total_layers % (k + 1) != 0) {
    throw InvalidArgument("subspace_weights: layer count " + std::to_string(total_layers) +
                          " is not a multiple of k+1 = " + std::to_string(k + 1));
  }
  std::vector<LayerWeights> unit;
  unit.reserve(static_cast<std::size_t>(k) + 1);
  unit.push_back(subspace_multiply_weights(layout, mode, shift));
  for (int c = k - 1; c >= 0; --c) unit.push_back(ortho_layer_weights(layout, c));

  std::vector<LayerWeights> out;
  out.reserve(static_cast<std::size_t>(total_layers));
  for (int u = 0; u < total_layers / (k + 1); ++u) out.insert(out.end(), unit.begin(), unit.end());
  return out;
}

std::vector<EfficientLayerWeights> efficient_config(const TaskSpec& task) {
  task.validate();
  const int k = task.k;
  const int m = 2 * k;
  const auto layers = static_cast<std::size_t>(task.layers);

  // Phi^T of the efficient dynamics stacks [Lambda^T; Phi^T] of the full one.
  auto upper_left = [k](Matrix& w, double v) { w.topLeftCorner(k, k).diagonal().setConstant(v); };
  auto lower_left = [k](Matrix& w, double v) { w.bottomLeftCorner(k, k).diagonal().setConstant(v); };
  auto lower_right = [k](Matrix& w, double v) { w.bottomRightCorner(k, k).diagonal().setConstant(v); };

  EfficientLayerWeights base = EfficientLayerWeights::zeros(m);
  base.alpha_query = 1.0;
  base.alpha_key = 1.0;

  std::vector<EfficientLayerWeights> out;
  switch (task.kind) {
    case TaskKind::electric_gd: {
      lower_right(base.value_phi, -task.step);
      lower_left(base.residual_phi, task.step);
      out.assign(layers, base);
      break;
    }
    case TaskKind::sqrt_series: {
      if (!(task.lambda_max_hint > 0.0)) throw InvalidArgument("sqrt_series: needs a positive lambda_max_hint");
      const double step = 1.0 / task.lambda_max_hint;
      upper_left(base.value_phi, -step);
      for (double alpha : sqrt_series_coefficients(step, task.layers)) {
        EfficientLayerWeights w = base;
        lower_left(w.residual_phi, alpha);
        out.push_back(std::move(w));
      }
      break;
    }
    case TaskKind::heat_series: {
      upper_left(base.value_phi, 1.0);
      upper_left(base.residual_phi, -1.0);
      for (double alpha : heat_series_coefficients(task.temperature, task.layers)) {
        EfficientLayerWeights w = base;
        lower_left(w.residual_phi, alpha);
        out.push_back(std::move(w));
      }
      break;
    }
    case TaskKind::subspace_top_k:
    case TaskKind::subspace_bottom_k: {
      EfficientLayerWeights multiply = base;
      if (task.kind == TaskKind::subspace_top_k) {
        lower_right(multiply.value_phi, 1.0);
        lower_right(multiply.residual_phi, -1.0);
      } else {
        lower_right(multiply.value_phi, -1.0);
        lower_right(multiply.residual_phi, task.shift - 1.0);
      }
      std::vector<EfficientLayerWeights> unit{multiply};
      for (int c = k - 1; c >= 0; --c) {
        // Orthogonalisation only sees the Phi Gram matrix, so the B B^T term is switched off.
        EfficientLayerWeights w = EfficientLayerWeights::zeros(m);
        w.value_phi(k + c, k + c) = -1.0;
        for (int j = c + 1; j < k; ++j) {
          w.query_phi(k + j, k + j) = 1.0;
          w.key_phi(k + j, k + j) = 1.0;
        }
        unit.push_back(std::move(w));
      }
      for (std::size_t u = 0; u < layers / unit.size(); ++u) out.insert(out.end(), unit.begin(), unit.end());
      break;
    }
    case TaskKind::electric_fast:
    case TaskKind::heat_fast:
      throw InvalidArgument(std::string(to_string(task.kind)) +
                            " uses the triple/single state layout and has no efficient-dynamics form");
  }
  return out;
}

}  // namespace gfl
