#include "gfl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "gfl/densela.hpp"

namespace gfl {

namespace {

constexpr double kHintSlack = 1e-12;
// Demands with |<psi_i, 1>| above this fraction of ||psi_i|| count as uncentred.
constexpr double kCentredTolerance = 1e-10;

double max_column_norm(const Matrix& m) {
  double out = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out = std::max(out, m.col(j).norm());
  return out;
}

double symmetric_operator_norm(const Matrix& e) { return spectral_norm(0.5 * (e + e.transpose())); }

Matrix heat_or_identity(const SpectralDecomposition& eig, double s) {
  if (s == 0.0) return Matrix::Identity(eig.eigenvalues.size(), eig.eigenvalues.size());
  return heat_kernel(eig, s).entries;
}

std::optional<double> safe_loss_u(const Matrix& p, const Matrix& t) {
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    if (p.col(j).norm() == 0.0 || t.col(j).norm() == 0.0) return std::nullopt;
  }
  return loss_u(p, t);
}

struct Context {
  const Matrix& incidence;
  const Matrix& lap;
  const SpectralDecomposition& eig;
  const TaskSpec& task;
  Engine engine;
  bool bounds_apply;
  double lambda_min;
};

std::optional<double> gated_bound(const Context& c, double psi_norm, int layer) {
  if (!c.bounds_apply) return std::nullopt;
  return bound(c.task, c.lambda_min, c.task.lambda_max_hint, psi_norm, layer);
}

bool centred(const Matrix& psi) {
  for (Eigen::Index j = 0; j < psi.cols(); ++j) {
    if (std::abs(psi.col(j).sum()) > kCentredTolerance * psi.col(j).norm()) {
      return false;
    }
  }
  return true;
}

std::vector<LayerResult> run_demand_task(const Context& c, const Matrix& psi) {
  const auto& task = c.task;
  const int k = static_cast<int>(psi.cols());
  const int d = static_cast<int>(c.incidence.cols());

  Matrix target;
  switch (task.kind) {
    case TaskKind::electric_gd: target = pinv_psd(c.eig).entries * psi; break;
    case TaskKind::sqrt_series: target = sqrt_pinv(c.eig).entries * psi; break;
    default: target = heat_or_identity(c.eig, task.temperature) * psi; break;
  }

  std::vector<Matrix> phis;  // n x k, index = layer
  if (c.engine == Engine::full) {
    std::vector<LayerWeights> weights;
    switch (task.kind) {
      case TaskKind::electric_gd: weights = electric_gd_weights(d, k, task.step, task.layers); break;
      case TaskKind::sqrt_series: weights = sqrt_series_weights(d, k, task.lambda_max_hint, task.layers); break;
      default: weights = heat_series_weights(d, k, task.temperature, task.layers); break;
    }
    for (const auto& state : forward(standard_input(c.incidence, psi), weights)) {
      phis.push_back(state.block(Block::phi).transpose());
    }
  } else {
    Matrix phi_t = Matrix::Zero(2 * k, c.incidence.rows());
    phi_t.topRows(k) = psi.transpose();
    const auto traj = efficient_forward(c.incidence.transpose(), phi_t, efficient_config(task));
    for (const auto& p : traj.phi) phis.push_back(p.bottomRows(k).transpose());
  }

  const double psi_norm = max_column_norm(psi);
  // The electric and square-root bounds assume demands orthogonal to 1; the
  // constant component is never removed, so no bound applies otherwise.
  const bool needs_centred = task.kind != TaskKind::heat_series;
  const bool applies = !needs_centred || centred(psi);
  std::vector<LayerResult> out;
  for (int l = 1; l <= task.layers; ++l) {
    const Matrix& phi = phis[static_cast<std::size_t>(l)];
    out.push_back({l, max_column_norm(phi - target), applies ? gated_bound(c, psi_norm, l) : std::nullopt,
                   safe_loss_u(phi, target)});
  }
  return out;
}

std::vector<LayerResult> run_electric_fast(const Context& c) {
  const Matrix target = pinv_psd(c.eig).entries;
  const auto program = electric_fast_build(c.lap, c.task.step, c.task.layers);
  const auto states = forward(program.initial, program.layers);
  std::vector<LayerResult> out;
  for (int l = 1; l <= c.task.layers; ++l) {
    const Matrix phi = states[static_cast<std::size_t>(l)].block(Block::phi).transpose();
    out.push_back({l, symmetric_operator_norm(phi - target), gated_bound(c, 1.0, l), std::nullopt});
  }
  return out;
}

std::vector<LayerResult> run_heat_fast(const Context& c) {
  const Matrix target = heat_or_identity(c.eig, c.task.temperature);
  std::vector<LayerResult> out;
  // Z_0 depends on L, so every depth is its own program.
  for (int l = 1; l <= c.task.layers; ++l) {
    const auto program = heat_fast_build(c.lap, c.task.temperature, l);
    const auto states = forward(program.initial, program.layers);
    out.push_back({l, symmetric_operator_norm(states.back().z - target), gated_bound(c, 1.0, l), std::nullopt});
  }
  return out;
}

std::vector<LayerResult> run_subspace(const Context& c, const Matrix& psi) {
  const auto& task = c.task;
  const int k = static_cast<int>(psi.cols());
  const auto n = c.incidence.rows();
  const bool top = task.kind == TaskKind::subspace_top_k;
  const Matrix phi0 = qr_ortho(psi);

  // Reversed-order QR leaves the dominant direction in the last column.
  const Matrix eigvecs = top ? top_k_eigvecs(c.eig, k).entries
                             : Matrix(bottom_k_eigvecs(c.eig, k).entries.rowwise().reverse());
  const Matrix op = top ? c.lap : Matrix(task.shift * Matrix::Identity(n, n) - c.lap);

  std::vector<Matrix> phis;
  if (c.engine == Engine::full) {
    const auto z0 = eigen_input(c.incidence, phi0);
    const auto weights =
        subspace_weights(z0.layout, task.layers, top ? SubspaceMode::top : SubspaceMode::bottom, task.shift);
    for (const auto& state : forward_eig(z0, weights)) phis.push_back(state.block(Block::phi).transpose());
  } else {
    Matrix phi_t = Matrix::Zero(2 * k, n);
    phi_t.bottomRows(k) = phi0.transpose();
    const auto traj =
        efficient_forward(c.incidence.transpose(), phi_t, efficient_config(task), BlockRange{Block::phi, k, k});
    for (const auto& p : traj.phi) phis.push_back(p.bottomRows(k).transpose());
  }

  std::vector<LayerResult> out;
  Matrix reference = phi0;
  for (int l = k + 1; l <= task.layers; l += k + 1) {
    reference = qr_ortho(op * reference);
    const Matrix& phi = phis[static_cast<std::size_t>(l)];
    out.push_back({l, projector_distance(phi, reference), kSubspaceTolerance, loss_eig(phi, eigvecs).mean()});
  }
  return out;
}

}  // namespace

std::string_view to_string(Engine e) { return e == Engine::full ? "full" : "efficient"; }

std::optional<double> bound(const TaskSpec& task, double lambda_min, double lambda_max, double psi_norm, int layer) {
  if (layer < 0 || !(psi_norm >= 0.0) || !(lambda_max > 0.0)) return std::nullopt;
  const double l = layer;
  const double s = task.temperature;
  switch (task.kind) {
    case TaskKind::electric_gd:
      if (!(lambda_min > 0.0) || !(task.step > 0.0) || task.step * lambda_max > 1.0 + kHintSlack) return std::nullopt;
      return std::exp(-task.step * l * lambda_min / 2.0) / std::sqrt(lambda_min) * psi_norm;
    case TaskKind::sqrt_series:
      if (!(lambda_min > 0.0) || layer < 1) return std::nullopt;
      return std::exp(-l * lambda_min / lambda_max) / (lambda_min * std::sqrt(l / lambda_max)) * psi_norm;
    case TaskKind::heat_series:
      if (!(s >= 0.0) || l < 8.0 * s * lambda_max) return std::nullopt;
      return std::exp2(-l + 8.0 * s * lambda_max + 1.0) * psi_norm;
    case TaskKind::electric_fast:
      if (!(lambda_min > 0.0) || !(task.step > 0.0) || task.step * lambda_max > 1.0 + kHintSlack) return std::nullopt;
      return std::exp(-task.step * std::ldexp(1.0, layer) * lambda_min) / lambda_min;
    case TaskKind::heat_fast:
      if (!(s >= 0.0) || s * lambda_max > std::pow(3.0, l)) return std::nullopt;
      return std::pow(3.0, -l + 1.0) * s * s * lambda_max * lambda_max;
    case TaskKind::subspace_top_k:
    case TaskKind::subspace_bottom_k:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<bool> LayerResult::satisfied() const {
  if (!bound) return std::nullopt;
  return error <= *bound * kBoundSlack;
}

bool ErrorReport::all_satisfied() const {
  if (failed()) return false;
  return std::none_of(layers.begin(), layers.end(), [](const LayerResult& r) { return r.satisfied() == false; });
}

std::optional<double> ErrorReport::worst_margin() const {
  std::optional<double> worst;
  for (const auto& r : layers) {
    if (!r.bound) continue;
    double margin;
    if (*r.bound > 0.0) {
      margin = r.error / *r.bound;
    } else {
      margin = r.error == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst.value_or(margin), margin);
  }
  return worst;
}

ErrorReport run_task(const Graph& g, const TaskSpec& task_in, const DemandSet& demands, Engine engine) {
  const std::string who = "run_task(" + std::string(to_string(task_in.kind)) + "): ";
  if (!g.is_connected()) throw InvalidArgument(who + "graph is not connected");

  const Matrix incidence = build_incidence(g);
  const Matrix lap = laplacian(incidence);
  const auto eig = sym_eig(lap);

  TaskSpec task = task_in;
  if (task.lambda_max_hint == 0.0) task.lambda_max_hint = eig.largest();
  const bool uses_demands = task.kind != TaskKind::electric_fast && task.kind != TaskKind::heat_fast;
  if (uses_demands) {
    if (demands.num_vertices() != g.num_vertices()) {
      throw InvalidArgument(who + "demands have " + std::to_string(demands.num_vertices()) + " rows, graph has " +
                            std::to_string(g.num_vertices()) + " vertices");
    }
    if (demands.count() != task.k) {
      throw InvalidArgument(who + "task.k = " + std::to_string(task.k) + " but " + std::to_string(demands.count()) +
                            " demand columns were given");
    }
  }
  task.validate();
  if (engine == Engine::efficient && !uses_demands) {
    throw InvalidArgument(who + "no efficient-dynamics form; use the full engine");
  }

  ErrorReport report;
  report.task = task;
  report.engine = engine;
  report.metadata.lambda_min = eig.smallest_nonzero();
  report.metadata.lambda_max = eig.largest();
  report.metadata.n = g.num_vertices();
  report.metadata.d = g.num_edges();

  // A hint below the true lambda_max voids every bound.
  const bool hint_ok = task.lambda_max_hint >= eig.largest() * (1.0 - kHintSlack);
  const Context c{incidence, lap, eig, task, engine, hint_ok, report.metadata.lambda_min};

  try {
    switch (task.kind) {
      case TaskKind::electric_gd:
      case TaskKind::sqrt_series:
      case TaskKind::heat_series: report.layers = run_demand_task(c, demands.psi); break;
      case TaskKind::electric_fast: report.layers = run_electric_fast(c); break;
      case TaskKind::heat_fast: report.layers = run_heat_fast(c); break;
      case TaskKind::subspace_top_k:
      case TaskKind::subspace_bottom_k: report.layers = run_subspace(c, demands.psi); break;
    }
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(who + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(who + e.what());
  }
  return report;
}

double loss_u(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw InvalidArgument("loss_u: shape mismatch");
  }
  const auto k = predictions.cols();
  if (k == 0) throw InvalidArgument("loss_u: no columns");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double pn = predictions.col(i).norm();
    const double tn = targets.col(i).norm();
    if (pn == 0.0 || tn == 0.0) throw InvalidArgument("loss_u: zero column " + std::to_string(i));
    sum += (predictions.col(i) / pn - targets.col(i) / tn).squaredNorm();
  }
  return sum / static_cast<double>(k);
}

EigenLoss loss_eig(const Matrix& phi, const Matrix& eigvecs) {
  if (phi.rows() != eigvecs.rows() || phi.cols() != eigvecs.cols()) {
    throw InvalidArgument("loss_eig: shape mismatch");
  }
  EigenLoss out;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < phi.cols(); ++i) {
    const double loss = std::min((phi.col(i) - eigvecs.col(i)).squaredNorm(), (phi.col(i) + eigvecs.col(i)).squaredNorm());
    out.per_column.push_back(loss);
    sum += loss;
    out.running_mean.push_back(sum / static_cast<double>(i + 1));
  }
  return out;
}

double projector_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("projector_distance: row counts differ");
  return symmetric_operator_norm(column_projector(a) - column_projector(b));
}

EquivarianceVerdict check_equivariance(const Graph& g, std::span<const EfficientLayerWeights> config,
                                       std::span<const int> edge_perm, const Matrix& phi0_t, double tol) {
  const Graph permuted = g.permuted(edge_perm);
  const auto base = efficient_forward(build_incidence(g).transpose(), phi0_t, config);
  const auto moved = efficient_forward(build_incidence(permuted).transpose(), phi0_t, config);

  auto relative = [](const Matrix& diff, const Matrix& ref) {
    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
    return diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff() / scale;
  };

  EquivarianceVerdict verdict;
  for (std::size_t l = 0; l < base.phi.size(); ++l) {
    const Matrix& bt = base.incidence[l];
    Matrix expected(bt.rows(), bt.cols());
    for (std::size_t j = 0; j < edge_perm.size(); ++j) {
      expected.row(static_cast<Eigen::Index>(j)) = bt.row(edge_perm[j]);
    }
    const double dev = std::max(relative(moved.incidence[l] - expected, expected),
                                relative(moved.phi[l] - base.phi[l], base.phi[l]));
    verdict.max_deviation = std::max(verdict.max_deviation, dev);
    if (dev > tol && verdict.pass) {
      verdict.pass = false;
      verdict.first_violation = static_cast<int>(l);
    }
  }
  return verdict;
}

}  // namespace gfl
