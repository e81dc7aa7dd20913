#include "gfl/densela.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace gfl {

namespace {

constexpr int kMaxJacobiSweeps = 100;
constexpr double kJacobiTolerance = 1e-12;
constexpr double kSymmetryTolerance = 1e-10;
constexpr double kRankTolerance = 1e-10;

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument(std::string(who) + ": expected a square matrix, got " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()));
  }
}

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// Applies the Jacobi rotation that annihilates a(p, q) to both sides of a and
// accumulates it into v.
void rotate(Matrix& a, Matrix& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

template <class F>
Matrix spectral_map(const SpectralDecomposition& eig, F&& f) {
  const Vector mapped = eig.eigenvalues.unaryExpr(f);
  return eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.transpose();
}

double null_threshold(const SpectralDecomposition& eig, const char* who) {
  const double top = eig.eigenvalues.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) throw InvalidArgument(std::string(who) + ": matrix is identically zero");
  if (eig.smallest() < -1e-8 * top) {
    throw InvalidArgument(std::string(who) + ": matrix is not positive semidefinite");
  }
  return kNullSpaceTolerance * top;
}

}  // namespace

double SpectralDecomposition::smallest_nonzero() const {
  const double cut = kNullSpaceTolerance * eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) > cut) return eigenvalues(i);
  }
  throw NumericalError("spectrum has no eigenvalue above the null-space threshold");
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition sym_eig(const Matrix& input) {
  require_square(input, "sym_eig");
  const Eigen::Index n = input.rows();
  const double scale = input.norm();
  if ((input - input.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * std::max(scale, 1e-300)) {
    throw InvalidArgument("sym_eig: input is not symmetric");
  }

  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double target = kJacobiTolerance * scale;

  int sweep = 0;
  while (off_diagonal_norm(a) > target) {
    if (sweep++ == kMaxJacobiSweeps) {
      throw NumericalError("sym_eig: no convergence after " + std::to_string(kMaxJacobiSweeps) + " sweeps");
    }
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) != 0.0) rotate(a, v, p, q);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });

  SpectralDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = a(order[i], order[i]);
    out.eigenvectors.col(i) = v.col(order[i]);
  }
  return out;
}

std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::pinv: return "pinv";
    case TargetKind::sqrt_pinv: return "sqrt_pinv";
    case TargetKind::heat: return "heat";
    case TargetKind::top_k_eigvecs: return "top_k_eigvecs";
    case TargetKind::bottom_k_eigvecs: return "bottom_k_eigvecs";
    case TargetKind::resistance: return "resistance";
  }
  return "unknown";
}

TargetMatrix pinv_psd(const SpectralDecomposition& eig) {
  const double cut = null_threshold(eig, "pinv_psd");
  return {TargetKind::pinv, spectral_map(eig, [cut](double x) { return x > cut ? 1.0 / x : 0.0; })};
}

TargetMatrix pinv_psd(const Matrix& lap) { return pinv_psd(sym_eig(lap)); }

TargetMatrix sqrt_pinv(const SpectralDecomposition& eig) {
  const double cut = null_threshold(eig, "sqrt_pinv");
  return {TargetKind::sqrt_pinv, spectral_map(eig, [cut](double x) { return x > cut ? 1.0 / std::sqrt(x) : 0.0; })};
}

TargetMatrix sqrt_pinv(const Matrix& lap) { return sqrt_pinv(sym_eig(lap)); }

TargetMatrix heat_kernel(const SpectralDecomposition& eig, double s) {
  if (!(s > 0.0)) throw InvalidArgument("heat_kernel: temperature must be positive");
  TargetMatrix out{TargetKind::heat, spectral_map(eig, [s](double x) { return std::exp(-s * x); })};
  out.temperature = s;
  return out;
}

TargetMatrix heat_kernel(const Matrix& lap, double s) { return heat_kernel(sym_eig(lap), s); }

Matrix deflated_heat_kernel(const TargetMatrix& heat) {
  if (heat.kind != TargetKind::heat) throw InvalidArgument("deflated_heat_kernel: expected a heat kernel");
  const auto n = heat.entries.rows();
  return heat.entries - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
}

TargetMatrix effective_resistance(const TargetMatrix& pinv) {
  if (pinv.kind != TargetKind::pinv) throw InvalidArgument("effective_resistance: expected a pseudoinverse");
  const Matrix& p = pinv.entries;
  require_square(p, "effective_resistance");
  const auto n = p.rows();
  const Vector diag = p.diagonal();
  const Vector ones = Vector::Ones(n);
  Matrix r = ones * diag.transpose() + diag * ones.transpose() - 2.0 * p;
  r.diagonal().setZero();
  return {TargetKind::resistance, std::move(r)};
}

TargetMatrix top_k_eigvecs(const SpectralDecomposition& eig, int k) {
  const auto n = eig.eigenvalues.size();
  if (k < 1 || k > n) throw InvalidArgument("top_k_eigvecs: k out of range");
  TargetMatrix out{TargetKind::top_k_eigvecs, eig.eigenvectors.rightCols(k)};
  out.k = k;
  return out;
}

TargetMatrix bottom_k_eigvecs(const SpectralDecomposition& eig, int k) {
  const auto n = eig.eigenvalues.size();
  if (k < 1 || k > n) throw InvalidArgument("bottom_k_eigvecs: k out of range");
  TargetMatrix out{TargetKind::bottom_k_eigvecs, eig.eigenvectors.leftCols(k)};
  out.k = k;
  return out;
}

Matrix qr_ortho(const Matrix& a) {
  if (a.cols() > a.rows()) throw InvalidArgument("qr_ortho: more columns than rows");
  double largest = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) largest = std::max(largest, a.col(j).norm());
  if (!(largest > 0.0)) throw NumericalError("qr_ortho: input has no nonzero column");

  Matrix q = a;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    }
    const double norm = q.col(j).norm();
    if (norm <= kRankTolerance * largest) {
      throw NumericalError("qr_ortho: rank-deficient input at column " + std::to_string(j));
    }
    q.col(j) /= norm;
  }
  return q;
}

Matrix subspace_iteration_ref(const Matrix& a, const Matrix& phi0, int iters) {
  require_square(a, "subspace_iteration_ref");
  if (phi0.rows() != a.rows()) throw InvalidArgument("subspace_iteration_ref: shape mismatch");
  if (iters < 0) throw InvalidArgument("subspace_iteration_ref: negative iteration count");
  Matrix phi = phi0;
  for (int it = 0; it < iters; ++it) phi = qr_ortho(a * phi);
  return phi;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (a.rows() == a.cols() && (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    return sym_eig(a).eigenvalues.cwiseAbs().maxCoeff();
  }
  const Matrix gram = a.rows() < a.cols() ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
  return std::sqrt(std::max(0.0, sym_eig(gram).largest()));
}

Matrix column_projector(const Matrix& q) { return q * q.transpose(); }

}  // namespace gfl
