#pragma once

#include <string_view>

#include "gfl/graph.hpp"

namespace gfl {

/// Eigenvalues in ascending order; column i of `eigenvectors` pairs with eigenvalue i.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  double smallest() const { return eigenvalues(0); }
  double largest() const { return eigenvalues(eigenvalues.size() - 1); }
  /// Smallest eigenvalue above the null-space threshold (lambda_2 for a connected Laplacian).
  double smallest_nonzero() const;
  Matrix reconstruct() const;
};

/// Cyclic Jacobi; sweeps until the off-diagonal Frobenius norm is
/// <= 1e-12 ||A||_F, at most 100 sweeps.
SpectralDecomposition sym_eig(const Matrix& a);

/// Relative null-space threshold used by every pseudo-inverse style oracle.
inline constexpr double kNullSpaceTolerance = 1e-10;

enum class TargetKind { pinv, sqrt_pinv, heat, top_k_eigvecs, bottom_k_eigvecs, resistance };

std::string_view to_string(TargetKind kind);

struct TargetMatrix {
  TargetKind kind;
  Matrix entries;
  double temperature = 0.0;  // heat only
  int k = 0;                 // eigenvector kinds only
};

TargetMatrix pinv_psd(const Matrix& lap);
TargetMatrix pinv_psd(const SpectralDecomposition& eig);

/// U S^{-1/2} U^T over the nonzero spectrum.
TargetMatrix sqrt_pinv(const Matrix& lap);
TargetMatrix sqrt_pinv(const SpectralDecomposition& eig);

/// exp(-s L), including the constant direction.
TargetMatrix heat_kernel(const Matrix& lap, double s);
TargetMatrix heat_kernel(const SpectralDecomposition& eig, double s);

/// exp(-s L) - 1 1^T / n.
Matrix deflated_heat_kernel(const TargetMatrix& heat);

/// R = 1 l^T + l 1^T - 2 L^+ with l = diag(L^+).
TargetMatrix effective_resistance(const TargetMatrix& pinv);

/// Eigenvectors of the k largest / smallest eigenvalues, in ascending eigenvalue order.
TargetMatrix top_k_eigvecs(const SpectralDecomposition& eig, int k);
TargetMatrix bottom_k_eigvecs(const SpectralDecomposition& eig, int k);

/// Thin Q of A via modified Gram-Schmidt with one re-orthogonalisation pass.
/// Throws NumericalError when a column's residual falls below 1e-10 of the
/// largest column norm.
Matrix qr_ortho(const Matrix& a);

/// iters rounds of Phi <- qr_ortho(A Phi); iters = 0 returns phi0 unchanged.
Matrix subspace_iteration_ref(const Matrix& a, const Matrix& phi0, int iters);

/// Largest singular value, computed from the eigenvalues of A^T A (or of A itself when symmetric).
double spectral_norm(const Matrix& a);

/// Orthogonal projector onto span(Q) for Q with orthonormal columns.
Matrix column_projector(const Matrix& q);

}  // namespace gfl
