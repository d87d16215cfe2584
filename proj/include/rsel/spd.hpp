#pragma once

#include <functional>
#include <vector>

#include "rsel/matrix.hpp"

namespace rsel {

// Result of a symmetric eigendecomposition: M == vectors * diag(values) *
// vectors^T with eigenvalues sorted descending and orthonormal columns.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;
};

// Cyclic Jacobi eigensolver for symmetric matrices. Unconditionally stable
// at the dimensions used here (a few hundred at most); sweep order is fixed,
// so results are bit-reproducible. Throws NoConvergence if the rotation
// budget is exhausted (>= 30*n^2 rotations).
EigenDecomposition eig_sym(const Matrix& m);

// Symmetric real matrix, not necessarily positive definite. Construction
// symmetrizes (M + M^T)/2 to absorb floating-point drift; asymmetry beyond
// 1e-12 relative to the largest entry (plus a 1e-14 absolute floor, so
// near-zero matrices made of rounding noise pass) is treated as a logic bug
// and rejected.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Matrix m);

  int dim() const noexcept { return mat_.rows(); }
  const Matrix& matrix() const noexcept { return mat_; }
  double operator()(int i, int j) const { return mat_(i, j); }

 private:
  Matrix mat_;
};

// Symmetric positive-definite matrix, the point type of the manifold.
// Construction symmetrizes, eigendecomposes, and rejects matrices whose
// smallest eigenvalue is <= dim * machine_epsilon * largest eigenvalue
// (the usual numerical-rank criterion). The decomposition is kept, so
// spectral maps on an existing SpdMatrix cost one reconstruction, not a
// fresh eigensolve. Immutable after construction.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);
  explicit SpdMatrix(const SymmetricMatrix& m) : SpdMatrix(m.matrix()) {}

  int dim() const noexcept { return mat_.rows(); }
  const Matrix& matrix() const noexcept { return mat_; }
  const EigenDecomposition& eigen() const noexcept { return eig_; }
  double operator()(int i, int j) const { return mat_(i, j); }

  static SpdMatrix identity(int n) { return SpdMatrix(Matrix::identity(n)); }

 private:
  friend SpdMatrix spd_from_eigen(std::vector<double> values,
                                  const Matrix& vectors);
  SpdMatrix() = default;

  Matrix mat_;
  EigenDecomposition eig_;
};

// Rebuilds an SpdMatrix from an already-known spectral decomposition
// (eigenvalues need not be sorted; all must be strictly positive).
SpdMatrix spd_from_eigen(std::vector<double> values, const Matrix& vectors);

// Sample covariance of a channels x samples feature matrix:
// S = X X^T / (T - 1), then (1-shrinkage) S + shrinkage (tr S / C) I.
// Throws NotPositiveDefinite when the shrunk estimate is rank deficient.
SpdMatrix scm(const Matrix& features, double shrinkage = 0.0);

// V f(lambda) V^T for a scalar function of the eigenvalues. Throws
// DomainError if f is non-finite at any eigenvalue.
SymmetricMatrix spd_map(const SpdMatrix& m,
                        const std::function<double(double)>& f);

SymmetricMatrix spd_log(const SpdMatrix& m);
SpdMatrix spd_sqrt(const SpdMatrix& m);
SpdMatrix spd_invsqrt(const SpdMatrix& m);
SpdMatrix spd_inverse(const SpdMatrix& m);

// Matrix exponential of a symmetric matrix; always SPD.
SpdMatrix sym_exp(const SymmetricMatrix& s);

// Affine-invariant Riemannian distance,
//   delta(A, B) = || log(A^{-1/2} B A^{-1/2}) ||_F
// computed from the log-eigenvalues of the whitened matrix.
double riemannian_distance(const SpdMatrix& a, const SpdMatrix& b);

// Same distance through the explicit matrix logarithm and its Frobenius
// norm. Kept as a separate code path so the two formulations can be checked
// against each other.
double riemannian_distance_logm(const SpdMatrix& a, const SpdMatrix& b);

}  // namespace rsel
