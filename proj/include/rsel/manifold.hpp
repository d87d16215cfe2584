#pragma once

#include <span>
#include <vector>

#include "rsel/spd.hpp"

namespace rsel {

// Parameters of the Frechet-mean fixed-point iteration.
struct FrechetConfig {
  double step = 1.0;   // in (0, 2]
  double tol = 1e-8;   // Frobenius norm of the mean tangent at convergence
  int max_iter = 50;
};

struct FrechetResult {
  SpdMatrix mean;
  int iterations = 0;
  double residual = 0.0;  // || mean tangent ||_F at the returned iterate
  bool converged = false;
};

// Frechet (Karcher) mean: the SPD point minimizing the sum of squared
// Riemannian distances to the inputs. Gradient descent in the manifold,
//   G <- G^{1/2} exp(step * mean_i log(G^{-1/2} S_i G^{-1/2})) G^{1/2},
// initialized at the arithmetic mean, with step halving (at most 10 per
// iteration) whenever the dispersion objective would increase. Does not
// throw on non-convergence; the best iterate is returned with its residual.
FrechetResult frechet_mean_full(std::span<const SpdMatrix> mats,
                                const FrechetConfig& cfg = {});

SpdMatrix frechet_mean(std::span<const SpdMatrix> mats,
                       const FrechetConfig& cfg = {});

// Congruence recentering: S_i -> R^{-1/2} S_i R^{-1/2}. When R is the
// Frechet mean of the list, the recentered list has mean identity.
std::vector<SpdMatrix> recenter(std::span<const SpdMatrix> mats,
                                const SpdMatrix& reference);

// Whitened logarithmic map: log(base^{-1/2} S base^{-1/2}). Its Frobenius
// norm equals the Riemannian distance from S to base.
SymmetricMatrix tangent_map(const SpdMatrix& s, const SpdMatrix& base);

// Inverse of tangent_map: base^{1/2} exp(T) base^{1/2}.
SpdMatrix tangent_unmap(const SymmetricMatrix& t, const SpdMatrix& base);

// Euclidean image of a tangent-space symmetric matrix: upper triangle in
// row-major order with off-diagonal entries scaled by sqrt(2), so the
// vector 2-norm equals the Frobenius norm of the matrix.
struct TangentVector {
  int base_dim = 0;            // n
  std::vector<double> data;    // length n(n+1)/2
};

TangentVector vectorize(const SymmetricMatrix& s);
SymmetricMatrix unvectorize(const TangentVector& v);

inline int tangent_dim(int n) { return n * (n + 1) / 2; }

}  // namespace rsel
