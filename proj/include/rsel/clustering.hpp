#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rsel/rng.hpp"
#include "rsel/spd.hpp"

namespace rsel {

// Gaussian affinity over pairwise Riemannian distances between subject
// means: A_ij = exp(-d^2(i,j)/sigma^2) off the diagonal, A_ii = 0.
struct AffinityMatrix {
  Matrix data;
  double sigma = 0.5;

  int n() const noexcept { return data.rows(); }
};

AffinityMatrix affinity(std::span<const SpdMatrix> means, double sigma);

// D^{-1/2} A D^{-1/2} with D = diag(row sums). Throws IsolatedSubject when
// some row sum is zero (a subject with no affinity to anyone); callers that
// tolerate isolation must strip such rows first.
SymmetricMatrix normalize_affinity(const AffinityMatrix& a);

// Number of eigenvalues of the normalized affinity that are approximately
// unity: count of values >= 1 - tau, clamped to [1, n_subjects].
int estimate_k(std::span<const double> eigenvalues_desc, double tau,
               int n_subjects);

struct SpectralOptions {
  double sigma = 0.5;
  double tau = 0.05;
  std::optional<int> k_override;
  std::uint64_t seed = 42;
  // Row-normalize the spectral embedding before k-means. On by default;
  // turning it off reproduces the unnormalized-embedding variant.
  bool row_normalize = true;
  int kmeans_max_iter = 100;
  int kmeans_restarts = 10;
};

struct ClusterModel {
  int k = 0;
  std::vector<int> assignments;      // length N, values in [0, k)
  std::vector<double> eigenvalues;   // normalized-affinity spectrum, descending
  Matrix embedding;                  // N x k_embedded eigenvector rows
  double sigma = 0.5;
  double tau = 0.05;
  std::uint64_t seed = 42;
};

// Full spectral clustering of subject means: affinity, normalization,
// cluster-count estimation from near-unit eigenvalues, eigenvector
// embedding (columns by descending eigenvalue, sign fixed so each column's
// largest-magnitude entry is positive), optional row normalization, then
// seeded k-means. Subjects whose affinity row sums to zero get singleton
// clusters appended after the spectral ones.
ClusterModel spectral_cluster(std::span<const SpdMatrix> means,
                              const SpectralOptions& opts = {});

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;  // k x dim
  double inertia = 0.0;
};

// Lloyd iterations with k-means++ seeding; `restarts` seeded restarts keep
// the lowest within-cluster sum of squares. Every cluster ends non-empty
// (an empty cluster steals the point farthest from its centroid).
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    int max_iter = 100, int restarts = 10);

// Adjusted Rand Index between two labelings; 1.0 means identical up to a
// relabeling of clusters.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// JSON document with k, sigma, tau, seed, assignments and eigenvalues.
std::string cluster_model_json(const ClusterModel& model);

}  // namespace rsel
