#include "rsel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>

#include <json.hpp>

#include "rsel/errors.hpp"

namespace rsel {

AffinityMatrix affinity(std::span<const SpdMatrix> means, double sigma) {
  const int n = static_cast<int>(means.size());
  if (n < 2) throw InvalidArgument("affinity needs at least 2 subjects");
  if (!(sigma > 0.0)) throw InvalidArgument("affinity sigma must be > 0");
  const int dim = means[0].dim();
  for (const auto& m : means)
    if (m.dim() != dim)
      throw DimensionMismatch("subject means differ in dimension");

  AffinityMatrix a;
  a.sigma = sigma;
  a.data = Matrix(n, n);
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = riemannian_distance(means[i], means[j]);
      const double v = std::exp(-d * d * inv_s2);
      a.data(i, j) = v;
      a.data(j, i) = v;
    }
  }
  return a;
}

SymmetricMatrix normalize_affinity(const AffinityMatrix& a) {
  const int n = a.n();
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += a.data(i, j);
    if (sum <= 0.0)
      throw IsolatedSubject("subject " + std::to_string(i) +
                            " has zero affinity to all others");
    inv_sqrt_deg[i] = 1.0 / std::sqrt(sum);
  }
  Matrix norm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      norm(i, j) = inv_sqrt_deg[i] * a.data(i, j) * inv_sqrt_deg[j];
  return SymmetricMatrix(std::move(norm));
}

int estimate_k(std::span<const double> eigenvalues_desc, double tau,
               int n_subjects) {
  if (!(tau > 0.0 && tau < 1.0))
    throw InvalidArgument("tau must lie in (0, 1)");
  int k = 0;
  for (const double v : eigenvalues_desc)
    if (v >= 1.0 - tau) ++k;
  return std::clamp(k, 1, n_subjects);
}

namespace {

double sq_dist_to_centroid(const Matrix& points, int p, const Matrix& c,
                           int cluster) {
  double s = 0.0;
  for (int d = 0; d < points.cols(); ++d) {
    const double diff = points(p, d) - c(cluster, d);
    s += diff * diff;
  }
  return s;
}

struct LloydOutcome {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
};

LloydOutcome lloyd_once(const Matrix& points, int k, Rng& rng, int max_iter) {
  const int n = points.rows();
  const int dim = points.cols();

  // k-means++ seeding.
  Matrix centroids(k, dim);
  std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
  {
    int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    for (int d = 0; d < dim; ++d) centroids(0, d) = points(first, d);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int p = 0; p < n; ++p) {
        min_sq[p] = std::min(min_sq[p],
                             sq_dist_to_centroid(points, p, centroids, c - 1));
        total += min_sq[p];
      }
      int chosen = 0;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        chosen = n - 1;
        for (int p = 0; p < n; ++p) {
          acc += min_sq[p];
          if (acc > target) {
            chosen = p;
            break;
          }
        }
      } else {
        chosen = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      }
      for (int d = 0; d < dim; ++d) centroids(c, d) = points(chosen, d);
    }
  }

  std::vector<int> assignments(n, -1);
  std::vector<int> counts(k, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int p = 0; p < n; ++p) {
      int best = 0;
      double best_d = sq_dist_to_centroid(points, p, centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist_to_centroid(points, p, centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assignments[p] != best) {
        assignments[p] = best;
        changed = true;
      }
    }

    // Re-seat empty clusters on the point farthest from its own centroid.
    std::fill(counts.begin(), counts.end(), 0);
    for (int p = 0; p < n; ++p) ++counts[assignments[p]];
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int worst = -1;
      double worst_d = -1.0;
      for (int p = 0; p < n; ++p) {
        if (counts[assignments[p]] <= 1) continue;
        const double d =
            sq_dist_to_centroid(points, p, centroids, assignments[p]);
        if (d > worst_d) {
          worst_d = d;
          worst = p;
        }
      }
      if (worst < 0) break;  // fewer distinct points than clusters
      --counts[assignments[worst]];
      assignments[worst] = c;
      ++counts[c];
      changed = true;
    }

    for (int c = 0; c < k; ++c)
      for (int d = 0; d < dim; ++d) centroids(c, d) = 0.0;
    for (int p = 0; p < n; ++p)
      for (int d = 0; d < dim; ++d)
        centroids(assignments[p], d) += points(p, d);
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / counts[c];
      for (int d = 0; d < dim; ++d) centroids(c, d) *= inv;
    }
    if (!changed) break;
  }

  double inertia = 0.0;
  for (int p = 0; p < n; ++p)
    inertia += sq_dist_to_centroid(points, p, centroids, assignments[p]);
  return {std::move(assignments), std::move(centroids), inertia};
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    int max_iter, int restarts) {
  const int n = points.rows();
  if (k < 1) throw InvalidArgument("kmeans needs k >= 1");
  if (n < k) throw InvalidArgument("kmeans needs at least k points");
  if (max_iter < 1 || restarts < 1)
    throw InvalidArgument("kmeans iteration counts must be positive");

  LloydOutcome best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(r)));
    LloydOutcome out = lloyd_once(points, k, rng, max_iter);
    if (out.inertia < best.inertia) best = std::move(out);
  }
  return {std::move(best.assignments), std::move(best.centroids),
          best.inertia};
}

namespace {

// Top-k eigenvector embedding with the sign of each column fixed so its
// largest-magnitude entry is positive; ties go to the lowest row index.
Matrix spectral_embedding(const EigenDecomposition& eig, int k,
                          bool row_normalize) {
  const int n = eig.vectors.rows();
  Matrix u(n, k);
  for (int c = 0; c < k; ++c) {
    int arg = 0;
    double mag = -1.0;
    for (int i = 0; i < n; ++i) {
      const double a = std::abs(eig.vectors(i, c));
      if (a > mag) {
        mag = a;
        arg = i;
      }
    }
    const double sign = eig.vectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) u(i, c) = sign * eig.vectors(i, c);
  }
  if (row_normalize) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += u(i, c) * u(i, c);
      if (s <= 0.0) continue;  // cannot occur for a connected component
      const double inv = 1.0 / std::sqrt(s);
      for (int c = 0; c < k; ++c) u(i, c) *= inv;
    }
  }
  return u;
}

}  // namespace

ClusterModel spectral_cluster(std::span<const SpdMatrix> means,
                              const SpectralOptions& opts) {
  const int n = static_cast<int>(means.size());
  if (n < 2) throw InvalidArgument("spectral_cluster needs at least 2 subjects");
  if (opts.k_override) {
    if (*opts.k_override < 1)
      throw InvalidArgument("cluster-count override must be >= 1");
    if (*opts.k_override > n)
      throw DegenerateEmbedding("cluster-count override " +
                                std::to_string(*opts.k_override) +
                                " exceeds subject count " + std::to_string(n));
  }

  ClusterModel model;
  model.sigma = opts.sigma;
  model.tau = opts.tau;
  model.seed = opts.seed;
  model.assignments.assign(n, -1);

  const AffinityMatrix a = affinity(means, opts.sigma);
  std::vector<int> active;
  std::vector<int> isolated;
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += a.data(i, j);
    (sum > 0.0 ? active : isolated).push_back(i);
  }

  int k_spectral = 0;
  if (!active.empty()) {
    // Affinity is symmetric, so a single "active" subject cannot exist.
    const int na = static_cast<int>(active.size());
    AffinityMatrix sub;
    sub.sigma = a.sigma;
    sub.data = Matrix(na, na);
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        sub.data(i, j) = a.data(active[i], active[j]);

    const SymmetricMatrix norm = normalize_affinity(sub);
    const EigenDecomposition eig = eig_sym(norm.matrix());
    model.eigenvalues = eig.values;

    k_spectral = opts.k_override
                     ? std::min(*opts.k_override, na)
                     : estimate_k(eig.values, opts.tau, na);
    const Matrix u = spectral_embedding(eig, k_spectral, opts.row_normalize);
    const KMeansResult km = kmeans(u, k_spectral, opts.seed,
                                   opts.kmeans_max_iter, opts.kmeans_restarts);

    model.embedding = Matrix(n, k_spectral);
    for (int i = 0; i < na; ++i) {
      model.assignments[active[i]] = km.assignments[i];
      for (int c = 0; c < k_spectral; ++c)
        model.embedding(active[i], c) = u(i, c);
    }
  } else {
    model.embedding = Matrix(n, 0);
  }

  // Isolated subjects become singleton clusters after the spectral ones.
  int next = k_spectral;
  for (const int i : isolated) model.assignments[i] = next++;
  model.k = next;
  return model;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("labelings differ in length");
  const int n = static_cast<int>(a.size());
  if (n == 0) throw InvalidArgument("labelings are empty");

  std::map<int, int> amap, bmap;
  for (const int v : a) amap.emplace(v, static_cast<int>(amap.size()));
  for (const int v : b) bmap.emplace(v, static_cast<int>(bmap.size()));
  const int ka = static_cast<int>(amap.size());
  const int kb = static_cast<int>(bmap.size());

  std::vector<std::int64_t> table(
      static_cast<std::size_t>(ka) * static_cast<std::size_t>(kb), 0);
  for (int i = 0; i < n; ++i)
    ++table[static_cast<std::size_t>(amap[a[i]]) * kb + bmap[b[i]]];

  std::int64_t sum_sq = 0;
  std::vector<std::int64_t> rows(ka, 0), cols(kb, 0);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      const std::int64_t v = table[static_cast<std::size_t>(i) * kb + j];
      sum_sq += v * v;
      rows[i] += v;
      cols[j] += v;
    }
  std::int64_t sum_rows_sq = 0, sum_cols_sq = 0;
  for (const auto v : rows) sum_rows_sq += v * v;
  for (const auto v : cols) sum_cols_sq += v * v;

  // Pair-confusion formulation; exact for integer counts.
  const double nn = static_cast<double>(n);
  const double t11 = static_cast<double>(sum_sq) - nn;
  const double t10 = static_cast<double>(sum_rows_sq - sum_sq);
  const double t01 = static_cast<double>(sum_cols_sq - sum_sq);
  const double t00 = nn * nn - static_cast<double>(sum_rows_sq) -
                     static_cast<double>(sum_cols_sq) +
                     static_cast<double>(sum_sq);
  if (t10 == 0.0 && t01 == 0.0) return 1.0;
  return 2.0 * (t00 * t11 - t10 * t01) /
         ((t11 + t10) * (t10 + t00) + (t11 + t01) * (t01 + t00));
}

std::string cluster_model_json(const ClusterModel& model) {
  nlohmann::json j;
  j["k"] = model.k;
  j["sigma"] = model.sigma;
  j["tau"] = model.tau;
  j["seed"] = model.seed;
  j["assignments"] = model.assignments;
  j["eigenvalues"] = model.eigenvalues;
  return j.dump(2);
}

}  // namespace rsel
