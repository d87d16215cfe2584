#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "rsel/clustering.hpp"
#include "rsel/manifold.hpp"
#include "rsel/rng.hpp"

using rsel::AffinityMatrix;
using rsel::Matrix;
using rsel::SpdMatrix;

namespace {

// Block-constant affinity (1 within a block, 0 across, 0 diagonal).
AffinityMatrix block_affinity(const std::vector<int>& sizes) {
  int n = 0;
  for (int s : sizes) n += s;
  AffinityMatrix a;
  a.data = Matrix(n, n);
  int off = 0;
  for (int s : sizes) {
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        if (i != j) a.data(off + i, off + j) = 1.0;
    off += s;
  }
  return a;
}

std::vector<double> normalized_spectrum(const AffinityMatrix& a) {
  return rsel::eig_sym(rsel::normalize_affinity(a).matrix()).values;
}

// Tightly grouped SPD matrices around well-separated diagonal bases.
std::vector<SpdMatrix> grouped_means(const std::vector<int>& sizes,
                                     double spread, rsel::Rng& rng) {
  std::vector<SpdMatrix> means;
  double scale = 1.0;
  for (int s : sizes) {
    for (int i = 0; i < s; ++i) {
      Matrix m(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = r; c < 3; ++c)
          m(r, c) = m(c, r) = spread * rng.normal();
      for (int r = 0; r < 3; ++r) m(r, r) += std::log(scale);
      means.push_back(rsel::sym_exp(rsel::SymmetricMatrix(m)));
    }
    scale *= 16.0;
  }
  return means;
}

}  // namespace

TEST_CASE("affinity entries decay with distance and the diagonal is zero") {
  rsel::Rng rng(2);
  auto means = grouped_means({2, 2}, 0.05, rng);
  AffinityMatrix a = rsel::affinity(means, 0.5);
  REQUIRE(a.n() == 4);
  for (int i = 0; i < 4; ++i) CHECK(a.data(i, i) == 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(a.data(i, j) >= 0.0);
      CHECK(a.data(i, j) <= 1.0);
      CHECK(a.data(i, j) == a.data(j, i));
    }
  CHECK(a.data(0, 1) > a.data(0, 2));

  const double d01 = rsel::riemannian_distance(means[0], means[1]);
  CHECK(a.data(0, 1) ==
        doctest::Approx(std::exp(-d01 * d01 / 0.25)).epsilon(1e-12));

  CHECK_THROWS_AS(rsel::affinity(means, 0.0), rsel::InvalidArgument);
}

TEST_CASE("two-block affinity has exactly two unit eigenvalues") {
  auto vals = normalized_spectrum(block_affinity({3, 2}));
  const double expected[] = {1.0, 1.0, -0.5, -0.5, -1.0};
  REQUIRE(vals.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(vals[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(rsel::estimate_k(vals, 0.05, 5) == 2);
}

TEST_CASE("three-block affinity has exactly three unit eigenvalues") {
  auto vals = normalized_spectrum(block_affinity({3, 3, 2}));
  const double expected[] = {1.0, 1.0, 1.0, -0.5, -0.5, -0.5, -0.5, -1.0};
  REQUIRE(vals.size() == 8);
  for (int i = 0; i < 8; ++i)
    CHECK(vals[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(rsel::estimate_k(vals, 0.05, 8) == 3);
}

TEST_CASE("estimate_k thresholds and clamps") {
  const std::vector<double> vals = {1.0, 0.99, 0.2, 0.1};
  CHECK(rsel::estimate_k(vals, 0.05, 4) == 2);
  CHECK(rsel::estimate_k(vals, 0.005, 4) == 1);
  CHECK(rsel::estimate_k(vals, 0.85, 4) == 3);
  CHECK(rsel::estimate_k(vals, 0.95, 4) == 4);

  const std::vector<double> none = {0.5, 0.4};
  CHECK(rsel::estimate_k(none, 0.05, 2) == 1);

  const std::vector<double> all = {1.0, 1.0, 1.0};
  CHECK(rsel::estimate_k(all, 0.05, 2) == 2);

  // Larger tau never shrinks the estimate.
  for (double lo = 0.01; lo < 0.9; lo += 0.07)
    CHECK(rsel::estimate_k(vals, lo, 4) <= rsel::estimate_k(vals, lo + 0.07, 4));
}

TEST_CASE("normalize_affinity rejects isolated rows") {
  AffinityMatrix a = block_affinity({3, 1});
  CHECK_THROWS_AS(rsel::normalize_affinity(a), rsel::IsolatedSubject);
}

TEST_CASE("identical means collapse to one cluster") {
  std::vector<SpdMatrix> means(5, SpdMatrix::identity(3));
  auto model = rsel::spectral_cluster(means);
  CHECK(model.k == 1);
  for (int c : model.assignments) CHECK(c == 0);
}

TEST_CASE("well-separated groups are recovered exactly") {
  rsel::Rng rng(7);
  auto means = grouped_means({4, 3, 4}, 0.03, rng);
  std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2};

  auto model = rsel::spectral_cluster(means);
  CHECK(model.k == 3);
  CHECK(rsel::adjusted_rand_index(model.assignments, truth) == 1.0);
  CHECK(model.eigenvalues.size() == means.size());
  CHECK(model.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("clustering is invariant under input permutation") {
  rsel::Rng rng(7);
  auto means = grouped_means({4, 3, 4}, 0.03, rng);
  auto base = rsel::spectral_cluster(means);

  std::vector<int> perm(means.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  rsel::Rng shuffler(99);
  shuffler.shuffle(perm);

  std::vector<SpdMatrix> shuffled;
  for (int p : perm) shuffled.push_back(means[p]);
  auto moved = rsel::spectral_cluster(shuffled);

  std::vector<int> undone(means.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    undone[perm[i]] = moved.assignments[i];
  CHECK(rsel::adjusted_rand_index(base.assignments, undone) == 1.0);
}

TEST_CASE("same seed reproduces the same model") {
  rsel::Rng rng(31);
  auto means = grouped_means({3, 3}, 0.2, rng);
  auto m1 = rsel::spectral_cluster(means);
  auto m2 = rsel::spectral_cluster(means);
  CHECK(m1.assignments == m2.assignments);
  CHECK(m1.eigenvalues == m2.eigenvalues);
}

TEST_CASE("k overrides") {
  rsel::Rng rng(7);
  auto means = grouped_means({4, 3, 4}, 0.03, rng);

  rsel::SpectralOptions opts;
  opts.k_override = 2;
  auto model = rsel::spectral_cluster(means, opts);
  CHECK(model.k == 2);
  CHECK(*std::max_element(model.assignments.begin(),
                          model.assignments.end()) == 1);

  opts.k_override = 0;
  CHECK_THROWS_AS(rsel::spectral_cluster(means, opts), rsel::InvalidArgument);
  opts.k_override = static_cast<int>(means.size()) + 1;
  CHECK_THROWS_AS(rsel::spectral_cluster(means, opts),
                  rsel::DegenerateEmbedding);
}

TEST_CASE("subjects with vanishing affinity become singletons") {
  rsel::Rng rng(5);
  auto means = grouped_means({3, 3}, 0.05, rng);
  // Push one subject so far out that exp(-d^2/sigma^2) underflows to zero.
  std::vector<double> huge = {1e40, 2e40, 3e40};
  means.push_back(rsel::spd_from_eigen(huge, Matrix::identity(3)));

  auto model = rsel::spectral_cluster(means);
  CHECK(model.k == 3);
  CHECK(model.assignments.back() == 2);
  std::vector<int> truth = {0, 0, 0, 1, 1, 1, 2};
  CHECK(rsel::adjusted_rand_index(model.assignments, truth) == 1.0);
}

TEST_CASE("kmeans splits clean 1-d groups") {
  Matrix pts(6, 1);
  pts(0, 0) = 0.0; pts(1, 0) = 0.1; pts(2, 0) = -0.1;
  pts(3, 0) = 5.0; pts(4, 0) = 5.1; pts(5, 0) = 4.9;
  auto res = rsel::kmeans(pts, 2, 42);
  CHECK(res.assignments[0] == res.assignments[1]);
  CHECK(res.assignments[1] == res.assignments[2]);
  CHECK(res.assignments[3] == res.assignments[4]);
  CHECK(res.assignments[4] == res.assignments[5]);
  CHECK(res.assignments[0] != res.assignments[3]);
  CHECK(res.inertia == doctest::Approx(0.02 + 0.02).epsilon(1e-12));
}

TEST_CASE("kmeans with k equal to n isolates every point") {
  Matrix pts(4, 2);
  for (int i = 0; i < 4; ++i) pts(i, 0) = static_cast<double>(i);
  auto res = rsel::kmeans(pts, 4, 1);
  std::vector<int> sorted = res.assignments;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
  CHECK(res.inertia == 0.0);
}

TEST_CASE("kmeans is deterministic per seed") {
  rsel::Rng rng(17);
  Matrix pts(30, 3);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 3; ++j) pts(i, j) = rng.normal();
  auto a = rsel::kmeans(pts, 4, 7);
  auto b = rsel::kmeans(pts, 4, 7);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("adjusted rand index worked examples") {
  const std::vector<int> a = {0, 0, 1, 1, 1, 2};
  const std::vector<int> b = {0, 0, 1, 1, 2, 2};
  CHECK(rsel::adjusted_rand_index(a, b) ==
        doctest::Approx(0.4444444444444444).epsilon(1e-12));

  const std::vector<int> inv = {2, 2, 0, 0, 0, 1};
  CHECK(rsel::adjusted_rand_index(a, inv) == 1.0);

  const std::vector<int> alt = {0, 1, 0, 1, 0, 1};
  CHECK(rsel::adjusted_rand_index(alt, b) ==
        doctest::Approx(-0.36363636363636365).epsilon(1e-12));

  const std::vector<int> flat(6, 0);
  CHECK(rsel::adjusted_rand_index(flat, flat) == 1.0);
  CHECK_THROWS_AS(rsel::adjusted_rand_index(a, std::vector<int>{0, 1}),
                  rsel::DimensionMismatch);
}

TEST_CASE("cluster model serializes to json") {
  rsel::Rng rng(7);
  auto means = grouped_means({3, 2}, 0.03, rng);
  auto model = rsel::spectral_cluster(means);
  auto doc = nlohmann::json::parse(rsel::cluster_model_json(model));
  CHECK(doc.at("k").get<int>() == model.k);
  CHECK(doc.at("sigma").get<double>() == model.sigma);
  CHECK(doc.at("tau").get<double>() == model.tau);
  CHECK(doc.at("seed").get<std::uint64_t>() == model.seed);
  CHECK(doc.at("assignments").get<std::vector<int>>() == model.assignments);
  CHECK(doc.at("eigenvalues").get<std::vector<double>>() == model.eigenvalues);
}
