#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsel/manifold.hpp"
#include "rsel/rng.hpp"

using rsel::Matrix;
using rsel::SpdMatrix;
using rsel::SymmetricMatrix;

namespace {

Matrix from_rows(int n, const double* v) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = v[i * n + j];
  return m;
}

SpdMatrix pair_a() {
  const double v[] = {2.0, 0.5, 0.1, 0.5, 1.5, -0.2, 0.1, -0.2, 1.0};
  return SpdMatrix(from_rows(3, v));
}

SpdMatrix pair_b() {
  const double v[] = {1.2, -0.3, 0.4, -0.3, 2.5, 0.6, 0.4, 0.6, 3.0};
  return SpdMatrix(from_rows(3, v));
}

SpdMatrix random_spd(int n, rsel::Rng& rng) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Matrix m = a * rsel::transpose(a);
  for (int i = 0; i < n; ++i) m(i, i) += static_cast<double>(n);
  return SpdMatrix(m);
}

double dispersion(std::span<const SpdMatrix> mats, const SpdMatrix& g) {
  double s = 0.0;
  for (const auto& m : mats) {
    double d = rsel::riemannian_distance(m, g);
    s += d * d;
  }
  return s;
}

}  // namespace

TEST_CASE("mean of two points is the geodesic midpoint") {
  std::vector<SpdMatrix> mats = {pair_a(), pair_b()};
  auto res = rsel::frechet_mean_full(mats);
  CHECK(res.converged);
  CHECK(res.residual < 1e-8);

  const double expected[] = {
      1.4954303845396213,  0.07164533584569727, 0.24577964555506565,
      0.07164533584569727, 1.8247769983596314,  0.05129920422120635,
      0.24577964555506565, 0.05129920422120635, 1.7008199529774157};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(res.mean(i, j) ==
            doctest::Approx(expected[i * 3 + j]).epsilon(1e-9));

  const double da = rsel::riemannian_distance(res.mean, mats[0]);
  const double db = rsel::riemannian_distance(res.mean, mats[1]);
  CHECK(da == doctest::Approx(0.8159006581062968).epsilon(1e-9));
  CHECK(da == doctest::Approx(db).epsilon(1e-8));
}

TEST_CASE("mean of a single matrix is that matrix") {
  std::vector<SpdMatrix> mats = {pair_a()};
  SpdMatrix g = rsel::frechet_mean(mats);
  CHECK(rsel::max_abs_diff(g.matrix(), mats[0].matrix()) < 1e-12);
}

TEST_CASE("commuting matrices reduce to elementwise geometric means") {
  std::vector<double> ev1 = {1.0, 4.0, 9.0};
  std::vector<double> ev2 = {4.0, 1.0, 1.0};
  Matrix eye = Matrix::identity(3);
  std::vector<SpdMatrix> mats = {rsel::spd_from_eigen(ev1, eye),
                                 rsel::spd_from_eigen(ev2, eye)};
  SpdMatrix g = rsel::frechet_mean(mats);
  CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g(1, 1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g(2, 2) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(std::abs(g(0, 1)) < 1e-9);
}

TEST_CASE("mean is a local dispersion minimum") {
  rsel::Rng rng(3);
  std::vector<SpdMatrix> mats;
  for (int i = 0; i < 6; ++i) mats.push_back(random_spd(4, rng));
  SpdMatrix g = rsel::frechet_mean(mats);
  const double at_mean = dispersion(mats, g);

  for (const auto& m : mats) CHECK(at_mean <= dispersion(mats, m) + 1e-9);

  for (int t = 0; t < 5; ++t) {
    Matrix p = g.matrix();
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) {
        double d = 0.02 * rng.normal();
        p(i, j) += d;
        p(j, i) = p(i, j);
      }
    CHECK(at_mean <= dispersion(mats, SpdMatrix(p)) + 1e-9);
  }
}

TEST_CASE("mean is equivariant under congruence") {
  rsel::Rng rng(8);
  std::vector<SpdMatrix> mats;
  for (int i = 0; i < 4; ++i) mats.push_back(random_spd(3, rng));
  SpdMatrix g = rsel::frechet_mean(mats);

  Matrix w(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) w(i, j) = rng.normal();
  for (int i = 0; i < 3; ++i) w(i, i) += 3.0;

  std::vector<SpdMatrix> moved;
  for (const auto& m : mats)
    moved.emplace_back(w * m.matrix() * rsel::transpose(w));
  SpdMatrix gm = rsel::frechet_mean(moved);

  Matrix expected = w * g.matrix() * rsel::transpose(w);
  CHECK(rsel::max_abs_diff(gm.matrix(), expected) /
            rsel::max_abs(expected) <
        1e-6);
}

TEST_CASE("config validation") {
  std::vector<SpdMatrix> mats = {pair_a()};
  rsel::FrechetConfig cfg;
  cfg.step = 0.0;
  CHECK_THROWS_AS(rsel::frechet_mean(mats, cfg), rsel::InvalidArgument);
  cfg.step = 2.5;
  CHECK_THROWS_AS(rsel::frechet_mean(mats, cfg), rsel::InvalidArgument);
  cfg = {};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(rsel::frechet_mean(mats, cfg), rsel::InvalidArgument);
  cfg = {};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(rsel::frechet_mean(mats, cfg), rsel::InvalidArgument);

  CHECK_THROWS_AS(rsel::frechet_mean(std::vector<SpdMatrix>{}),
                  rsel::InvalidArgument);
  std::vector<SpdMatrix> mixed = {pair_a(), SpdMatrix::identity(4)};
  CHECK_THROWS_AS(rsel::frechet_mean(mixed), rsel::DimensionMismatch);
}

TEST_CASE("recentering at the mean sends the mean to identity") {
  rsel::Rng rng(12);
  std::vector<SpdMatrix> mats;
  for (int i = 0; i < 5; ++i) mats.push_back(random_spd(4, rng));
  SpdMatrix g = rsel::frechet_mean(mats);

  auto centered = rsel::recenter(mats, g);
  SpdMatrix g2 = rsel::frechet_mean(centered);
  CHECK(rsel::max_abs_diff(g2.matrix(), Matrix::identity(4)) < 1e-7);
}

TEST_CASE("recentering preserves pairwise distances") {
  rsel::Rng rng(14);
  std::vector<SpdMatrix> mats;
  for (int i = 0; i < 4; ++i) mats.push_back(random_spd(3, rng));
  SpdMatrix ref = random_spd(3, rng);
  auto centered = rsel::recenter(mats, ref);

  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t j = i + 1; j < mats.size(); ++j)
      CHECK(rsel::riemannian_distance(centered[i], centered[j]) ==
            doctest::Approx(rsel::riemannian_distance(mats[i], mats[j]))
                .epsilon(1e-9));
}

TEST_CASE("tangent map norm equals the distance to the base") {
  rsel::Rng rng(19);
  SpdMatrix base = random_spd(4, rng);
  SpdMatrix s = random_spd(4, rng);

  SymmetricMatrix t = rsel::tangent_map(s, base);
  CHECK(rsel::frobenius_norm(t.matrix()) ==
        doctest::Approx(rsel::riemannian_distance(s, base)).epsilon(1e-10));

  SymmetricMatrix at_base = rsel::tangent_map(base, base);
  CHECK(rsel::max_abs(at_base.matrix()) < 1e-12);

  SpdMatrix back = rsel::tangent_unmap(t, base);
  CHECK(rsel::max_abs_diff(back.matrix(), s.matrix()) < 1e-10);
}

TEST_CASE("vectorize weights off-diagonals by sqrt(2)") {
  Matrix m(2, 2);
  m(0, 0) = 1.0; m(0, 1) = 2.0; m(1, 0) = 2.0; m(1, 1) = 3.0;
  SymmetricMatrix s(m);

  auto v = rsel::vectorize(s);
  REQUIRE(v.data.size() == 3);
  CHECK(v.data[0] == 1.0);
  CHECK(v.data[1] == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(v.data[2] == 3.0);

  double norm2 = 0.0;
  for (double x : v.data) norm2 += x * x;
  CHECK(std::sqrt(norm2) ==
        doctest::Approx(rsel::frobenius_norm(m)).epsilon(1e-14));

  SymmetricMatrix back = rsel::unvectorize(v);
  CHECK(rsel::max_abs_diff(back.matrix(), m) < 1e-15);
}

TEST_CASE("vectorize roundtrip on random tangents") {
  rsel::Rng rng(23);
  for (int n : {2, 5, 9}) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) m(i, j) = m(j, i) = rng.normal();
    SymmetricMatrix s(m);
    auto v = rsel::vectorize(s);
    CHECK(static_cast<int>(v.data.size()) == rsel::tangent_dim(n));
    SymmetricMatrix back = rsel::unvectorize(v);
    CHECK(rsel::max_abs_diff(back.matrix(), m) < 1e-15);
  }
}

TEST_CASE("tangent dimension formula") {
  CHECK(rsel::tangent_dim(2) == 3);
  CHECK(rsel::tangent_dim(18) == 171);
  CHECK(rsel::tangent_dim(23) == 276);
}
