#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsel/rng.hpp"
#include "rsel/svm.hpp"

using rsel::SvmModel;
using rsel::SvmOptions;
using rsel::TangentVector;

namespace {

TangentVector tv(std::vector<double> data) {
  TangentVector v;
  v.base_dim = 0;
  v.data = std::move(data);
  return v;
}

std::vector<TangentVector> to_vectors(
    const std::vector<std::vector<double>>& rows) {
  std::vector<TangentVector> out;
  for (const auto& r : rows) out.push_back(tv(r));
  return out;
}

// 2-d problem with a known reference solution (w = (0.6, 1.0), b = -0.06).
const std::vector<std::vector<double>> kRefX = {
    {1.0, 2.0},   {2.0, 1.0},   {1.5, 1.8}, {2.2, 2.5},  {-1.0, -0.5},
    {-2.0, -1.5}, {-1.2, -2.0}, {-0.5, -1.0}, {0.3, 0.4}, {-0.3, -0.6}};
const std::vector<int> kRefY = {1, 1, 1, 1, 0, 0, 0, 0, 1, 0};

double accuracy(const SvmModel& m, const std::vector<TangentVector>& xs,
                const std::vector<int>& ys) {
  int hit = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (rsel::svm_predict(m, xs[i]).label == ys[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("two opposed points give the midpoint boundary") {
  auto xs = to_vectors({{-1.0}, {1.0}});
  SvmModel m = rsel::svm_train(xs, {0, 1});
  CHECK(m.weights[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-6));

  // A zero margin maps to the positive class.
  auto p = rsel::svm_predict(m, tv({-m.bias / m.weights[0]}));
  CHECK(p.label == 1);
}

TEST_CASE("matches a reference solution of the same dual") {
  SvmOptions opts;
  opts.balanced = false;
  rsel::SvmTrainStats stats;
  SvmModel m = rsel::svm_train(to_vectors(kRefX), kRefY, opts, &stats);

  CHECK(stats.converged);
  CHECK(m.weights[0] == doctest::Approx(0.6).epsilon(2e-3));
  CHECK(m.weights[1] == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(m.bias == doctest::Approx(-0.0599999874830246).epsilon(5e-2));

  const std::vector<std::vector<double>> grid = {
      {0.1, 0.1}, {-0.1, -0.1}, {1.0, -1.0}, {-1.0, 1.0}, {3.0, 0.0}};
  const double expected_margin[] = {0.1000000125169754, -0.2199999874830246,
                                    -0.4599999874830246, 0.3400000125169754,
                                    1.7400000125169752};
  const int expected_label[] = {1, 0, 0, 1, 1};
  for (int i = 0; i < 5; ++i) {
    auto p = rsel::svm_predict(m, tv(grid[i]));
    CHECK(p.margin == doctest::Approx(expected_margin[i]).epsilon(2e-2));
    CHECK(p.label == expected_label[i]);
  }
}

TEST_CASE("separable blobs are classified perfectly") {
  rsel::Rng rng(4);
  std::vector<TangentVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    const double cx = label == 0 ? -3.0 : 3.0;
    xs.push_back(tv({cx + 0.5 * rng.normal(), 0.5 * rng.normal()}));
    ys.push_back(label);
  }
  SvmModel m = rsel::svm_train(xs, ys);
  CHECK(accuracy(m, xs, ys) == 1.0);
}

TEST_CASE("xor is capped at three of four points") {
  auto xs = to_vectors({{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}});
  const std::vector<int> ys = {0, 0, 1, 1};
  SvmModel m = rsel::svm_train(xs, ys);
  CHECK(accuracy(m, xs, ys) <= 0.75);
}

TEST_CASE("dual objective never decreases across epochs") {
  rsel::Rng rng(9);
  std::vector<TangentVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 2;
    const double cx = label == 0 ? -0.5 : 0.5;  // heavy overlap
    xs.push_back(tv({cx + rng.normal(), rng.normal(), rng.normal()}));
    ys.push_back(label);
  }
  rsel::SvmTrainStats stats;
  SvmModel m = rsel::svm_train(xs, ys, {}, &stats);
  REQUIRE(stats.dual_history.size() >= 2);
  for (std::size_t i = 1; i < stats.dual_history.size(); ++i)
    CHECK(stats.dual_history[i] >= stats.dual_history[i - 1] - 1e-9);
  CHECK(stats.primal_objective >= stats.dual_objective - 1e-9);
  CHECK(m.weights.size() == 3);
}

TEST_CASE("training order does not steer the solution") {
  SvmOptions opts;
  opts.balanced = false;
  SvmModel base = rsel::svm_train(to_vectors(kRefX), kRefY, opts);

  std::vector<int> perm = {7, 2, 9, 0, 5, 4, 8, 1, 3, 6};
  std::vector<std::vector<double>> px;
  std::vector<int> py;
  for (int p : perm) {
    px.push_back(kRefX[p]);
    py.push_back(kRefY[p]);
  }
  opts.seed = 1234;
  SvmModel moved = rsel::svm_train(to_vectors(px), py, opts);

  // Solutions agree up to the optimizer tolerance.
  for (int i = 0; i < 2; ++i)
    CHECK(moved.weights[i] == doctest::Approx(base.weights[i]).epsilon(5e-3));
  const std::vector<std::vector<double>> grid = {
      {0.1, 0.1}, {-0.1, -0.1}, {1.0, -1.0}, {-1.0, 1.0}, {3.0, 0.0}};
  for (const auto& g : grid)
    CHECK(rsel::svm_predict(moved, tv(g)).label ==
          rsel::svm_predict(base, tv(g)).label);
}

TEST_CASE("scaling inputs by a power of two with C over its square is exact") {
  SvmModel base = rsel::svm_train(to_vectors(kRefX), kRefY);

  const double gamma = 2.0;
  std::vector<TangentVector> scaled;
  for (const auto& r : kRefX) scaled.push_back(tv({gamma * r[0], gamma * r[1]}));
  SvmOptions opts;
  opts.c = 1.0 / (gamma * gamma);
  SvmModel m = rsel::svm_train(scaled, kRefY, opts);

  CHECK(m.bias == base.bias);
  for (int i = 0; i < 2; ++i)
    CHECK(m.weights[i] == base.weights[i] / gamma);

  const std::vector<std::vector<double>> grid = {
      {0.1, 0.1}, {-0.1, -0.1}, {1.0, -1.0}, {-1.0, 1.0}, {3.0, 0.0}};
  for (const auto& g : grid) {
    auto p0 = rsel::svm_predict(base, tv(g));
    auto p1 = rsel::svm_predict(m, tv({gamma * g[0], gamma * g[1]}));
    CHECK(p1.margin == p0.margin);
    CHECK(p1.label == p0.label);
  }
}

TEST_CASE("class weighting lifts the minority class") {
  rsel::Rng rng(13);
  std::vector<TangentVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 200; ++i) {  // 180 vs 20, overlapping
    const int label = i % 10 == 0 ? 1 : 0;
    const double cx = label == 0 ? -0.4 : 0.4;
    xs.push_back(tv({cx + rng.normal()}));
    ys.push_back(label);
  }

  SvmOptions plain;
  plain.balanced = false;
  SvmModel unweighted = rsel::svm_train(xs, ys, plain);
  SvmModel weighted = rsel::svm_train(xs, ys);

  auto minority_hits = [&](const SvmModel& m) {
    int hit = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (ys[i] == 1 && rsel::svm_predict(m, xs[i]).label == 1) ++hit;
    return hit;
  };
  CHECK(minority_hits(weighted) > minority_hits(unweighted));
}

TEST_CASE("arbitrary label values are carried through") {
  auto xs = to_vectors({{-1.0}, {-0.8}, {0.9}, {1.1}});
  SvmModel m = rsel::svm_train(xs, {7, 7, 2, 2});
  CHECK(m.negative_label == 2);
  CHECK(m.positive_label == 7);
  CHECK(rsel::svm_predict(m, tv({-1.0})).label == 7);
  CHECK(rsel::svm_predict(m, tv({1.0})).label == 2);
}

TEST_CASE("input validation") {
  auto xs = to_vectors({{1.0}, {2.0}});
  CHECK_THROWS_AS(rsel::svm_train({}, {}), rsel::InvalidArgument);
  CHECK_THROWS_AS(rsel::svm_train(xs, {1}), rsel::DimensionMismatch);
  CHECK_THROWS_AS(rsel::svm_train(xs, {1, 1}), rsel::SingleClass);
  CHECK_THROWS_AS(rsel::svm_train(xs, {0, 1}, SvmOptions{.c = 0.0}),
                  rsel::InvalidArgument);
  auto ragged = to_vectors({{1.0}, {1.0, 2.0}});
  CHECK_THROWS_AS(rsel::svm_train(ragged, {0, 1}), rsel::DimensionMismatch);
  auto xs3 = to_vectors({{1.0}, {2.0}, {3.0}});
  CHECK_THROWS_AS(rsel::svm_train(xs3, {0, 1, 2}), rsel::InvalidArgument);
}

TEST_CASE("json roundtrip preserves the model") {
  SvmModel m = rsel::svm_train(to_vectors(kRefX), kRefY);
  SvmModel back = rsel::svm_from_json(rsel::svm_to_json(m));
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.c == m.c);
  CHECK(back.negative_label == m.negative_label);
  CHECK(back.positive_label == m.positive_label);

  CHECK_THROWS_AS(rsel::svm_from_json("{not json"), rsel::ParseError);
  CHECK_THROWS_AS(rsel::svm_from_json("{\"weights\": [1.0]}"),
                  rsel::ParseError);
}
