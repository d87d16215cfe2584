#include "rsel/manifold.hpp"

#include <cmath>
#include <utility>

namespace rsel {

namespace {

struct Evaluation {
  Matrix mean_tangent;   // (1/I) sum_i log(W S_i W)
  double residual = 0.0; // Frobenius norm of mean_tangent
  double objective = 0.0;// sum_i delta_R^2(G, S_i)
};

// One pass over the inputs at base point G. The per-matrix logs are summed
// in fixed index order so the result is independent of any outer
// parallelism; the dispersion objective falls out of the same eigenvalues.
Evaluation evaluate(const SpdMatrix& whitener, std::span<const SpdMatrix> mats) {
  const int n = whitener.dim();
  Evaluation ev;
  ev.mean_tangent = Matrix(n, n);
  for (const SpdMatrix& s : mats) {
    const SpdMatrix whitened(whitener.matrix() * s.matrix() *
                             whitener.matrix());
    double d2 = 0.0;
    const auto& e = whitened.eigen();
    std::vector<double> logs(e.values.size());
    for (std::size_t c = 0; c < e.values.size(); ++c) {
      logs[c] = std::log(e.values[c]);
      d2 += logs[c] * logs[c];
    }
    ev.objective += d2;
    // accumulate V diag(log lambda) V^T
    for (int c = 0; c < n; ++c) {
      const double lc = logs[c];
      for (int i = 0; i < n; ++i) {
        const double vic = e.vectors(i, c) * lc;
        for (int j = 0; j < n; ++j)
          ev.mean_tangent(i, j) += vic * e.vectors(j, c);
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(mats.size());
  for (std::size_t i = 0; i < ev.mean_tangent.size(); ++i)
    ev.mean_tangent.data()[i] *= inv;
  ev.residual = frobenius_norm(ev.mean_tangent);
  return ev;
}

SpdMatrix arithmetic_mean(std::span<const SpdMatrix> mats) {
  Matrix acc = mats[0].matrix();
  for (std::size_t i = 1; i < mats.size(); ++i)
    acc = acc + mats[i].matrix();
  return SpdMatrix(1.0 / static_cast<double>(mats.size()) * acc);
}

}  // namespace

FrechetResult frechet_mean_full(std::span<const SpdMatrix> mats,
                                const FrechetConfig& cfg) {
  if (mats.empty()) throw InvalidArgument("frechet_mean: empty input list");
  if (!(cfg.step > 0.0 && cfg.step <= 2.0))
    throw InvalidArgument("frechet_mean: step must lie in (0, 2]");
  if (!(cfg.tol > 0.0)) throw InvalidArgument("frechet_mean: tol must be > 0");
  if (cfg.max_iter < 1)
    throw InvalidArgument("frechet_mean: max_iter must be >= 1");
  const int n = mats[0].dim();
  for (const auto& m : mats)
    if (m.dim() != n)
      throw DimensionMismatch("frechet_mean: mixed dimensions " +
                              std::to_string(n) + " vs " +
                              std::to_string(m.dim()));

  if (mats.size() == 1) return {mats[0], 0, 0.0, true};

  SpdMatrix g = arithmetic_mean(mats);
  Evaluation ev = evaluate(spd_invsqrt(g), mats);

  // Accepted steps never increase the dispersion objective, so the current
  // iterate is always the best one seen.
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    if (ev.residual < cfg.tol) return {std::move(g), iter, ev.residual, true};

    const SpdMatrix half = spd_sqrt(g);
    double step = cfg.step;
    bool accepted = false;
    for (int halving = 0; halving <= 10; ++halving) {
      SpdMatrix candidate(half.matrix() *
                          sym_exp(SymmetricMatrix(step * ev.mean_tangent))
                              .matrix() *
                          half.matrix());
      Evaluation cand_ev = evaluate(spd_invsqrt(candidate), mats);
      if (cand_ev.objective <= ev.objective * (1.0 + 1e-12) + 1e-300) {
        g = std::move(candidate);
        ev = std::move(cand_ev);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // at the numerical floor of the objective
  }
  return {std::move(g), iter, ev.residual, ev.residual < cfg.tol};
}

SpdMatrix frechet_mean(std::span<const SpdMatrix> mats,
                       const FrechetConfig& cfg) {
  return frechet_mean_full(mats, cfg).mean;
}

std::vector<SpdMatrix> recenter(std::span<const SpdMatrix> mats,
                                const SpdMatrix& reference) {
  const SpdMatrix w = spd_invsqrt(reference);
  std::vector<SpdMatrix> out;
  out.reserve(mats.size());
  for (const SpdMatrix& s : mats) {
    if (s.dim() != reference.dim())
      throw DimensionMismatch("recenter: " + std::to_string(s.dim()) +
                              " vs reference " +
                              std::to_string(reference.dim()));
    out.emplace_back(w.matrix() * s.matrix() * w.matrix());
  }
  return out;
}

SymmetricMatrix tangent_map(const SpdMatrix& s, const SpdMatrix& base) {
  if (s.dim() != base.dim())
    throw DimensionMismatch("tangent_map: " + std::to_string(s.dim()) +
                            " vs base " + std::to_string(base.dim()));
  const SpdMatrix w = spd_invsqrt(base);
  return spd_log(SpdMatrix(w.matrix() * s.matrix() * w.matrix()));
}

SpdMatrix tangent_unmap(const SymmetricMatrix& t, const SpdMatrix& base) {
  if (t.dim() != base.dim())
    throw DimensionMismatch("tangent_unmap: " + std::to_string(t.dim()) +
                            " vs base " + std::to_string(base.dim()));
  const SpdMatrix half = spd_sqrt(base);
  return SpdMatrix(half.matrix() * sym_exp(t).matrix() * half.matrix());
}

TangentVector vectorize(const SymmetricMatrix& s) {
  const int n = s.dim();
  static const double kSqrt2 = std::sqrt(2.0);
  TangentVector v;
  v.base_dim = n;
  v.data.reserve(static_cast<std::size_t>(tangent_dim(n)));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      v.data.push_back(i == j ? s(i, i) : kSqrt2 * s(i, j));
  return v;
}

SymmetricMatrix unvectorize(const TangentVector& v) {
  const int n = v.base_dim;
  if (static_cast<int>(v.data.size()) != tangent_dim(n))
    throw DimensionMismatch("unvectorize: vector length " +
                            std::to_string(v.data.size()) +
                            " does not match base dim " + std::to_string(n));
  static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
  Matrix m(n, n);
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      if (i == j) {
        m(i, i) = v.data[k];
      } else {
        m(i, j) = kInvSqrt2 * v.data[k];
        m(j, i) = m(i, j);
      }
    }
  }
  return SymmetricMatrix(std::move(m));
}

}  // namespace rsel
