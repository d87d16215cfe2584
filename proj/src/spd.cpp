#include "rsel/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rsel {

namespace {

Matrix symmetrized(const Matrix& m) {
  Matrix r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    r(i, i) = m(i, i);
    for (int j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

void require_square_nearly_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionMismatch(std::string(what) + ": matrix not square (" +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ")");
  if (m.rows() == 0) throw InvalidArgument(std::string(what) + ": empty matrix");
  // Hybrid gate: the absolute floor keeps near-zero matrices (converged
  // tangents, logs of near-identity inputs) from tripping on rounding noise
  // that is large only relative to their own vanishing entries.
  const double scale = max_abs(m);
  const double asym = relative_asymmetry(m) * scale;
  if (asym > 1e-12 * scale + 1e-14) {
    std::ostringstream os;
    os << what << ": asymmetry " << asym << " exceeds tolerance for scale "
       << scale;
    throw InvalidArgument(os.str());
  }
}

void sort_descending(EigenDecomposition& e) {
  const int n = static_cast<int>(e.values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return e.values[a] > e.values[b]; });
  std::vector<double> vals(n);
  Matrix vecs(n, n);
  for (int c = 0; c < n; ++c) {
    vals[c] = e.values[order[c]];
    for (int r = 0; r < n; ++r) vecs(r, c) = e.vectors(r, order[c]);
  }
  e.values = std::move(vals);
  e.vectors = std::move(vecs);
}

Matrix reconstruct(const std::vector<double>& values, const Matrix& vectors) {
  const int n = static_cast<int>(values.size());
  // V diag(values) V^T, accumulated column by column.
  Matrix r(n, n);
  for (int c = 0; c < n; ++c) {
    const double lc = values[c];
    if (lc == 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const double vic = vectors(i, c) * lc;
      if (vic == 0.0) continue;
      for (int j = 0; j < n; ++j) r(i, j) += vic * vectors(j, c);
    }
  }
  return symmetrized(r);
}

}  // namespace

EigenDecomposition eig_sym(const Matrix& m) {
  require_square_nearly_symmetric(m, "eig_sym");
  const int n = m.rows();
  Matrix a = symmetrized(m);
  Matrix v = Matrix::identity(n);

  if (n == 1) return {{a(0, 0)}, v};

  // 128 cyclic sweeps = 64 n (n-1) rotations, past the 30 n^2 budget for
  // every n >= 2. Convergence typically needs fewer than 10 sweeps.
  const int max_sweeps = 128;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::fabs(a(p, q));
    if (off == 0.0) {
      converged = true;
      break;
    }
    // Early sweeps skip entries below a coarse threshold (classic Jacobi
    // scheduling); later sweeps rotate everything that is representable.
    const double thresh = (sweep < 3) ? 0.2 * off / (n * n) : 0.0;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g = 100.0 * std::fabs(apq);
        if (sweep > 3 && std::fabs(a(p, p)) + g == std::fabs(a(p, p)) &&
            std::fabs(a(q, q)) + g == std::fabs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        if (std::fabs(apq) <= thresh) continue;

        const double h = a(q, q) - a(p, p);
        double t;
        if (std::fabs(h) + g == std::fabs(h)) {
          t = apq / h;
        } else {
          const double theta = 0.5 * h / apq;
          t = 1.0 / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double delta = t * apq;

        a(p, p) -= delta;
        a(q, q) += delta;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = akp - s * (akq + akp * tau);
          a(p, k) = a(k, p);
          a(k, q) = akq + s * (akp - akq * tau);
          a(q, k) = a(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + vkp * tau);
          v(k, q) = vkq + s * (vkp - vkq * tau);
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::fabs(a(p, q));
    // Underflowed off-diagonals count as converged.
    if (off > n * n * std::numeric_limits<double>::min() * 1e3)
      throw NoConvergence("eig_sym: rotation budget exhausted, residual " +
                          std::to_string(off));
  }

  EigenDecomposition e;
  e.values.resize(n);
  for (int i = 0; i < n; ++i) e.values[i] = a(i, i);
  e.vectors = std::move(v);
  sort_descending(e);
  return e;
}

SymmetricMatrix::SymmetricMatrix(Matrix m) {
  require_square_nearly_symmetric(m, "SymmetricMatrix");
  mat_ = symmetrized(m);
}

SpdMatrix::SpdMatrix(Matrix m) {
  require_square_nearly_symmetric(m, "SpdMatrix");
  mat_ = symmetrized(m);
  eig_ = eig_sym(mat_);
  const int n = dim();
  const double lmax = eig_.values.front();
  const double lmin = eig_.values.back();
  const double tol =
      n * std::numeric_limits<double>::epsilon() * std::max(lmax, 0.0);
  if (!(lmin > tol))
    throw NotPositiveDefinite("smallest eigenvalue " + std::to_string(lmin) +
                              " <= tolerance " + std::to_string(tol));
}

SpdMatrix spd_from_eigen(std::vector<double> values, const Matrix& vectors) {
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw NotPositiveDefinite("spd_from_eigen: eigenvalue " +
                                std::to_string(v));
  SpdMatrix m;
  m.mat_ = reconstruct(values, vectors);
  m.eig_.values = std::move(values);
  m.eig_.vectors = vectors;
  sort_descending(m.eig_);
  return m;
}

SpdMatrix scm(const Matrix& features, double shrinkage) {
  const int channels = features.rows();
  const int samples = features.cols();
  if (channels < 2)
    throw InvalidArgument("scm: need at least 2 channels, got " +
                          std::to_string(channels));
  if (samples < 2)
    throw InvalidArgument("scm: need at least 2 samples, got " +
                          std::to_string(samples));
  if (!(shrinkage >= 0.0 && shrinkage < 1.0))
    throw InvalidArgument("scm: shrinkage must lie in [0, 1)");

  Matrix s(channels, channels);
  const double scale = 1.0 / (samples - 1);
  for (int i = 0; i < channels; ++i) {
    const double* xi = features.data() + static_cast<std::size_t>(i) * samples;
    for (int j = i; j < channels; ++j) {
      const double* xj =
          features.data() + static_cast<std::size_t>(j) * samples;
      double acc = 0.0;
      for (int t = 0; t < samples; ++t) acc += xi[t] * xj[t];
      s(i, j) = acc * scale;
      s(j, i) = s(i, j);
    }
  }
  if (shrinkage > 0.0) {
    const double ridge = shrinkage * trace(s) / channels;
    for (std::size_t i = 0; i < s.size(); ++i)
      s.data()[i] *= (1.0 - shrinkage);
    for (int i = 0; i < channels; ++i) s(i, i) += ridge;
  }
  try {
    return SpdMatrix(std::move(s));
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(
        std::string("scm: rank-deficient input (raise shrinkage); ") +
        e.what());
  }
}

SymmetricMatrix spd_map(const SpdMatrix& m,
                        const std::function<double(double)>& f) {
  const auto& e = m.eigen();
  std::vector<double> mapped(e.values.size());
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    mapped[i] = f(e.values[i]);
    if (!std::isfinite(mapped[i]))
      throw DomainError("spd_map: f(" + std::to_string(e.values[i]) +
                        ") is not finite");
  }
  return SymmetricMatrix(reconstruct(mapped, e.vectors));
}

SymmetricMatrix spd_log(const SpdMatrix& m) {
  return spd_map(m, [](double x) { return std::log(x); });
}

namespace {
SpdMatrix spd_map_positive(const SpdMatrix& m, double (*f)(double)) {
  const auto& e = m.eigen();
  std::vector<double> mapped(e.values.size());
  for (std::size_t i = 0; i < e.values.size(); ++i) mapped[i] = f(e.values[i]);
  return spd_from_eigen(std::move(mapped), e.vectors);
}
}  // namespace

SpdMatrix spd_sqrt(const SpdMatrix& m) {
  return spd_map_positive(m, +[](double x) { return std::sqrt(x); });
}

SpdMatrix spd_invsqrt(const SpdMatrix& m) {
  return spd_map_positive(m, +[](double x) { return 1.0 / std::sqrt(x); });
}

SpdMatrix spd_inverse(const SpdMatrix& m) {
  return spd_map_positive(m, +[](double x) { return 1.0 / x; });
}

SpdMatrix sym_exp(const SymmetricMatrix& s) {
  EigenDecomposition e = eig_sym(s.matrix());
  std::vector<double> mapped(e.values.size());
  for (std::size_t i = 0; i < e.values.size(); ++i)
    mapped[i] = std::exp(e.values[i]);
  return spd_from_eigen(std::move(mapped), e.vectors);
}

namespace {
// Eigenvalues of a^{-1/2} b a^{-1/2}, shared by both distance routes.
EigenDecomposition whitened_eigen(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("riemannian_distance: " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  const SpdMatrix w = spd_invsqrt(a);
  Matrix m = w.matrix() * b.matrix() * w.matrix();
  return eig_sym(symmetrized(m));
}
}  // namespace

double riemannian_distance(const SpdMatrix& a, const SpdMatrix& b) {
  EigenDecomposition e = whitened_eigen(a, b);
  double acc = 0.0;
  for (double lc : e.values) {
    if (!(lc > 0.0))
      throw NotPositiveDefinite(
          "riemannian_distance: whitened matrix lost positive definiteness");
    const double l = std::log(lc);
    acc += l * l;
  }
  return std::sqrt(acc);
}

double riemannian_distance_logm(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("riemannian_distance_logm: " +
                            std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  const SpdMatrix w = spd_invsqrt(a);
  const SpdMatrix whitened(w.matrix() * b.matrix() * w.matrix());
  return frobenius_norm(spd_log(whitened).matrix());
}

}  // namespace rsel
