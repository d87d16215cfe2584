#include "rsel/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

#include <json.hpp>

#include "rsel/errors.hpp"
#include "rsel/rng.hpp"

namespace rsel {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct BiasFit {
  double bias = 0.0;
  double hinge = 0.0;  // weighted hinge total at the optimal bias
};

// The primal objective is piecewise linear in b once w is fixed:
//   H(b) = sum_i C_i max(0, 1 - y_i (f_i + b)),  f_i = w.x_i.
// Every term has one breakpoint at t_i = y_i - f_i, and the slope increases
// by C_i when b crosses it, so the minimizer is a weighted-median point.
// On a flat minimizing segment the midpoint is taken.
BiasFit optimal_bias(const std::vector<double>& f, const std::vector<double>& y,
                     const std::vector<double>& cw) {
  const std::size_t n = f.size();
  std::vector<std::pair<double, double>> bp(n);  // (breakpoint, weight)
  double slope = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    bp[i] = {y[i] - f[i], cw[i]};
    if (y[i] > 0.0) slope -= cw[i];
  }
  std::sort(bp.begin(), bp.end());

  double b = bp.back().first;
  for (std::size_t k = 0; k < n; ++k) {
    slope += bp[k].second;
    if (slope >= 0.0) {
      b = (slope == 0.0 && k + 1 < n)
              ? 0.5 * (bp[k].first + bp[k + 1].first)
              : bp[k].first;
      break;
    }
  }

  double hinge = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = y[i] - f[i];
    hinge += cw[i] * std::max(0.0, y[i] > 0.0 ? t - b : b - t);
  }
  return {b, hinge};
}

// Feasible range of the pair step d with alpha_i += y_i d, alpha_j -= y_j d.
void step_bounds(double alpha, double y, double c, bool first_index,
                 double& lo, double& hi) {
  if ((y > 0.0) == first_index) {
    lo = std::max(lo, -alpha);
    hi = std::min(hi, c - alpha);
  } else {
    lo = std::max(lo, alpha - c);
    hi = std::min(hi, alpha);
  }
}

}  // namespace

SvmModel svm_train(const std::vector<TangentVector>& vectors,
                   const std::vector<int>& labels, const SvmOptions& opts,
                   SvmTrainStats* stats) {
  const int n = static_cast<int>(vectors.size());
  if (n == 0) throw InvalidArgument("svm_train got no examples");
  if (labels.size() != vectors.size())
    throw DimensionMismatch("label count does not match example count");
  if (!(opts.c > 0.0)) throw InvalidArgument("svm C must be > 0");
  if (!(opts.tol > 0.0)) throw InvalidArgument("svm tol must be > 0");
  if (opts.max_passes < 1) throw InvalidArgument("svm max_passes must be >= 1");

  const std::size_t m = vectors[0].data.size();
  if (m == 0) throw InvalidArgument("svm_train got empty feature vectors");
  for (const auto& v : vectors)
    if (v.data.size() != m)
      throw DimensionMismatch("training vectors differ in dimension");

  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2)
    throw SingleClass("training set contains a single class");
  if (distinct.size() > 2)
    throw InvalidArgument("svm_train is binary; got " +
                          std::to_string(distinct.size()) + " classes");
  const int neg_label = *distinct.begin();
  const int pos_label = *distinct.rbegin();

  std::vector<double> y(n);
  int n_pos = 0;
  for (int i = 0; i < n; ++i) {
    y[i] = labels[i] == pos_label ? 1.0 : -1.0;
    if (y[i] > 0.0) ++n_pos;
  }
  const int n_neg = n - n_pos;

  std::vector<double> cw(n);
  for (int i = 0; i < n; ++i) {
    const int nc = y[i] > 0.0 ? n_pos : n_neg;
    cw[i] = opts.balanced ? opts.c * n / (2.0 * nc) : opts.c;
  }

  std::vector<double> xnorm2(n);
  for (int i = 0; i < n; ++i) xnorm2[i] = dot(vectors[i].data, vectors[i].data);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(m, 0.0);
  std::vector<double> f(n, 0.0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);

  SvmTrainStats local;
  SvmTrainStats& st = stats ? *stats : local;
  st = {};

  double bias = 0.0;
  for (int epoch = 0; epoch < opts.max_passes; ++epoch) {
    rng.shuffle(order);

    // Tracked extreme residuals (E = w.x - y) over examples visited this
    // epoch, restricted to the sets that can move in each direction.
    int up_idx = -1, low_idx = -1;
    double up_e = std::numeric_limits<double>::infinity();
    double low_e = -std::numeric_limits<double>::infinity();

    for (const int i : order) {
      const double ei = dot(w, vectors[i].data) - y[i];
      const bool i_up = (y[i] > 0.0) ? alpha[i] < cw[i] : alpha[i] > 0.0;
      const bool i_low = (y[i] > 0.0) ? alpha[i] > 0.0 : alpha[i] < cw[i];
      if (i_up && ei < up_e) {
        up_e = ei;
        up_idx = i;
      }
      if (i_low && ei > low_e) {
        low_e = ei;
        low_idx = i;
      }

      int candidates[6];
      int n_cand = 0;
      if (up_idx >= 0) candidates[n_cand++] = up_idx;
      if (low_idx >= 0) candidates[n_cand++] = low_idx;
      for (int r = 0; r < 4; ++r)
        candidates[n_cand++] =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

      int best_j = -1;
      double best_dec = 0.0, best_d = 0.0;
      for (int c = 0; c < n_cand; ++c) {
        const int j = candidates[c];
        if (j == i) continue;
        bool seen = false;
        for (int p = 0; p < c; ++p)
          if (candidates[p] == j) {
            seen = true;
            break;
          }
        if (seen) continue;

        const double ej = dot(w, vectors[j].data) - y[j];
        const double gprime = ei - ej;
        const double eta =
            xnorm2[i] + xnorm2[j] - 2.0 * dot(vectors[i].data, vectors[j].data);

        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        step_bounds(alpha[i], y[i], cw[i], true, lo, hi);
        step_bounds(alpha[j], y[j], cw[j], false, lo, hi);
        if (!(hi > lo)) continue;

        double d;
        if (eta > 1e-12 * (xnorm2[i] + xnorm2[j] + 1e-300)) {
          d = std::clamp(-gprime / eta, lo, hi);
        } else if (gprime > 0.0) {
          d = lo;
        } else if (gprime < 0.0) {
          d = hi;
        } else {
          continue;
        }
        const double dec = gprime * d + 0.5 * std::max(eta, 0.0) * d * d;
        if (dec < best_dec) {
          best_dec = dec;
          best_d = d;
          best_j = j;
        }
      }

      if (best_j >= 0) {
        const int j = best_j;
        const double d = best_d;
        alpha[i] = std::clamp(alpha[i] + y[i] * d, 0.0, cw[i]);
        alpha[j] = std::clamp(alpha[j] - y[j] * d, 0.0, cw[j]);
        for (std::size_t t = 0; t < m; ++t)
          w[t] += d * (vectors[i].data[t] - vectors[j].data[t]);
      }
    }

    for (int i = 0; i < n; ++i) f[i] = dot(w, vectors[i].data);
    const BiasFit bf = optimal_bias(f, y, cw);
    bias = bf.bias;

    const double wnorm2 = dot(w, w);
    const double sum_alpha = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double primal = 0.5 * wnorm2 + bf.hinge;
    const double dual = sum_alpha - 0.5 * wnorm2;

    st.epochs = epoch + 1;
    st.primal_objective = primal;
    st.dual_objective = dual;
    st.duality_gap = primal - dual;
    st.dual_history.push_back(dual);
    if (st.duality_gap <= opts.tol * std::max(1.0, std::abs(primal))) {
      st.converged = true;
      break;
    }
  }

  SvmModel model;
  model.weights = std::move(w);
  model.bias = bias;
  model.c = opts.c;
  model.negative_label = neg_label;
  model.positive_label = pos_label;
  return model;
}

SvmPrediction svm_predict(const SvmModel& model, const TangentVector& v) {
  if (v.data.size() != model.weights.size())
    throw DimensionMismatch("input dimension does not match model weights");
  const double margin = dot(model.weights, v.data) + model.bias;
  return {margin >= 0.0 ? model.positive_label : model.negative_label, margin};
}

std::string svm_to_json(const SvmModel& model) {
  nlohmann::json j;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["C"] = model.c;
  j["classes"] = {{"negative", model.negative_label},
                  {"positive", model.positive_label}};
  return j.dump(2);
}

SvmModel svm_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    SvmModel model;
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    model.c = j.at("C").get<double>();
    model.negative_label = j.at("classes").at("negative").get<int>();
    model.positive_label = j.at("classes").at("positive").get<int>();
    if (!(model.c > 0.0)) throw ParseError("model C must be > 0");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad SVM model JSON: ") + e.what());
  }
}

}  // namespace rsel
