#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsel/manifold.hpp"

namespace rsel {

// Linear soft-margin SVM on tangent vectors.
//
// Trained through the dual of the hinge-loss primal
//   min_{w,b}  1/2 ||w||^2 + sum_i C_i max(0, 1 - y_i (w.x_i + b)),
// keeping the bias unregularized (equality constraint sum_i y_i alpha_i = 0
// in the dual). That choice matters: it is what makes the scaling identity
// (inputs * gamma, C / gamma^2) give exactly the same decision function on
// scaled points, which regularized-bias formulations only approximate.
struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c = 1.0;
  int negative_label = 0;
  int positive_label = 1;
};

struct SvmOptions {
  double c = 1.0;
  double tol = 1e-4;      // relative duality-gap tolerance
  int max_passes = 1000;  // epoch cap
  std::uint64_t seed = 42;
  // Weight each class by C * N / (2 * N_class) so rare classes are not
  // drowned out. Off reverts to a single C for every example.
  bool balanced = true;
};

struct SvmTrainStats {
  int epochs = 0;
  double duality_gap = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  bool converged = false;
  std::vector<double> dual_history;  // dual objective after each epoch
};

// Pairwise dual coordinate descent. Each epoch sweeps the examples in a
// seeded-shuffled order; for every first index the partner is chosen by
// best clipped objective decrease among the tracked extreme-residual
// examples and a few random candidates. The bias is recovered after each
// epoch by exact minimization of the piecewise-linear primal in b, and the
// resulting duality gap decides convergence. Throws SingleClass unless both
// labels occur.
SvmModel svm_train(const std::vector<TangentVector>& vectors,
                   const std::vector<int>& labels, const SvmOptions& opts = {},
                   SvmTrainStats* stats = nullptr);

struct SvmPrediction {
  int label = 0;
  double margin = 0.0;  // w.v + b; zero maps to the positive class
};

SvmPrediction svm_predict(const SvmModel& model, const TangentVector& v);

std::string svm_to_json(const SvmModel& model);
SvmModel svm_from_json(const std::string& text);

}  // namespace rsel
