#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsel/manifold.hpp"
#include "rsel/signal.hpp"
#include "rsel/spd.hpp"

namespace rsel {

// Everything the pipeline knows about one subject. Epoch features and
// labels are the persistent part; covariances and the subject mean are
// derived by prepare() and left empty until then.
struct SubjectRecord {
  std::string subject_id;
  std::vector<Epoch> epochs;
  std::vector<int> labels;
  std::vector<SpdMatrix> scms;
  std::optional<SpdMatrix> mean;  // pre-recentering Frechet mean of scms
  std::vector<Interval> seizure_events;
  double total_hours = 0.0;

  bool prepared() const noexcept {
    return mean.has_value() && scms.size() == epochs.size();
  }
};

// Computes the per-epoch sample covariances and the subject's Frechet mean.
// Idempotent; recomputes from scratch each call.
void prepare(SubjectRecord& subject, double shrinkage = 0.0,
             const FrechetConfig& cfg = {});

// Maximal runs of consecutive seizure-labeled epochs as intervals on the
// epoch grid; used when true event times are not stored alongside labels.
std::vector<Interval> events_from_labels(const std::vector<int>& labels,
                                         double epoch_len_sec);

struct SynthOptions {
  int n_clusters = 3;
  int subjects_per_cluster = 6;
  int epochs_per_subject = 200;
  double separation = 10.0;  // between-cluster distance in within_spread units
  std::uint64_t seed = 42;

  int channels = 8;
  int samples_per_epoch = 128;
  double within_spread = 0.12;   // geodesic radius of subjects around base
  double label_effect = 0.5;     // seizure/non-seizure displacement
  double jitter = 0.1;           // per-epoch geodesic noise
  double epoch_len_sec = 10.0;
  double seizure_fraction = 0.3;  // one contiguous mid-recording event
};

struct SynthPopulation {
  std::vector<SubjectRecord> subjects;  // prepared
  std::vector<int> truth;               // generating cluster per subject
};

// Deterministic synthetic population. Each cluster owns a base SPD matrix
// exp(separation * within_spread * E_k) and a label direction L_k; subjects
// sit on a geodesic sphere of radius within_spread around their base;
// epoch covariances displace the subject matrix by +-label_effect * L_k
// plus jitter, and epoch features are Gaussian draws whose population
// covariance is that epoch matrix. Label directions are cluster-specific,
// which is what makes training inside the right cluster pay off.
SynthPopulation synth_population(const SynthOptions& opts = {});

SynthPopulation synth_population(int n_clusters, int subjects_per_cluster,
                                 int epochs_per_subject, double separation,
                                 std::uint64_t seed);

}  // namespace rsel
