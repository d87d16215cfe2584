#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsel/clustering.hpp"
#include "rsel/subject.hpp"

namespace rsel {

// Whether false-positive rate counts merged events (consecutive
// false-positive epochs collapse to one) or raw epochs.
enum class FprMode { event, epoch };

std::string to_string(FprMode mode);
FprMode fpr_mode_from_string(const std::string& s);

struct RunConfig {
  double sigma = 0.5;
  double tau = 0.05;
  std::optional<int> k_override;
  double svm_c = 1.0;
  std::uint64_t seed = 42;
  double epoch_len_sec = 10.0;
  double low_hz = 0.5;
  double high_hz = 30.0;
  int filter_order = 5;
  bool recenter_before_cluster = false;
  FprMode fpr_mode = FprMode::event;
};

// Throws InvalidArgument when any field is out of range.
void validate(const RunConfig& cfg);

// The config echo block embedded in every output document.
std::string run_config_json(const RunConfig& cfg);

struct MetricsRow {
  std::string subject_id;
  int cluster = -1;        // -1 when clustering was not used
  int train_subjects = 0;
  bool fallback = false;   // fold trained on all others instead of cluster
  int n_epochs = 0;
  double accuracy_pct = 0.0;
  std::optional<double> sensitivity_pct;  // absent without seizure epochs
  std::optional<double> specificity_pct;  // absent without non-seizure epochs
  double fpr_per_hour = 0.0;
  std::optional<double> latency_sec;      // absent without detected events
  std::vector<int> predictions;           // per-epoch predicted labels
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 when n < 2
  int n = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;  // in subject order
  bool clustered = true;
  int k = 0;
  std::vector<int> assignments;
  Aggregate accuracy, sensitivity, specificity, fpr, latency;

  // Aligned five-column text table (subject, accuracy, sensitivity, FPR,
  // latency) with Mean and Std rows; specificity goes in a footer line.
  // Undefined cells print as "-". Latency resolution is bounded by the
  // epoch grid.
  std::string to_table() const;
};

// Epoch-wise accuracy/sensitivity/specificity plus event-merged FPR per
// hour and mean detection latency over the true events. Epoch e covers
// [e*len, (e+1)*len) seconds.
MetricsRow compute_metrics(const std::vector<int>& predictions,
                           const std::vector<int>& truth,
                           const std::vector<Interval>& events,
                           double epoch_len_sec, double total_hours,
                           FprMode mode);

enum class TrainingSelection {
  clustered,  // train on the held-out subject's cluster peers
  all,        // train-on-all baseline
};

// Leave-one-subject-out evaluation. Unprepared subjects are prepared in
// place. Per fold: the held-out subject's cluster peers (their covariances
// recentered by their own means) are pooled, a Frechet reference is taken,
// everything is tangent-mapped there, a linear SVM is trained and the
// held-out subject's recentered epochs are scored. The held-out subject's
// labels are read only by the metrics step. Folds run in parallel; the
// report is identical for any thread count.
MetricsReport loso_run(std::vector<SubjectRecord>& subjects,
                       const RunConfig& cfg,
                       TrainingSelection selection = TrainingSelection::clustered,
                       int threads = 1);

std::string report_json(const MetricsReport& report, const RunConfig& cfg);
std::string paired_report_json(const MetricsReport& clustered,
                               const MetricsReport& baseline,
                               const RunConfig& cfg);

}  // namespace rsel
