#include "rsel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "rsel/errors.hpp"
#include "rsel/parallel.hpp"
#include "rsel/rng.hpp"
#include "rsel/svm.hpp"
#include "rsel/version.hpp"

namespace rsel {

std::string to_string(FprMode mode) {
  return mode == FprMode::event ? "event" : "epoch";
}

FprMode fpr_mode_from_string(const std::string& s) {
  if (s == "event") return FprMode::event;
  if (s == "epoch") return FprMode::epoch;
  throw InvalidArgument("fpr-mode must be 'event' or 'epoch', got '" + s +
                        "'");
}

void validate(const RunConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0))
    throw InvalidArgument("tau must lie in (0, 1)");
  if (cfg.k_override && *cfg.k_override < 1)
    throw InvalidArgument("k override must be >= 1");
  if (!(cfg.svm_c > 0.0)) throw InvalidArgument("svm C must be > 0");
  if (!(cfg.epoch_len_sec > 0.0))
    throw InvalidArgument("epoch length must be > 0");
  if (!(cfg.low_hz > 0.0 && cfg.low_hz < cfg.high_hz))
    throw InvalidArgument("band edges must satisfy 0 < low < high");
  if (cfg.filter_order < 1) throw InvalidArgument("filter order must be >= 1");
}

namespace {

nlohmann::json config_block(const RunConfig& cfg) {
  nlohmann::json j;
  j["sigma"] = cfg.sigma;
  j["tau"] = cfg.tau;
  if (cfg.k_override)
    j["k"] = *cfg.k_override;
  else
    j["k"] = nullptr;
  j["svm_c"] = cfg.svm_c;
  j["seed"] = cfg.seed;
  j["epoch_len"] = cfg.epoch_len_sec;
  j["low_hz"] = cfg.low_hz;
  j["high_hz"] = cfg.high_hz;
  j["order"] = cfg.filter_order;
  j["recenter_before_cluster"] = cfg.recenter_before_cluster;
  j["fpr_mode"] = to_string(cfg.fpr_mode);
  return j;
}

}  // namespace

std::string run_config_json(const RunConfig& cfg) {
  return config_block(cfg).dump(2);
}

MetricsRow compute_metrics(const std::vector<int>& predictions,
                           const std::vector<int>& truth,
                           const std::vector<Interval>& events,
                           double epoch_len_sec, double total_hours,
                           FprMode mode) {
  if (predictions.size() != truth.size())
    throw DimensionMismatch("prediction and truth lengths differ");
  const int n = static_cast<int>(predictions.size());
  if (n == 0) throw InvalidArgument("no epochs to score");
  if (!(total_hours > 0.0)) throw InvalidArgument("total hours must be > 0");
  if (!(epoch_len_sec > 0.0)) throw InvalidArgument("epoch length must be > 0");

  int tp = 0, tn = 0, fp = 0, fn = 0;
  for (int i = 0; i < n; ++i) {
    const bool p = predictions[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t)
      ++tp;
    else if (!p && !t)
      ++tn;
    else if (p)
      ++fp;
    else
      ++fn;
  }

  MetricsRow row;
  row.n_epochs = n;
  row.predictions = predictions;
  row.accuracy_pct = 100.0 * (tp + tn) / n;
  if (tp + fn > 0) row.sensitivity_pct = 100.0 * tp / (tp + fn);
  if (tn + fp > 0) row.specificity_pct = 100.0 * tn / (tn + fp);

  int fp_events = 0;
  bool in_run = false;
  for (int i = 0; i < n; ++i) {
    const bool is_fp = predictions[i] != 0 && truth[i] == 0;
    if (is_fp && !in_run) ++fp_events;
    in_run = is_fp;
  }
  row.fpr_per_hour =
      (mode == FprMode::event ? fp_events : fp) / total_hours;

  double latency_sum = 0.0;
  int detected = 0;
  for (const Interval& ev : events) {
    for (int e = 0; e < n; ++e) {
      if (predictions[e] == 0) continue;
      const double t0 = e * epoch_len_sec;
      const double t1 = t0 + epoch_len_sec;
      if (t1 <= ev.onset_sec || t0 >= ev.offset_sec) continue;
      latency_sum += std::max(0.0, t0 - ev.onset_sec);
      ++detected;
      break;
    }
  }
  if (detected > 0) row.latency_sec = latency_sum / detected;
  return row;
}

namespace {

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (a.n == 0) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.n;
  if (a.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (a.n - 1));
  }
  return a;
}

void fill_aggregates(MetricsReport& report) {
  std::vector<double> acc, sens, spec, fpr, lat;
  for (const MetricsRow& r : report.rows) {
    acc.push_back(r.accuracy_pct);
    fpr.push_back(r.fpr_per_hour);
    if (r.sensitivity_pct) sens.push_back(*r.sensitivity_pct);
    if (r.specificity_pct) spec.push_back(*r.specificity_pct);
    if (r.latency_sec) lat.push_back(*r.latency_sec);
  }
  report.accuracy = aggregate_of(acc);
  report.sensitivity = aggregate_of(sens);
  report.specificity = aggregate_of(spec);
  report.fpr = aggregate_of(fpr);
  report.latency = aggregate_of(lat);
}

std::string cell(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  const auto line = [&](const std::string& subject, const std::string& a,
                        const std::string& s, const std::string& f,
                        const std::string& l) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %14s %17s %22s %13s\n",
                  subject.c_str(), a.c_str(), s.c_str(), f.c_str(), l.c_str());
    out << buf;
  };
  line("Subject", "Accuracy (%)", "Sensitivity (%)", "FPR (seizures/h)",
       "Latency (s)");
  for (const MetricsRow& r : rows) {
    std::string id = r.subject_id;
    if (r.fallback) id += "*";
    line(id, cell(r.accuracy_pct), cell(r.sensitivity_pct),
         cell(r.fpr_per_hour), cell(r.latency_sec));
  }
  line("Mean", cell(accuracy.mean),
       cell(sensitivity.n ? std::optional<double>(sensitivity.mean)
                          : std::nullopt),
       cell(fpr.mean),
       cell(latency.n ? std::optional<double>(latency.mean) : std::nullopt));
  line("Std", cell(accuracy.stddev),
       cell(sensitivity.n ? std::optional<double>(sensitivity.stddev)
                          : std::nullopt),
       cell(fpr.stddev),
       cell(latency.n ? std::optional<double>(latency.stddev) : std::nullopt));
  out << "Mean specificity (%): "
      << cell(specificity.n ? std::optional<double>(specificity.mean)
                            : std::nullopt)
      << "\n";
  if (std::any_of(rows.begin(), rows.end(),
                  [](const MetricsRow& r) { return r.fallback; }))
    out << "* fold fell back to training on all other subjects\n";
  return out.str();
}

MetricsReport loso_run(std::vector<SubjectRecord>& subjects,
                       const RunConfig& cfg, TrainingSelection selection,
                       int threads) {
  validate(cfg);
  const int n = static_cast<int>(subjects.size());
  if (n < 3) throw InvalidArgument("LOSO needs at least 3 subjects");

  parallel_for(n, threads, [&](int j) {
    if (!subjects[j].prepared()) prepare(subjects[j]);
  });

  // Own-mean recentering is fold-independent, so it is done once per
  // subject and shared by every fold that uses the subject.
  std::vector<std::vector<SpdMatrix>> recentered(n);
  parallel_for(n, threads, [&](int j) {
    recentered[j] = recenter(subjects[j].scms, *subjects[j].mean);
  });

  MetricsReport report;
  report.clustered = selection == TrainingSelection::clustered;
  if (report.clustered) {
    std::vector<SpdMatrix> means;
    means.reserve(n);
    if (cfg.recenter_before_cluster) {
      // Literal ordering: recenter first, then cluster. Every mean is then
      // the identity up to estimation error; kept as a demonstration mode.
      for (int j = 0; j < n; ++j)
        means.push_back(frechet_mean(recentered[j]));
    } else {
      for (int j = 0; j < n; ++j) means.push_back(*subjects[j].mean);
    }
    SpectralOptions opts;
    opts.sigma = cfg.sigma;
    opts.tau = cfg.tau;
    opts.k_override = cfg.k_override;
    opts.seed = cfg.seed;
    const ClusterModel model = spectral_cluster(means, opts);
    report.k = model.k;
    report.assignments = model.assignments;
  }

  report.rows.resize(n);
  parallel_for(n, threads, [&](int t) {
    std::vector<int> train_ids;
    bool fallback = false;
    if (report.clustered) {
      for (int j = 0; j < n; ++j)
        if (j != t && report.assignments[j] == report.assignments[t])
          train_ids.push_back(j);
      if (train_ids.empty()) fallback = true;
    }
    if (!report.clustered || fallback) {
      train_ids.clear();
      for (int j = 0; j < n; ++j)
        if (j != t) train_ids.push_back(j);
    }

    const auto has_both_classes = [&](const std::vector<int>& ids) {
      bool pos = false, neg = false;
      for (const int j : ids)
        for (const int label : subjects[j].labels)
          (label != 0 ? pos : neg) = true;
      return pos && neg;
    };
    if (report.clustered && !fallback && !has_both_classes(train_ids)) {
      fallback = true;
      train_ids.clear();
      for (int j = 0; j < n; ++j)
        if (j != t) train_ids.push_back(j);
    }
    if (!has_both_classes(train_ids))
      throw SingleClass("training pool for " + subjects[t].subject_id +
                        " has a single class even over all subjects");

    std::vector<SpdMatrix> pool;
    std::vector<TangentVector> train_vecs;
    std::vector<int> train_labels;
    for (const int j : train_ids) {
      pool.insert(pool.end(), recentered[j].begin(), recentered[j].end());
      train_labels.insert(train_labels.end(), subjects[j].labels.begin(),
                          subjects[j].labels.end());
    }
    const SpdMatrix reference = frechet_mean(pool);
    train_vecs.reserve(pool.size());
    for (const SpdMatrix& s : pool)
      train_vecs.push_back(vectorize(tangent_map(s, reference)));

    SvmOptions svm_opts;
    svm_opts.c = cfg.svm_c;
    svm_opts.seed = Rng::derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(t));
    const SvmModel model = svm_train(train_vecs, train_labels, svm_opts);

    std::vector<int> predictions;
    predictions.reserve(recentered[t].size());
    for (const SpdMatrix& s : recentered[t])
      predictions.push_back(
          svm_predict(model, vectorize(tangent_map(s, reference))).label);

    const SubjectRecord& held = subjects[t];
    const std::vector<Interval> events =
        held.seizure_events.empty()
            ? events_from_labels(held.labels, cfg.epoch_len_sec)
            : held.seizure_events;
    const double hours =
        held.total_hours > 0.0
            ? held.total_hours
            : held.labels.size() * cfg.epoch_len_sec / 3600.0;

    MetricsRow row = compute_metrics(predictions, held.labels, events,
                                     cfg.epoch_len_sec, hours, cfg.fpr_mode);
    row.subject_id = held.subject_id;
    row.cluster = report.clustered ? report.assignments[t] : -1;
    row.train_subjects = static_cast<int>(train_ids.size());
    row.fallback = fallback;
    report.rows[t] = std::move(row);
  });

  fill_aggregates(report);
  return report;
}

namespace {

nlohmann::json aggregate_json(const Aggregate& a) {
  nlohmann::json j;
  j["mean"] = a.mean;
  j["std"] = a.stddev;
  j["n"] = a.n;
  return j;
}

nlohmann::json report_block(const MetricsReport& report) {
  nlohmann::json j;
  j["mode"] = report.clustered ? "clustered" : "train_on_all";
  j["k"] = report.k;
  j["assignments"] = report.assignments;
  nlohmann::json rows = nlohmann::json::array();
  for (const MetricsRow& r : report.rows) {
    nlohmann::json row;
    row["subject"] = r.subject_id;
    row["cluster"] = r.cluster;
    row["train_subjects"] = r.train_subjects;
    row["fallback"] = r.fallback;
    row["n_epochs"] = r.n_epochs;
    row["accuracy_pct"] = r.accuracy_pct;
    row["sensitivity_pct"] =
        r.sensitivity_pct ? nlohmann::json(*r.sensitivity_pct)
                          : nlohmann::json(nullptr);
    row["specificity_pct"] =
        r.specificity_pct ? nlohmann::json(*r.specificity_pct)
                          : nlohmann::json(nullptr);
    row["fpr_per_hour"] = r.fpr_per_hour;
    row["latency_sec"] = r.latency_sec ? nlohmann::json(*r.latency_sec)
                                       : nlohmann::json(nullptr);
    row["predictions"] = r.predictions;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  nlohmann::json agg;
  agg["accuracy_pct"] = aggregate_json(report.accuracy);
  agg["sensitivity_pct"] = aggregate_json(report.sensitivity);
  agg["specificity_pct"] = aggregate_json(report.specificity);
  agg["fpr_per_hour"] = aggregate_json(report.fpr);
  agg["latency_sec"] = aggregate_json(report.latency);
  j["aggregate"] = std::move(agg);
  return j;
}

}  // namespace

std::string report_json(const MetricsReport& report, const RunConfig& cfg) {
  nlohmann::json j = report_block(report);
  j["version"] = kVersion;
  j["config"] = config_block(cfg);
  return j.dump(2);
}

std::string paired_report_json(const MetricsReport& clustered,
                               const MetricsReport& baseline,
                               const RunConfig& cfg) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_block(cfg);
  j["clustered"] = report_block(clustered);
  j["baseline"] = report_block(baseline);
  j["accuracy_mean_delta"] = clustered.accuracy.mean - baseline.accuracy.mean;
  return j.dump(2);
}

}  // namespace rsel
