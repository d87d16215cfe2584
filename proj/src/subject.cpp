#include "rsel/subject.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "rsel/errors.hpp"
#include "rsel/rng.hpp"

namespace rsel {

void prepare(SubjectRecord& subject, double shrinkage,
             const FrechetConfig& cfg) {
  if (subject.epochs.empty())
    throw InvalidArgument("subject " + subject.subject_id + " has no epochs");
  subject.scms.clear();
  subject.scms.reserve(subject.epochs.size());
  for (const Epoch& e : subject.epochs)
    subject.scms.push_back(scm(e.features, shrinkage));
  subject.mean = frechet_mean(subject.scms, cfg);
  if (subject.labels.size() != subject.epochs.size()) {
    subject.labels.resize(subject.epochs.size());
    for (std::size_t i = 0; i < subject.epochs.size(); ++i)
      subject.labels[i] = subject.epochs[i].label;
  }
}

std::vector<Interval> events_from_labels(const std::vector<int>& labels,
                                         double epoch_len_sec) {
  std::vector<Interval> events;
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n;) {
    if (labels[i] == 0) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && labels[j] != 0) ++j;
    events.push_back({i * epoch_len_sec, j * epoch_len_sec});
    i = j;
  }
  return events;
}

namespace {

// Random symmetric matrix with unit Frobenius norm; entry order is fixed so
// the stream layout is reproducible.
SymmetricMatrix random_direction(int n, Rng& rng) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = rng.normal();
      m(i, j) = v;
      m(j, i) = v;
    }
  const double norm = frobenius_norm(m);
  return SymmetricMatrix(norm > 0.0 ? (1.0 / norm) * m : Matrix::identity(n));
}

}  // namespace

SynthPopulation synth_population(const SynthOptions& opts) {
  if (opts.n_clusters < 1 || opts.subjects_per_cluster < 1 ||
      opts.epochs_per_subject < 1)
    throw InvalidArgument("population counts must be >= 1");
  if (opts.channels < 2 || opts.samples_per_epoch <= opts.channels)
    throw InvalidArgument(
        "need >= 2 channels and more samples per epoch than channels");
  if (!(opts.separation >= 0.0) || !(opts.within_spread > 0.0) ||
      !(opts.jitter >= 0.0) || !(opts.label_effect >= 0.0))
    throw InvalidArgument("population scales must be non-negative");
  if (!(opts.seizure_fraction > 0.0 && opts.seizure_fraction < 1.0))
    throw InvalidArgument("seizure fraction must lie in (0, 1)");

  const int n = opts.channels;
  const int n_subjects = opts.n_clusters * opts.subjects_per_cluster;

  Rng cluster_rng(Rng::derive_seed(opts.seed, 0xC1));
  std::vector<SpdMatrix> base_sqrt;
  std::vector<SymmetricMatrix> label_dir;
  base_sqrt.reserve(opts.n_clusters);
  label_dir.reserve(opts.n_clusters);
  for (int k = 0; k < opts.n_clusters; ++k) {
    const SymmetricMatrix e = random_direction(n, cluster_rng);
    const SpdMatrix base = sym_exp(SymmetricMatrix(
        opts.separation * opts.within_spread * e.matrix()));
    base_sqrt.push_back(spd_sqrt(base));
    label_dir.push_back(random_direction(n, cluster_rng));
  }

  const int n_epochs = opts.epochs_per_subject;
  const int block = std::max(
      1, static_cast<int>(std::lround(opts.seizure_fraction * n_epochs)));
  const int block_start = std::max(0, (n_epochs - block) / 2);
  const int block_end = std::min(n_epochs, block_start + block);

  SynthPopulation pop;
  pop.subjects.reserve(n_subjects);
  pop.truth.reserve(n_subjects);
  for (int k = 0; k < opts.n_clusters; ++k) {
    for (int s = 0; s < opts.subjects_per_cluster; ++s) {
      const int j = k * opts.subjects_per_cluster + s;
      Rng rng(Rng::derive_seed(opts.seed, 0x1000 + j));

      const SymmetricMatrix d = random_direction(n, rng);
      const SpdMatrix inner =
          sym_exp(SymmetricMatrix(opts.within_spread * d.matrix()));
      const SpdMatrix subject_cov(base_sqrt[k].matrix() * inner.matrix() *
                                  base_sqrt[k].matrix());
      const SpdMatrix w = spd_sqrt(subject_cov);

      SubjectRecord rec;
      char id[16];
      std::snprintf(id, sizeof(id), "subj%02d", j);
      rec.subject_id = id;
      rec.epochs.reserve(n_epochs);
      rec.labels.reserve(n_epochs);
      for (int e = 0; e < n_epochs; ++e) {
        const int label = (e >= block_start && e < block_end) ? 1 : 0;
        Matrix tangent = opts.label_effect * (label ? 1.0 : -1.0) *
                         label_dir[k].matrix();
        if (opts.jitter > 0.0)
          tangent = tangent + opts.jitter * random_direction(n, rng).matrix();
        const SpdMatrix inner_e = sym_exp(SymmetricMatrix(std::move(tangent)));
        const SpdMatrix epoch_cov(w.matrix() * inner_e.matrix() * w.matrix());
        const SpdMatrix a = spd_sqrt(epoch_cov);

        Matrix z(n, opts.samples_per_epoch);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < opts.samples_per_epoch; ++c)
            z(r, c) = rng.normal();

        Epoch ep;
        ep.features = a.matrix() * z;
        ep.label = label;
        ep.start_sec = e * opts.epoch_len_sec;
        rec.epochs.push_back(std::move(ep));
        rec.labels.push_back(label);
      }
      rec.seizure_events = events_from_labels(rec.labels, opts.epoch_len_sec);
      rec.total_hours = n_epochs * opts.epoch_len_sec / 3600.0;
      prepare(rec);
      pop.subjects.push_back(std::move(rec));
      pop.truth.push_back(k);
    }
  }
  return pop;
}

SynthPopulation synth_population(int n_clusters, int subjects_per_cluster,
                                 int epochs_per_subject, double separation,
                                 std::uint64_t seed) {
  SynthOptions opts;
  opts.n_clusters = n_clusters;
  opts.subjects_per_cluster = subjects_per_cluster;
  opts.epochs_per_subject = epochs_per_subject;
  opts.separation = separation;
  opts.seed = seed;
  return synth_population(opts);
}

}  // namespace rsel
