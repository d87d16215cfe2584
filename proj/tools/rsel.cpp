#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsel/clustering.hpp"
#include "rsel/errors.hpp"
#include "rsel/ingest.hpp"
#include "rsel/parallel.hpp"
#include "rsel/pipeline.hpp"
#include "rsel/signal.hpp"
#include "rsel/subject.hpp"
#include "rsel/version.hpp"

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rsel::IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw rsel::IoError("failed reading '" + path + "'");
  return bytes;
}

std::string read_text(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rsel::IoError("cannot create '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw rsel::IoError("failed writing '" + path + "'");
}

void write_file(const std::string& path,
                const std::vector<std::uint8_t>& bytes) {
  write_file(path,
             std::string(reinterpret_cast<const char*>(bytes.data()),
                         bytes.size()));
}

std::string file_stem(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return name;
}

std::string subject_of(const std::string& stem) {
  const auto underscore = stem.find('_');
  return underscore == std::string::npos ? stem : stem.substr(0, underscore);
}

struct CliState {
  rsel::RunConfig cfg;
  int k = 0;
  int threads = 1;
  std::vector<CLI::Option*> k_opts;  // one per subcommand
  std::string fpr_mode = "event";
  std::string config_path;

  void finalize() {
    for (const CLI::Option* opt : k_opts)
      if (opt->count() > 0) cfg.k_override = k;
    cfg.fpr_mode = rsel::fpr_mode_from_string(fpr_mode);
    rsel::validate(cfg);
  }
};

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T config_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T v{};
  char extra = 0;
  if (!(is >> v) || is >> extra)
    throw rsel::InvalidArgument("config: bad value '" + value + "' for '" +
                                key + "'");
  return v;
}

bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw rsel::InvalidArgument("config: bad value '" + value + "' for '" +
                              key + "'");
}

// Applied before argv parsing so explicit flags overwrite file values.
void apply_config_file(const std::string& path, CliState& st) {
  std::ifstream in(path);
  if (!in) throw rsel::IoError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trimmed(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw rsel::InvalidArgument("config: line " + std::to_string(lineno) +
                                  " is not key=value");
    const std::string key = trimmed(s.substr(0, eq));
    const std::string value = trimmed(s.substr(eq + 1));
    if (key == "sigma")
      st.cfg.sigma = config_number<double>(key, value);
    else if (key == "tau")
      st.cfg.tau = config_number<double>(key, value);
    else if (key == "k")
      st.cfg.k_override = config_number<int>(key, value);
    else if (key == "svm_c" || key == "svm-c")
      st.cfg.svm_c = config_number<double>(key, value);
    else if (key == "seed")
      st.cfg.seed = config_number<std::uint64_t>(key, value);
    else if (key == "epoch_len" || key == "epoch-len")
      st.cfg.epoch_len_sec = config_number<double>(key, value);
    else if (key == "low_hz" || key == "low-hz")
      st.cfg.low_hz = config_number<double>(key, value);
    else if (key == "high_hz" || key == "high-hz")
      st.cfg.high_hz = config_number<double>(key, value);
    else if (key == "order")
      st.cfg.filter_order = config_number<int>(key, value);
    else if (key == "recenter_before_cluster" ||
             key == "recenter-before-cluster")
      st.cfg.recenter_before_cluster = config_bool(key, value);
    else if (key == "fpr_mode" || key == "fpr-mode")
      st.fpr_mode = value;
    else if (key == "threads")
      st.threads = config_number<int>(key, value);
    else
      throw rsel::InvalidArgument("config: unknown key '" + key + "'");
  }
}

// CLI11 only processes set_config on the root app, so the config option is an
// ordinary flag here and the file is loaded by a pre-scan of argv.
std::string scan_for_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

void add_config_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--sigma", st.cfg.sigma, "Affinity kernel width")
      ->capture_default_str();
  cmd->add_option("--tau", st.cfg.tau,
                  "Near-unity eigenvalue threshold for the cluster count")
      ->capture_default_str();
  st.k_opts.push_back(cmd->add_option(
      "--k", st.k, "Cluster count override (estimated when omitted)"));
  cmd->add_option("--svm-c", st.cfg.svm_c, "SVM regularization C")
      ->capture_default_str();
  cmd->add_option("--seed", st.cfg.seed, "Random seed")
      ->capture_default_str();
  cmd->add_option("--epoch-len", st.cfg.epoch_len_sec,
                  "Epoch length in seconds")
      ->capture_default_str();
  cmd->add_option("--order", st.cfg.filter_order, "Band-pass filter order")
      ->capture_default_str();
  cmd->add_option("--low-hz", st.cfg.low_hz, "Band-pass lower edge in Hz")
      ->capture_default_str();
  cmd->add_option("--high-hz", st.cfg.high_hz, "Band-pass upper edge in Hz")
      ->capture_default_str();
  cmd->add_flag("--recenter-before-cluster", st.cfg.recenter_before_cluster,
                "Recenter per subject before clustering (literal, degenerate "
                "ordering; clustering then sees near-identity means)");
  cmd->add_option("--fpr-mode", st.fpr_mode,
                  "False-positive rate counting: event or epoch")
      ->capture_default_str();
  cmd->add_option("--threads", st.threads, "Worker thread cap")
      ->capture_default_str();
  cmd->add_option("--config", st.config_path,
                  "key=value config file; command-line flags win");
}

void prepare_all(std::vector<rsel::SubjectRecord>& subjects, int threads) {
  rsel::parallel_for(static_cast<int>(subjects.size()), threads,
                     [&](int i) { rsel::prepare(subjects[i]); });
}

nlohmann::json with_config(const std::string& body_json,
                           const rsel::RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::parse(body_json);
  j["version"] = rsel::kVersion;
  j["config"] = nlohmann::json::parse(rsel::run_config_json(cfg));
  return j;
}

void emit(const std::string& output, const std::string& text) {
  if (output.empty() || output == "-")
    std::cout << text << "\n";
  else
    write_file(output, text + "\n");
}

void run_features(const CliState& st, const std::vector<std::string>& edf_paths,
                  const std::string& annotations_path,
                  const std::string& output) {
  rsel::AnnotationFile annotations;
  if (!annotations_path.empty())
    annotations = rsel::load_annotations(read_text(annotations_path));

  // One subject per filename prefix (before the first underscore); several
  // recordings of one subject concatenate on a shifted timeline.
  std::map<std::string, rsel::SubjectRecord> by_subject;
  std::map<std::string, double> elapsed_sec;
  std::vector<std::string> subject_order;

  std::vector<std::string> sorted_paths = edf_paths;
  std::sort(sorted_paths.begin(), sorted_paths.end());
  for (const std::string& path : sorted_paths) {
    rsel::Recording rec = rsel::parse_edf(read_file(path));
    const std::string stem = file_stem(path);
    if (const auto it = annotations.find(stem); it != annotations.end())
      rec.annotations = it->second;

    const rsel::IirFilter filter = rsel::butterworth_bandpass(
        st.cfg.filter_order, st.cfg.low_hz, st.cfg.high_hz, rec.fs);
    const rsel::Recording filtered = rsel::filt(filter, rec);
    std::vector<rsel::Epoch> epochs =
        rsel::make_epochs(filtered, st.cfg.epoch_len_sec);
    for (rsel::Epoch& e : epochs)
      e.features = rsel::band_features(e.features, filtered.fs);

    const std::string id = subject_of(stem);
    if (by_subject.find(id) == by_subject.end()) {
      by_subject[id].subject_id = id;
      elapsed_sec[id] = 0.0;
      subject_order.push_back(id);
    }
    rsel::SubjectRecord& subj = by_subject[id];
    if (!subj.epochs.empty() &&
        subj.epochs[0].features.rows() != epochs[0].features.rows())
      throw rsel::DimensionMismatch("channel count differs across recordings of '" +
                                    id + "'");
    const double shift = elapsed_sec[id];
    for (rsel::Epoch& e : epochs) {
      e.start_sec += shift;
      subj.labels.push_back(e.label);
      subj.epochs.push_back(std::move(e));
    }
    for (const rsel::Interval& iv : rec.annotations)
      subj.seizure_events.push_back(
          {iv.onset_sec + shift, iv.offset_sec + shift});
    elapsed_sec[id] += filtered.duration_sec();
    subj.total_hours = elapsed_sec[id] / 3600.0;
  }

  std::vector<rsel::SubjectRecord> subjects;
  subjects.reserve(subject_order.size());
  for (const std::string& id : subject_order)
    subjects.push_back(std::move(by_subject[id]));
  if (subjects.empty()) throw rsel::InvalidArgument("no EDF inputs given");
  write_file(output, rsel::epoch_store_write(subjects));
  std::cerr << "wrote " << subjects.size() << " subject(s) to " << output
            << "\n";
}

void run_cluster(const CliState& st, const std::string& input,
                 const std::string& output) {
  std::vector<rsel::SubjectRecord> subjects =
      rsel::epoch_store_read(read_file(input), st.cfg.epoch_len_sec);
  if (subjects.size() < 2)
    throw rsel::InvalidArgument("need >= 2 subjects, store has " +
                                std::to_string(subjects.size()));
  prepare_all(subjects, st.threads);

  std::vector<rsel::SpdMatrix> means;
  means.reserve(subjects.size());
  for (const auto& s : subjects) means.push_back(*s.mean);

  rsel::SpectralOptions opts;
  opts.sigma = st.cfg.sigma;
  opts.tau = st.cfg.tau;
  opts.k_override = st.cfg.k_override;
  opts.seed = st.cfg.seed;
  const rsel::ClusterModel model = rsel::spectral_cluster(means, opts);

  nlohmann::json j = with_config(rsel::cluster_model_json(model), st.cfg);
  nlohmann::json subjects_json = nlohmann::json::array();
  for (const auto& s : subjects) subjects_json.push_back(s.subject_id);
  j["subjects"] = std::move(subjects_json);
  emit(output, j.dump(2));
}

void run_loso(const CliState& st, const std::string& input,
              const std::string& output, bool baseline) {
  std::vector<rsel::SubjectRecord> subjects =
      rsel::epoch_store_read(read_file(input), st.cfg.epoch_len_sec);
  const rsel::MetricsReport clustered = rsel::loso_run(
      subjects, st.cfg, rsel::TrainingSelection::clustered, st.threads);
  std::cout << "LOSO (cluster-selected training), K=" << clustered.k << "\n"
            << clustered.to_table();

  std::string json_text;
  if (baseline) {
    const rsel::MetricsReport all = rsel::loso_run(
        subjects, st.cfg, rsel::TrainingSelection::all, st.threads);
    std::cout << "\nLOSO (train-on-all baseline)\n" << all.to_table();
    json_text = rsel::paired_report_json(clustered, all, st.cfg);
  } else {
    json_text = rsel::report_json(clustered, st.cfg);
  }
  if (!output.empty()) {
    write_file(output, json_text + "\n");
    std::cerr << "wrote report to " << output << "\n";
  } else {
    std::cout << json_text << "\n";
  }
}

void run_synth(const CliState& st, const rsel::SynthOptions& base,
               const std::string& output) {
  rsel::SynthOptions opts = base;
  opts.seed = st.cfg.seed;
  opts.epoch_len_sec = st.cfg.epoch_len_sec;
  const rsel::SynthPopulation pop = rsel::synth_population(opts);
  write_file(output, rsel::epoch_store_write(pop.subjects));
  std::cerr << "wrote " << pop.subjects.size() << " subject(s) ("
            << opts.n_clusters << " latent clusters) to " << output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Cross-subject EEG seizure classification via Riemannian geometry of "
      "covariance matrices"};
  app.set_version_flag("--version", rsel::kVersion);
  app.require_subcommand(1);

  CliState st;

  auto* features = app.add_subcommand(
      "features", "EDF + annotations -> filtered band features (RSEL1 store)");
  std::vector<std::string> edf_paths;
  std::string annotations_path, features_out;
  features->add_option("--edf", edf_paths, "EDF input files")
      ->required()
      ->expected(-1);
  features->add_option("--annotations", annotations_path,
                       "CSV of <recording-id>,<onset_sec>,<offset_sec>");
  features->add_option("--output", features_out, "RSEL1 output path")
      ->required();
  add_config_flags(features, st);

  auto* cluster = app.add_subcommand(
      "cluster", "Spectral clustering of subject means from an RSEL1 store");
  std::string cluster_in, cluster_out;
  cluster->add_option("--input", cluster_in, "RSEL1 store")->required();
  cluster->add_option("--output", cluster_out,
                      "Cluster model JSON path ('-' for stdout)");
  add_config_flags(cluster, st);

  auto* loso = app.add_subcommand(
      "loso", "Leave-one-subject-out evaluation with a per-subject metrics "
              "table");
  std::string loso_in, loso_out;
  bool baseline = false;
  loso->add_option("--input", loso_in, "RSEL1 store")->required();
  loso->add_option("--output", loso_out, "Metrics report JSON path");
  loso->add_flag("--baseline", baseline,
                 "Also run the train-on-all baseline and emit a paired report");
  add_config_flags(loso, st);

  auto* synth = app.add_subcommand(
      "synth", "Generate a deterministic synthetic population (RSEL1 store)");
  rsel::SynthOptions synth_opts;
  std::string synth_out;
  synth->add_option("--output", synth_out, "RSEL1 output path")->required();
  synth->add_option("--clusters", synth_opts.n_clusters, "Latent cluster count")
      ->capture_default_str();
  synth->add_option("--subjects-per-cluster", synth_opts.subjects_per_cluster,
                    "Subjects per cluster")
      ->capture_default_str();
  synth->add_option("--epochs-per-subject", synth_opts.epochs_per_subject,
                    "Epochs per subject")
      ->capture_default_str();
  synth->add_option("--separation", synth_opts.separation,
                    "Between-cluster distance in within-spread units")
      ->capture_default_str();
  synth->add_option("--channels", synth_opts.channels, "Channel count")
      ->capture_default_str();
  synth->add_option("--samples-per-epoch", synth_opts.samples_per_epoch,
                    "Feature samples per epoch")
      ->capture_default_str();
  add_config_flags(synth, st);

  try {
    const std::string config_file = scan_for_config(argc, argv);
    if (!config_file.empty()) apply_config_file(config_file, st);
    app.parse(argc, argv);
    st.finalize();
    if (features->parsed())
      run_features(st, edf_paths, annotations_path, features_out);
    else if (cluster->parsed())
      run_cluster(st, cluster_in, cluster_out);
    else if (loso->parsed())
      run_loso(st, loso_in, loso_out, baseline);
    else if (synth->parsed())
      run_synth(st, synth_opts, synth_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rsel::Error& e) {
    std::string line = e.what();
    std::replace(line.begin(), line.end(), '\n', ' ');
    std::cerr << line << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::string line = e.what();
    std::replace(line.begin(), line.end(), '\n', ' ');
    std::cerr << "Internal: " << line << "\n";
    return 2;
  }
  return 0;
}
