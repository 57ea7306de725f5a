#pragma once

// Experiment runner: reproduces the accuracy / convergence / confidence /
// multi-object / whitening protocols at desk scale, emitting one CSV row per
// trial plus a summary table. Runs are replayable: a config and seed fix
// every random draw, and trial rows are written in trial order regardless of
// scheduling.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vsa/encoder.hpp"
#include "vsa/resonator.hpp"
#include "vsa/sparse.hpp"

namespace vsa {

enum class ExperimentKind {
  kBarsScaling = 0,
  kMnistScaling = 1,
  kLetters = 2,
  kMultiObject = 3,
  kConfidence = 4,
  kWhitening = 5,
};

ExperimentKind parse_experiment_kind(const std::string& name);
std::string experiment_kind_name(ExperimentKind kind);
std::string encoding_name(EncodingMode mode);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kBarsScaling;
  Eigen::Index dim = 2500;
  int side = 100;           // scene side; for mnist/letters the sweep lists sides
  std::vector<int> sweep;   // bars: codebook sizes K; mnist/letters: sides L; multi: object counts m
  int class_count = 10;     // template count for mnist/multi-object (letters fixes 26)
  double lambda = 0.1;      // sparse-coding penalty for scene/template inference
  int trials = 200;
  std::uint64_t seed = 1;
  StoppingCriterion stopping;
  double conf_threshold_sparse = 0.6;
  double conf_threshold_pixel = 0.3;
  std::vector<EncodingMode> encodings{EncodingMode::kSparse, EncodingMode::kPixel};
  std::string output_path;  // base path; trials go to <base>.csv, summary to <base>_summary.csv
  std::string dict_path;    // learned dictionary (CSCD) for mnist/letters/confidence/whitening
  std::string digits_path;  // IDX images
  std::string labels_path;  // IDX labels
  std::string letters_dir;  // directory of A.pgm .. Z.pgm
  int threads = 0;          // 0 = hardware concurrency
  int bars_per_shape = 3;
  bool multi_cleaned = false;        // explain away decoded codebook entries instead of raw output
  int inference_max_iters = 150;     // scene/template FISTA iterations
  double inference_tol = 1e-4;
  double whiten_epsilon = 1e-8;
  int position_tolerance = 0;        // graded-accuracy position slack (multi-object)

  void validate() const;
};

// Baseline config for one experiment kind (desk-scale protocol constants).
ExperimentConfig default_config(ExperimentKind kind);

// Flat key=value file; unknown keys are rejected. The RESONATOR_SEED
// environment variable, when set, overrides the seed.
ExperimentConfig load_config_file(const std::filesystem::path& path);
void apply_env_overrides(ExperimentConfig& cfg);

struct TrialRecord {
  std::string sweep_label;
  EncodingMode encoding = EncodingMode::kSparse;
  int trial = 0;
  double correct = 0.0;  // graded in [0, 1]; single-object trials are 0 or 1
  int iterations = 0;    // multi-object rows: total over the m extractions
  bool converged = false;
  std::array<double, 3> final_confidences{0.0, 0.0, 0.0};
  double wall_ms = 0.0;  // in-memory only; never written to CSV
};

struct SummaryRow {
  std::string sweep_label;
  EncodingMode encoding = EncodingMode::kSparse;
  int trials = 0;
  double accuracy = 0.0;
  int iterations_median = 0;  // nearest-rank
  int iterations_q25 = 0;
  int iterations_q75 = 0;
  double iterations_mean = 0.0;
  double convergence_rate = 0.0;
  double mean_conf_correct = 0.0;    // NaN-free: 0 when the class is empty
  double mean_conf_incorrect = 0.0;
  int n_correct = 0;
  int n_incorrect = 0;
};

// Per (sweep label, encoding) in first-appearance order. A trial counts as
// correct for the confidence split when its graded score is exactly 1.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

struct ExperimentOutput {
  std::vector<TrialRecord> records;
  std::vector<SummaryRow> summary;
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& rows);

// Trains a convolutional dictionary on up to max_images from an IDX file.
Dictionary train_dictionary_from_idx(const std::filesystem::path& digits_path, int n, int patch,
                                     int max_images, const LearnConfig& cfg);

}  // namespace vsa
