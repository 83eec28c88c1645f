#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stm/kernels.hpp"
#include "stm/svm.hpp"
#include "stm/synthgen.hpp"

namespace stm {

enum class DataSource { synthetic, directory };

/// How DuSK obtains its CP inputs.
enum class DuskSource { tucker, cp, tt };

std::string_view to_string(DuskSource s) noexcept;

/// Powers of two 2^from, ..., 2^to.
std::vector<double> log2_grid(int from, int to);

/// Experiment description. Defaults are the full benchmark protocol; the
/// YAML loader overrides individual fields.
struct ExperimentConfig {
  DataSource source = DataSource::synthetic;
  SynthConfig synth;                        // synth.noise_variance is replaced by noise_levels
  std::vector<double> noise_levels{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  std::filesystem::path dataset_dir;
  std::vector<KernelKind> kernels{KernelKind::gaussian, KernelKind::dusk, KernelKind::subspace,
                                  KernelKind::wsek};
  std::vector<std::size_t> ranks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> c_grid = log2_grid(-8, 8);
  std::vector<double> g_grid = log2_grid(-4, 12);
  std::optional<double> p;                  // WSEK weighting power; 1/M when unset
  std::size_t repeats = 20;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::filesystem::path output = "stm-results";
  double smo_tol = 1e-3;
  DuskSource dusk_source = DuskSource::tucker;
  bool record_timing = true;
  bool cache_decompositions = true;

  /// Sorts grids ascending and checks every field.
  void validate();
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One (kernel, rank, noise) row of the report.
struct CellResult {
  KernelKind kernel = KernelKind::wsek;
  std::size_t rank = 0;
  std::optional<double> noise;  // unset for directory datasets
  double mean_acc = 0.0;
  double std_acc = 0.0;
  double ci95 = 0.0;
  double C = 0.0;               // most frequently selected pair
  double g = 0.0;
  double kernel_seconds = 0.0;
  double train_seconds = 0.0;
  std::vector<double> repeat_accuracy;
  std::vector<std::pair<double, double>> selections;  // (C, g) per repeat
  std::size_t invalid_points = 0;  // (C, g, repeat) points dropped for non-convergence
  bool valid = true;
};

struct CVReport {
  std::vector<CellResult> rows;
  std::string simd;  // SIMD variant the run used
};

/// Stratified fold labels: result[i] is the fold of sample i. Per fold, the
/// count of each class differs by at most one from the ideal share.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed);

struct GridSearchInput {
  std::span<const Sample> samples;
  std::span<const int> labels;
  KernelKind kind = KernelKind::wsek;
  std::span<const double> c_grid;
  std::span<const double> g_grid;
  std::span<const std::vector<std::size_t>> fold_assignments;  // one per repeat
  std::size_t folds = 5;
  double smo_tol = 1e-3;
  std::size_t threads = 1;
  bool record_timing = true;
};

/// Cross-validated (C, g) grid search. Each repeat picks the pair with the
/// best fold-mean accuracy (ties: smaller C, then smaller g); the cell reports
/// the mean, standard deviation and 95% half-width of those accuracies.
CellResult grid_search(const GridSearchInput& in);

/// Turns a raw sample (dense or Tucker) into the kernel's input format at
/// Tucker rank R in every mode.
TuckerTensor decompose_tucker(const Sample& raw, std::size_t rank, double p);
Sample prepare_sample(const Sample& raw, KernelKind kind, std::size_t rank, double p,
                      DuskSource dusk_source);

CVReport run_experiment(const ExperimentConfig& cfg, std::size_t threads);

/// Dataset directory: `manifest.csv` lines "<relative path>,<label>" with
/// labels in {-1,1} or {0,1}, each path a TNSR tensor container.
TrainingSet load_dataset(const std::filesystem::path& dir);
void export_dataset(const std::filesystem::path& dir, std::span<const DenseTensor> tensors,
                    std::span<const int> labels);

std::string report_csv(const CVReport& report);
std::string report_json(const CVReport& report);
CVReport parse_report_json(const std::string& text);

/// Writes report.csv and summary.json into `dir` (created if missing).
void emit_report(const CVReport& report, const std::filesystem::path& dir);

}  // namespace stm
