#pragma once

// End-to-end runner: baseline, ghost, guided pruning, fine-tuning, clean and
// shifted evaluation, aggregation over trials.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gcnet/architectures.hpp"
#include "gcnet/connectivity.hpp"
#include "gcnet/data.hpp"
#include "gcnet/flops.hpp"
#include "gcnet/prune.hpp"
#include "gcnet/shift.hpp"

namespace gcnet {

struct ExperimentConfig {
  Architecture arch = Architecture::MiniVGG;
  std::string dataset = "synth";  // or idx:<train-img>,<train-lbl>,<test-img>,<test-lbl>
  Metric metric = Metric::Pearson;
  // Sweep axes; every combination is one result row.
  std::vector<PruneMethod> method{PruneMethod::L1};
  std::vector<HybridMode> hybrid{HybridMode::BackHalf};
  std::vector<double> alpha{0.2};
  std::size_t epochs = 10;
  double finetune_lr = 1e-4;
  std::size_t trials = 3;
  std::uint64_t seed = 0;
  std::size_t connectivity_sample_cap = 512;

  // Desk-scale data and baseline.
  std::size_t classes = 10;
  std::size_t image_size = 12;
  std::size_t channels = 1;
  std::size_t train_samples = 2000;
  std::size_t test_samples = 1000;
  std::size_t baseline_epochs = 10;
  double baseline_lr = 0.05;
  std::size_t batch_size = 32;
  std::size_t snip_samples = 256;
  double snip_cap = 0.95;
  GhostScoring ghost_scoring = GhostScoring::Ghost;
  std::string checkpoint_dir;

  CjgParams cjg;
  RnbParams rnb;
  LoParams lo;

  bool dump_masks = false;
  bool dump_connectivity = false;
  std::string out;  // dump destination; the CLI sets it from --out
};

// Applies one key=value setting; unknown keys and bad values are config
// errors.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
// Flat key=value lines; '#' starts a comment.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
void validate(const ExperimentConfig& cfg);
std::string config_text(const ExperimentConfig& cfg);

struct Cell {
  PruneMethod method = PruneMethod::L1;
  HybridMode hybrid = HybridMode::BackHalf;
  double alpha = 0.2;
};

std::vector<Cell> cells(const ExperimentConfig& cfg);

struct LayerSparsity {
  std::size_t layer = 0;
  std::size_t pruned = 0;
  std::size_t total = 0;
  MaskProvenance provenance = MaskProvenance::Direct;
};

struct TrialResult {
  Cell cell;
  std::size_t trial = 0;
  std::uint64_t trial_seed = 0;
  double acc_O = 0.0;
  double acc_1 = 0.0;
  double acc_cjg = 0.0;
  double acc_rnb = 0.0;
  double acc_lo = 0.0;
  FlopsReport flops;
  std::vector<LayerSparsity> sparsity;
  bool partial = false;
};

struct AggregateRow {
  Cell cell;
  std::size_t trials = 0;
  double acc_O = 0.0;
  double acc_1 = 0.0;
  double acc_cjg = 0.0;
  double acc_rnb = 0.0;
  double acc_lo = 0.0;
  FlopsReport flops;
};

struct ExperimentData {
  ImageDataset train;
  ImageDataset test;
  ImageDataset cjg;
  ImageDataset rnb;
  ImageDataset lo;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial);

// Dense baseline for a trial: loaded from checkpoint_dir when a checkpoint
// exists there, otherwise trained (and saved when checkpoint_dir is set).
Network prepare_baseline(const ExperimentConfig& cfg, const ExperimentData& data,
                         std::size_t trial);

// One cell of one trial on a prepared baseline. `ghost` may be null for
// cells that prune directly only.
TrialResult run_cell(const ExperimentConfig& cfg, const ExperimentData& data,
                     const Network& baseline, double baseline_accuracy, const GhostNet* ghost,
                     const Cell& cell, std::size_t trial);

// Full flow for a single-cell config.
TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial);

struct ExperimentResult {
  std::vector<TrialResult> trials;  // cell-major, trial-minor
  std::vector<AggregateRow> rows;   // one per cell
};

// Trials run in the order given (default 0..trials-1); aggregates depend
// only on per-trial seeds.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr,
                                const std::vector<std::size_t>& trial_order = {});

AggregateRow aggregate(const std::vector<TrialResult>& trials);

std::string csv_header();
std::string results_csv(const ExperimentConfig& cfg, const ExperimentResult& result);
std::string trials_csv(const ExperimentConfig& cfg, const ExperimentResult& result);
std::string summary_text(const ExperimentConfig& cfg, const ExperimentResult& result);
// results.csv, trials.csv and summary.txt under `dir`.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                   const std::filesystem::path& dir);

}  // namespace gcnet
