#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfc/analysis.hpp"
#include "dfc/baselines.hpp"
#include "dfc/checkpoint.hpp"
#include "dfc/config.hpp"
#include "dfc/data.hpp"

namespace dfc {

/// Q_i = W_{i+1}^T ... W_L^T for hidden layers, Q_L = I.
NetworkParams init_fixed_feedback(const NetworkParams& params);

/// Builds the train/validation split described by the config.
BatchPlan load_training_data(const ExperimentConfig& config);

/// One CSV row. Missing values are NaN and written as empty fields.
struct MetricsRow {
  std::string phase;
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  DiagnosticsRecord diag;
};

/// Fixed column order; the header never changes between runs.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void write(const MetricsRow& row);
  void flush();

  static const char* header();

 private:
  std::FILE* file_ = nullptr;
};

struct EpochResult {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  double val_loss = 0.0;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct RunSummary {
  std::vector<EpochResult> epochs;  // epoch 0 is the state before forward training
  EpochResult best;                 // lowest validation loss
  NetworkParams final_params;
};

/// Mean loss and (for classification) accuracy of the feedforward network.
std::pair<double, double> evaluate(const NetworkParams& params, const Dataset& ds, LossKind loss);

/// Owns the state of one run. run_training drives it end to end; the CLI
/// and tests also use the individual phases.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const NetworkParams& params() const { return params_; }
  NetworkParams& params() { return params_; }
  const BatchPlan& data() const { return plan_; }

  /// Writes metrics to out_dir/metrics.csv from now on.
  void open_metrics();

  bool learns_feedback() const;

  /// One epoch of the noisy feedback phase over the training set.
  void feedback_epoch(bool pretrain);
  void pretrain_feedback();
  /// One epoch of forward weight training.
  void forward_epoch();
  EpochResult evaluate_epoch();

  /// Per-sample increments of the configured variant.
  UpdateBuffer sample_update(const Vector& x, const Vector& y) const;

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);
  void save_checkpoint_file(const std::filesystem::path& path) const;

  std::size_t epoch() const { return epoch_; }

 private:
  void emit(const MetricsRow& row);

  ExperimentConfig config_;
  BatchPlan plan_;
  NetworkParams params_;
  std::optional<DfaFeedback> dfa_;
  Optimizer fwd_opt_;
  Optimizer fb_opt_;
  Optimizer fb_pre_opt_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
  std::size_t fb_epochs_done_ = 0;
  std::unique_ptr<MetricsWriter> metrics_;
};

/// Pretraining, then alternating forward and feedback epochs. Writes
/// metrics.csv, one checkpoint per epoch and summary.json into out_dir.
/// A DivergenceError propagates after the metrics file is flushed.
RunSummary run_training(const ExperimentConfig& config);

/// Diagnostics of the checkpointed network over the first batches of the
/// training data (batches of diag_samples). Writes out_dir/analysis.csv.
std::vector<DiagnosticsRecord> analyze(const Checkpoint& ckpt, const ExperimentConfig& config,
                                       std::size_t max_batches = 10);

/// Same fields as a CSV row; empty string for NaN.
std::string format_number(double x);

}  // namespace dfc
