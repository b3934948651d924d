#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dfc/analysis.hpp"
#include "dfc/controller.hpp"
#include "dfc/dynamics.hpp"
#include "dfc/network.hpp"
#include "dfc/plasticity.hpp"

namespace dfc {

enum class Variant { dfc, dfc_ss, dfc_ssa, bp, dfa };
enum class FeedbackMode { learned, fixed };
enum class DatasetKind { student_teacher, idx };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
std::string to_string(FeedbackMode m);
FeedbackMode feedback_mode_from_string(const std::string& name);

/// True for the three controller-based variants.
bool uses_controller(Variant v);

struct ExperimentConfig {
  Variant variant = Variant::dfc;
  FeedbackMode feedback_mode = FeedbackMode::learned;
  bool freeze_QL = false;
  std::size_t epochs = 10;
  std::size_t fb_epochs_per_fwd = 1;
  std::size_t fb_pretrain_epochs = 10;

  double lambda = 0.1;
  LossKind loss = LossKind::squared_error;
  /// Scale the forward increments of layer i by 1/||r_{i-1}||^2.
  bool layerwise_rates = false;

  OptimizerKind optimizer = OptimizerKind::sgd;
  OptimizerKind feedback_optimizer = OptimizerKind::sgd;
  double lr_forward = 1e-2;
  double lr_feedback = 1e-3;
  double lr_feedback_pretrain = 1e-3;
  double adam_eps_forward = 1e-8;
  double adam_eps_feedback = 1e-8;
  double clip_norm = 0.0;

  SimConfig sim;

  DatasetKind dataset = DatasetKind::student_teacher;
  std::vector<std::size_t> sizes{15, 10, 10, 5};
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::linear;
  std::vector<std::size_t> teacher_sizes{15, 20, 15, 15, 5};
  std::uint64_t teacher_seed = 1;
  std::size_t n_train = 1000;
  std::size_t n_test = 200;
  std::string idx_images;
  std::string idx_labels;
  std::size_t idx_limit = 60000;
  std::size_t val_count = 100;
  std::size_t batch_size = 32;

  /// Diagnostics every diag_every optimizer steps (0 disables them).
  std::size_t diag_every = 0;
  std::size_t diag_samples = 8;
  DiagnosticsSettings diagnostics;

  std::uint64_t seed = 0;
  std::string out_dir = "run";

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  std::vector<Activation> activations() const;
  OptimizerConfig forward_optimizer_config() const;
  OptimizerConfig feedback_optimizer_config(bool pretrain) const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and malformed values raise ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

/// "15-10-10-5" <-> {15, 10, 10, 5}
std::vector<std::size_t> parse_sizes(const std::string& text);
std::string format_sizes(const std::vector<std::size_t>& sizes);

}  // namespace dfc
