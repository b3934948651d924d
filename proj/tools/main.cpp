// dfc: command-line driver for training and analysis runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dfc/errors.hpp"
#include "dfc/training.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  bool fixed_feedback = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config file (key = value lines)");
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--variant", opts.variant, "dfc, dfc_ss, dfc_ssa, bp or dfa");
  cmd->add_flag("--fixed-feedback", opts.fixed_feedback, "Keep Q at its initialization");
}

dfc::ExperimentConfig resolve(const CommonOptions& opts) {
  dfc::ExperimentConfig config = opts.config_path.empty() ? dfc::ExperimentConfig{} : dfc::load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.out.empty()) config.out_dir = opts.out;
  if (!opts.variant.empty()) config.variant = dfc::variant_from_string(opts.variant);
  if (opts.fixed_feedback) config.feedback_mode = dfc::FeedbackMode::fixed;
  config.validate();
  return config;
}

void write_csv(const dfc::Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) out << (c ? "," : "") << "x" << c;
  for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) out << ",y" << c;
  out << "\n";
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) {
    for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) out << (c ? "," : "") << dfc::format_number(ds.inputs(i, c));
    for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) out << "," << dfc::format_number(ds.targets(i, c));
    out << "\n";
  }
}

int run_train(const dfc::ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  std::ofstream(std::filesystem::path(config.out_dir) / "config.txt") << dfc::to_text(config);
  const dfc::RunSummary s = dfc::run_training(config);
  std::printf("best epoch %zu: val_loss %.6g", s.best.epoch, s.best.val_loss);
  if (!std::isnan(s.best.val_accuracy)) std::printf(", val_accuracy %.4f", s.best.val_accuracy);
  std::printf("\n");
  return 0;
}

int run_pretrain(const dfc::ExperimentConfig& config) {
  dfc::Trainer trainer(config);
  trainer.open_metrics();
  trainer.pretrain_feedback();
  trainer.evaluate_epoch();
  const auto path = std::filesystem::path(config.out_dir) / "pretrained.ckpt";
  trainer.save_checkpoint_file(path);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int run_analyze(const dfc::ExperimentConfig& config, const std::string& checkpoint, std::size_t batches) {
  const auto records = dfc::analyze(dfc::load_checkpoint(checkpoint), config, batches);
  for (const auto& r : records) {
    std::printf("batch %zu  con2 %.4f  angle_mn %s  angle_bp %s  max_eig_api %.4g\n", r.iteration, r.con2_ratio,
                dfc::format_number(r.angle_mn_deg).c_str(), dfc::format_number(r.angle_bp_deg).c_str(),
                r.max_real_eig_api);
  }
  return 0;
}

int run_gen_data(const dfc::ExperimentConfig& config) {
  dfc::TeacherSpec spec;
  spec.sizes = config.teacher_sizes;
  spec.activations.assign(spec.sizes.size() - 1, config.hidden_activation);
  spec.activations.back() = config.output_activation;
  spec.seed = config.teacher_seed;
  dfc::check_teacher_larger(spec, config.sizes);
  const auto [train, test] = dfc::generate_student_teacher(spec, config.n_train, config.n_test);
  std::filesystem::create_directories(config.out_dir);
  write_csv(train, std::filesystem::path(config.out_dir) / "train.csv");
  write_csv(test, std::filesystem::path(config.out_dir) / "test.csv");
  std::printf("wrote %zu train and %zu test samples to %s\n", train.size(), test.size(), config.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep feedback control training and analysis"};
  app.require_subcommand(1);

  CommonOptions train_opts, pre_opts, analyze_opts, gen_opts;
  auto* train = app.add_subcommand("train", "Pretrain feedback weights, then alternate forward and feedback epochs");
  add_common(train, train_opts);
  auto* pre = app.add_subcommand("pretrain-feedback", "Run only the feedback pretraining phase");
  add_common(pre, pre_opts);
  auto* an = app.add_subcommand("analyze", "Alignment and stability diagnostics of a checkpoint");
  add_common(an, analyze_opts);
  std::string checkpoint;
  std::size_t batches = 10;
  an->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  an->add_option("--batches", batches, "Number of batches to analyze");
  auto* gen = app.add_subcommand("gen-data", "Write the student-teacher dataset as CSV");
  add_common(gen, gen_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return run_train(resolve(train_opts));
    if (*pre) return run_pretrain(resolve(pre_opts));
    if (*an) return run_analyze(resolve(analyze_opts), checkpoint, batches);
    if (*gen) return run_gen_data(resolve(gen_opts));
  } catch (const dfc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const dfc::DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
