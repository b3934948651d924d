#include "dfc/training.hpp"

#include <cmath>

#include <fstream>

#include "json.hpp"

#include "dfc/errors.hpp"

namespace dfc {

NetworkParams init_fixed_feedback(const NetworkParams& params) {
  NetworkParams out = params;
  const std::size_t depth = out.depth();
  const auto n_out = static_cast<Eigen::Index>(out.output_size());
  Matrix product = Matrix::Identity(n_out, n_out);
  out.layers[depth - 1].Q = product;
  for (std::size_t i = depth - 1; i-- > 0;) {
    product = out.layers[i + 1].W.transpose() * product;
    out.layers[i].Q = product;
  }
  return out;
}

BatchPlan load_training_data(const ExperimentConfig& config) {
  if (config.dataset == DatasetKind::idx) {
    Dataset ds = load_idx(config.idx_images, config.idx_labels, config.idx_limit);
    return split_and_batch(ds, config.val_count, config.batch_size, config.seed);
  }
  TeacherSpec spec;
  spec.sizes = config.teacher_sizes;
  spec.activations.assign(spec.sizes.size() - 1, config.hidden_activation);
  spec.activations.back() = config.output_activation;
  spec.seed = config.teacher_seed;
  check_teacher_larger(spec, config.sizes);
  auto [train, test] = generate_student_teacher(spec, config.n_train, config.n_test);
  return split_and_batch(train, config.val_count, config.batch_size, config.seed);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) {
  file_ = std::fopen(path.string().c_str(), "w");
  if (!file_) throw Error("cannot open metrics file " + path.string());
  std::fprintf(file_, "%s\n", header());
}

MetricsWriter::~MetricsWriter() {
  if (file_) std::fclose(file_);
}

const char* MetricsWriter::header() {
  return "phase,epoch,step,loss,accuracy,con1_ratio,con2_ratio,angle_mn_deg,angle_gn_deg,angle_bp_deg,"
         "angle_ssa_deg,max_real_eig_api,max_real_eig_jq";
}

void MetricsWriter::write(const MetricsRow& row) {
  const auto& d = row.diag;
  std::fprintf(file_, "%s,%zu,%zu,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s\n", row.phase.c_str(), row.epoch, row.step,
               format_number(row.loss).c_str(), format_number(row.accuracy).c_str(),
               format_number(d.con1_ratio).c_str(), format_number(d.con2_ratio).c_str(),
               format_number(d.angle_mn_deg).c_str(), format_number(d.angle_gn_deg).c_str(),
               format_number(d.angle_bp_deg).c_str(), format_number(d.angle_ssa_deg).c_str(),
               format_number(d.max_real_eig_api).c_str(), format_number(d.max_real_eig_jq).c_str());
}

void MetricsWriter::flush() { std::fflush(file_); }

std::pair<double, double> evaluate(const NetworkParams& params, const Dataset& ds, LossKind loss) {
  if (ds.size() == 0) return {std::nan(""), std::nan("")};
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Vector y = ds.target(i);
    const Vector out = forward_pass(params, ds.input(i)).output();
    total += loss_value(loss, out, y);
    if (ds.kind == TaskKind::classification) {
      Eigen::Index pred = 0, truth = 0;
      out.maxCoeff(&pred);
      y.maxCoeff(&truth);
      if (pred == truth) ++correct;
    }
  }
  const double n = static_cast<double>(ds.size());
  const double acc = ds.kind == TaskKind::classification ? static_cast<double>(correct) / n : std::nan("");
  return {total / n, acc};
}

namespace {

UpdateBuffer variant_update(const ExperimentConfig& config, const NetworkParams& params, const DfaFeedback* dfa,
                            const Vector& x, const Vector& y) {
  switch (config.variant) {
    case Variant::bp: return bp_gradients(params, x, y, config.loss);
    case Variant::dfa: return dfa_update(params, *dfa, x, y, config.loss);
    default: break;
  }
  const Activations ff = forward_pass(params, x);
  const OutputTarget tgt = compute_target(ff.output(), y, config.lambda, config.loss);
  UpdateBuffer buf;
  if (config.variant == Variant::dfc) buf = simulate_forward_phase(params, x, tgt.target, config.sim).buffer;
  else if (config.variant == Variant::dfc_ss) buf = simulate_ss_phase(params, x, tgt.target, config.sim).buffer;
  else buf = analytic_steady_state(params, x, tgt.target, config.sim.alpha_tilde).buffer;
  if (config.layerwise_rates) scale_layers(buf, layer_specific_rates(ff, 1.0));
  buf.step_count = 1;
  return buf;
}

void store_dfa(Checkpoint& ckpt, const DfaFeedback& dfa) {
  for (std::size_t i = 0; i < dfa.B.size(); ++i) ckpt.put("dfa.B" + std::to_string(i + 1), dfa.B[i]);
}

DfaFeedback restore_dfa(const Checkpoint& ckpt) {
  DfaFeedback dfa;
  for (std::size_t i = 1; ckpt.has("dfa.B" + std::to_string(i)); ++i) dfa.B.push_back(ckpt.get("dfa.B" + std::to_string(i)));
  return dfa;
}

double scalar(const Checkpoint& ckpt, const std::string& name) { return ckpt.get(name)(0, 0); }

}  // namespace

Trainer::Trainer(ExperimentConfig config)
    : config_(std::move(config)),
      plan_((config_.validate(), load_training_data(config_))),
      fwd_opt_(config_.forward_optimizer_config()),
      fb_opt_(config_.feedback_optimizer_config(false)),
      fb_pre_opt_(config_.feedback_optimizer_config(true)) {
  if (plan_.train().inputs.cols() != static_cast<Eigen::Index>(config_.sizes.front()) ||
      plan_.train().targets.cols() != static_cast<Eigen::Index>(config_.sizes.back())) {
    throw ConfigError("network sizes do not match the dataset");
  }
  params_ = NetworkParams::zeros(config_.sizes, config_.activations());
  std::mt19937_64 rng(config_.seed);
  glorot_normal_init(params_, rng);
  if (uses_controller(config_.variant)) {
    if (config_.feedback_mode == FeedbackMode::fixed) {
      params_ = init_fixed_feedback(params_);
    } else {
      for (auto& l : params_.layers) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(l.Q.rows() + l.Q.cols())));
        for (Eigen::Index c = 0; c < l.Q.cols(); ++c) {
          for (Eigen::Index r = 0; r < l.Q.rows(); ++r) l.Q(r, c) = dist(rng);
        }
      }
      if (config_.freeze_QL) params_.layers.back().Q.setIdentity();
    }
  }
  if (config_.variant == Variant::dfa) dfa_ = DfaFeedback::random(params_, rng);
}

void Trainer::open_metrics() {
  std::filesystem::create_directories(config_.out_dir);
  metrics_ = std::make_unique<MetricsWriter>(std::filesystem::path(config_.out_dir) / "metrics.csv");
}

void Trainer::emit(const MetricsRow& row) {
  if (metrics_) metrics_->write(row);
}

bool Trainer::learns_feedback() const {
  return uses_controller(config_.variant) && config_.feedback_mode == FeedbackMode::learned;
}

UpdateBuffer Trainer::sample_update(const Vector& x, const Vector& y) const {
  return variant_update(config_, params_, dfa_ ? &*dfa_ : nullptr, x, y);
}

void Trainer::feedback_epoch(bool pretrain) {
  Optimizer& opt = pretrain ? fb_pre_opt_ : fb_opt_;
  const std::uint64_t stream = ++fb_epochs_done_;
  const Dataset& train = plan_.train();
  FeedbackOptions options;
  options.freeze_output = config_.freeze_QL;
  std::size_t batch_index = 0;
  for (const auto& batch : plan_.epoch_batches(1000003ULL * stream)) {
    UpdateBuffer sum = UpdateBuffer::zeros_like(params_);
    for (std::size_t idx : batch) {
      NoiseStream noise(config_.seed, stream, idx);
      sum += simulate_feedback_phase(params_, train.input(idx), config_.sim, noise, options).buffer;
    }
    params_ = apply_feedback_update(params_, sum.averaged(), opt, config_.freeze_QL);

    MetricsRow row;
    row.phase = pretrain ? "pretrain" : "feedback";
    row.epoch = epoch_;
    row.step = batch_index++;
    if (config_.diag_every > 0) {
      const Matrix q = params_.stacked_q();
      double con2 = 0.0;
      const std::size_t n = std::min(batch.size(), config_.diag_samples);
      for (std::size_t k = 0; k < n; ++k) {
        const Activations ff = forward_pass(params_, train.input(batch[k]));
        con2 += con2_ratio(q, network_jacobian(params_, ff));
      }
      row.diag.con2_ratio = con2 / static_cast<double>(n);
    }
    emit(row);
  }
}

void Trainer::pretrain_feedback() {
  if (!learns_feedback()) return;
  for (std::size_t e = 0; e < config_.fb_pretrain_epochs; ++e) feedback_epoch(true);
}

void Trainer::forward_epoch() {
  ++epoch_;
  const Dataset& train = plan_.train();
  const DfaFeedback* dfa = dfa_ ? &*dfa_ : nullptr;
  for (const auto& batch : plan_.epoch_batches(epoch_)) {
    const bool diag = config_.diag_every > 0 && step_ % config_.diag_every == 0;
    std::optional<DiagnosticsAccumulator> acc;
    if (diag) acc.emplace(params_, config_.sim, config_.diagnostics);
    UpdateBuffer sum = UpdateBuffer::zeros_like(params_);
    UpdateBuffer diag_sum = UpdateBuffer::zeros_like(params_);
    double loss = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const Vector x = train.input(batch[k]);
      const Vector y = train.target(batch[k]);
      const Vector out = forward_pass(params_, x).output();
      loss += loss_value(config_.loss, out, y);
      const UpdateBuffer buf = variant_update(config_, params_, dfa, x, y);
      sum += buf;
      if (diag && k < config_.diag_samples) {
        diag_sum += buf;
        acc->add_sample(x, compute_target(out, y, config_.lambda, config_.loss).target);
      }
    }
    MetricsRow row;
    row.phase = "train";
    row.epoch = epoch_;
    row.step = step_;
    row.loss = loss / static_cast<double>(batch.size());
    if (diag) row.diag = acc->finish(diag_sum.flat_weights());
    row.diag.iteration = step_;
    row.diag.train_loss = row.loss;
    params_ = apply_update(params_, sum.averaged(), fwd_opt_);
    emit(row);
    ++step_;
  }
}

EpochResult Trainer::evaluate_epoch() {
  EpochResult res;
  res.epoch = epoch_;
  std::tie(res.train_loss, res.train_accuracy) = evaluate(params_, plan_.train(), config_.loss);
  std::tie(res.val_loss, res.val_accuracy) = evaluate(params_, plan_.validation(), config_.loss);
  MetricsRow row;
  row.epoch = epoch_;
  row.step = step_;
  row.phase = "train_eval";
  row.loss = res.train_loss;
  row.accuracy = res.train_accuracy;
  emit(row);
  row.phase = "val";
  row.loss = res.val_loss;
  row.accuracy = res.val_accuracy;
  emit(row);
  if (metrics_) metrics_->flush();
  return res;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  store_params(ckpt, params_);
  store_optimizer(ckpt, "opt_forward", fwd_opt_);
  store_optimizer(ckpt, "opt_feedback", fb_opt_);
  store_optimizer(ckpt, "opt_feedback_pretrain", fb_pre_opt_);
  if (dfa_) store_dfa(ckpt, *dfa_);
  ckpt.put("epoch", Matrix::Constant(1, 1, static_cast<double>(epoch_)));
  ckpt.put("step", Matrix::Constant(1, 1, static_cast<double>(step_)));
  ckpt.put("fb_epochs", Matrix::Constant(1, 1, static_cast<double>(fb_epochs_done_)));
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  NetworkParams p = restore_params(ckpt);
  if (p.sizes() != config_.sizes) throw ConfigError("checkpoint network sizes do not match the config");
  params_ = std::move(p);
  restore_optimizer(ckpt, "opt_forward", fwd_opt_);
  restore_optimizer(ckpt, "opt_feedback", fb_opt_);
  restore_optimizer(ckpt, "opt_feedback_pretrain", fb_pre_opt_);
  if (dfa_) dfa_ = restore_dfa(ckpt);
  epoch_ = static_cast<std::size_t>(scalar(ckpt, "epoch"));
  step_ = static_cast<std::size_t>(scalar(ckpt, "step"));
  fb_epochs_done_ = static_cast<std::size_t>(scalar(ckpt, "fb_epochs"));
}

void Trainer::save_checkpoint_file(const std::filesystem::path& path) const {
  std::filesystem::create_directories(path.parent_path());
  save_checkpoint(path, checkpoint());
}

namespace {

nlohmann::json epoch_json(const EpochResult& r) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  return {{"epoch", r.epoch},
          {"train_loss", num(r.train_loss)},
          {"train_accuracy", num(r.train_accuracy)},
          {"val_loss", num(r.val_loss)},
          {"val_accuracy", num(r.val_accuracy)}};
}

void write_summary(const std::filesystem::path& path, const ExperimentConfig& config, const RunSummary& s,
                   bool diverged) {
  nlohmann::json j;
  j["variant"] = to_string(config.variant);
  j["feedback_mode"] = to_string(config.feedback_mode);
  j["seed"] = config.seed;
  j["diverged"] = diverged;
  j["best"] = epoch_json(s.best);
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : s.epochs) j["epochs"].push_back(epoch_json(e));
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

std::filesystem::path checkpoint_path(const ExperimentConfig& config, std::size_t epoch) {
  return std::filesystem::path(config.out_dir) / "checkpoints" / ("epoch_" + std::to_string(epoch) + ".ckpt");
}

}  // namespace

RunSummary run_training(const ExperimentConfig& config) {
  Trainer trainer(config);
  trainer.open_metrics();
  RunSummary summary;
  const auto summary_path = std::filesystem::path(config.out_dir) / "summary.json";
  auto record = [&](const EpochResult& r) {
    summary.epochs.push_back(r);
    if (summary.epochs.size() == 1 || r.val_loss < summary.best.val_loss) summary.best = r;
  };
  try {
    trainer.pretrain_feedback();
    record(trainer.evaluate_epoch());
    trainer.save_checkpoint_file(checkpoint_path(config, 0));
    for (std::size_t e = 1; e <= config.epochs; ++e) {
      trainer.forward_epoch();
      if (trainer.learns_feedback()) {
        for (std::size_t k = 0; k < config.fb_epochs_per_fwd; ++k) trainer.feedback_epoch(false);
      }
      record(trainer.evaluate_epoch());
      trainer.save_checkpoint_file(checkpoint_path(config, e));
    }
  } catch (const DivergenceError&) {
    trainer.evaluate_epoch();
    write_summary(summary_path, config, summary, true);
    throw;
  }
  write_summary(summary_path, config, summary, false);
  summary.final_params = trainer.params();
  return summary;
}

std::vector<DiagnosticsRecord> analyze(const Checkpoint& ckpt, const ExperimentConfig& config,
                                       std::size_t max_batches) {
  config.validate();
  const NetworkParams params = restore_params(ckpt);
  if (params.sizes() != config.sizes) throw ConfigError("checkpoint network sizes do not match the config");
  std::optional<DfaFeedback> dfa;
  if (config.variant == Variant::dfa) dfa = restore_dfa(ckpt);
  const BatchPlan plan = load_training_data(config);
  const Dataset& train = plan.train();
  const std::size_t per_batch = std::max<std::size_t>(config.diag_samples, 1);

  std::filesystem::create_directories(config.out_dir);
  MetricsWriter writer(std::filesystem::path(config.out_dir) / "analysis.csv");
  std::vector<DiagnosticsRecord> records;
  for (std::size_t b = 0; b < max_batches && b * per_batch < train.size(); ++b) {
    DiagnosticsAccumulator acc(params, config.sim, config.diagnostics);
    UpdateBuffer sum = UpdateBuffer::zeros_like(params);
    double loss = 0.0;
    const std::size_t end = std::min(train.size(), (b + 1) * per_batch);
    for (std::size_t i = b * per_batch; i < end; ++i) {
      const Vector x = train.input(i);
      const Vector y = train.target(i);
      const Vector out = forward_pass(params, x).output();
      loss += loss_value(config.loss, out, y);
      sum += variant_update(config, params, dfa ? &*dfa : nullptr, x, y);
      acc.add_sample(x, compute_target(out, y, config.lambda, config.loss).target);
    }
    DiagnosticsRecord rec = acc.finish(sum.flat_weights());
    rec.iteration = b;
    rec.train_loss = loss / static_cast<double>(end - b * per_batch);
    records.push_back(rec);
    MetricsRow row;
    row.phase = "analysis";
    row.step = b;
    row.loss = rec.train_loss;
    row.diag = rec;
    writer.write(row);
  }
  writer.flush();
  return records;
}

}  // namespace dfc
