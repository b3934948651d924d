#include "dfc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dfc/errors.hpp"

namespace dfc {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::dfc: return "dfc";
    case Variant::dfc_ss: return "dfc_ss";
    case Variant::dfc_ssa: return "dfc_ssa";
    case Variant::bp: return "bp";
    case Variant::dfa: return "dfa";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::dfc, Variant::dfc_ss, Variant::dfc_ssa, Variant::bp, Variant::dfa}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + name + "'");
}

std::string to_string(FeedbackMode m) { return m == FeedbackMode::learned ? "learned" : "fixed"; }

FeedbackMode feedback_mode_from_string(const std::string& name) {
  if (name == "learned") return FeedbackMode::learned;
  if (name == "fixed") return FeedbackMode::fixed;
  throw ConfigError("unknown feedback_mode '" + name + "'");
}

bool uses_controller(Variant v) { return v == Variant::dfc || v == Variant::dfc_ss || v == Variant::dfc_ssa; }

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('-', start), text.size());
    std::size_t value = 0;
    const auto res = std::from_chars(text.data() + start, text.data() + end, value);
    if (res.ec != std::errc() || res.ptr != text.data() + end || value == 0) {
      throw ConfigError("invalid layer sizes '" + text + "'");
    }
    out.push_back(value);
    start = end + 1;
  }
  if (out.size() < 2) throw ConfigError("layer sizes need an input and at least one layer: '" + text + "'");
  return out;
}

std::string format_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) out += (i ? "-" : "") + std::to_string(sizes[i]);
  return out;
}

void ExperimentConfig::validate() const {
  if (fb_epochs_per_fwd < 1 || fb_epochs_per_fwd > 3) throw ConfigError("fb_epochs_per_fwd must be 1, 2 or 3");
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  for (auto [v, name] : {std::pair{lr_forward, "lr_forward"}, {lr_feedback, "lr_feedback"},
                         {lr_feedback_pretrain, "lr_feedback_pretrain"}, {adam_eps_forward, "adam_eps_forward"},
                         {adam_eps_feedback, "adam_eps_feedback"}}) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (sizes.size() < 2) throw ConfigError("sizes need an input and at least one layer");
  if (dataset == DatasetKind::idx) {
    if (idx_images.empty() || idx_labels.empty()) throw ConfigError("idx dataset needs idx_images and idx_labels");
    if (sizes.front() != 784 || sizes.back() != 10) throw ConfigError("idx dataset needs sizes 784-...-10");
  } else {
    if (n_train == 0) throw ConfigError("n_train must be positive");
    if (val_count > n_train) throw ConfigError("val_count exceeds n_train");
  }
  if (diag_every > 0 && diag_samples == 0) throw ConfigError("diag_samples must be positive");
  if (diagnostics.gamma_mn < 0.0 || diagnostics.gamma_gn < 0.0) throw ConfigError("gamma must be non-negative");
  sim.validate();
}

std::vector<Activation> ExperimentConfig::activations() const {
  std::vector<Activation> acts(sizes.size() - 1, hidden_activation);
  acts.back() = output_activation;
  return acts;
}

OptimizerConfig ExperimentConfig::forward_optimizer_config() const {
  OptimizerConfig c;
  c.kind = optimizer;
  c.lr = lr_forward;
  c.epsilon = adam_eps_forward;
  c.clip_norm = clip_norm;
  return c;
}

OptimizerConfig ExperimentConfig::feedback_optimizer_config(bool pretrain) const {
  OptimizerConfig c;
  c.kind = feedback_optimizer;
  c.lr = pretrain ? lr_feedback_pretrain : lr_feedback;
  c.epsilon = adam_eps_feedback;
  c.clip_norm = clip_norm;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + s + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("not a non-negative integer: '" + s + "'");
  return x;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DFC_DOUBLE(expr)                                                                \
  Field {                                                                               \
    [](ExperimentConfig& c, const std::string& s) { c.expr = parse_double(s); },       \
        [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.expr)); }     \
  }
#define DFC_UINT(expr, type)                                                            \
  Field {                                                                               \
    [](ExperimentConfig& c, const std::string& s) { c.expr = static_cast<type>(parse_uint(s)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.expr); }               \
  }
#define DFC_BOOL(expr)                                                                  \
  Field {                                                                               \
    [](ExperimentConfig& c, const std::string& s) { c.expr = parse_bool(s); },         \
        [](const ExperimentConfig& c) { return fmt(c.expr); }                          \
  }
#define DFC_STRING(expr)                                                                \
  Field {                                                                               \
    [](ExperimentConfig& c, const std::string& s) { c.expr = s; },                     \
        [](const ExperimentConfig& c) { return c.expr; }                               \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"variant", {[](ExperimentConfig& c, const std::string& s) { c.variant = variant_from_string(s); },
                   [](const ExperimentConfig& c) { return to_string(c.variant); }}},
      {"feedback_mode",
       {[](ExperimentConfig& c, const std::string& s) { c.feedback_mode = feedback_mode_from_string(s); },
        [](const ExperimentConfig& c) { return to_string(c.feedback_mode); }}},
      {"freeze_QL", DFC_BOOL(freeze_QL)},
      {"epochs", DFC_UINT(epochs, std::size_t)},
      {"fb_epochs_per_fwd", DFC_UINT(fb_epochs_per_fwd, std::size_t)},
      {"fb_pretrain_epochs", DFC_UINT(fb_pretrain_epochs, std::size_t)},
      {"lambda", DFC_DOUBLE(lambda)},
      {"loss", {[](ExperimentConfig& c, const std::string& s) { c.loss = loss_from_string(s); },
                [](const ExperimentConfig& c) { return to_string(c.loss); }}},
      {"layerwise_rates", DFC_BOOL(layerwise_rates)},
      {"optimizer", {[](ExperimentConfig& c, const std::string& s) { c.optimizer = optimizer_from_string(s); },
                     [](const ExperimentConfig& c) { return to_string(c.optimizer); }}},
      {"feedback_optimizer",
       {[](ExperimentConfig& c, const std::string& s) { c.feedback_optimizer = optimizer_from_string(s); },
        [](const ExperimentConfig& c) { return to_string(c.feedback_optimizer); }}},
      {"lr_forward", DFC_DOUBLE(lr_forward)},
      {"lr_feedback", DFC_DOUBLE(lr_feedback)},
      {"lr_feedback_pretrain", DFC_DOUBLE(lr_feedback_pretrain)},
      {"adam_eps_forward", DFC_DOUBLE(adam_eps_forward)},
      {"adam_eps_feedback", DFC_DOUBLE(adam_eps_feedback)},
      {"clip_norm", DFC_DOUBLE(clip_norm)},
      {"dt", DFC_DOUBLE(sim.dt)},
      {"k_max", DFC_UINT(sim.k_max, std::size_t)},
      {"tau_v", DFC_DOUBLE(sim.tau_v)},
      {"tau_u", DFC_DOUBLE(sim.tau_u)},
      {"k_p", DFC_DOUBLE(sim.k_p)},
      {"alpha_tilde", DFC_DOUBLE(sim.alpha_tilde)},
      {"dt_fb", DFC_DOUBLE(sim.dt_fb)},
      {"t_max_fb", DFC_UINT(sim.t_max_fb, std::size_t)},
      {"tau_v_fb", DFC_DOUBLE(sim.tau_v_fb)},
      {"sigma", DFC_DOUBLE(sim.sigma)},
      {"beta", DFC_DOUBLE(sim.beta)},
      {"alpha_tilde_fb", DFC_DOUBLE(sim.alpha_tilde_fb)},
      {"k_p_fb", DFC_DOUBLE(sim.k_p_fb)},
      {"tau_v_noise_phase", DFC_DOUBLE(sim.tau_v_noise_phase)},
      {"normalize_fb_noise", DFC_BOOL(sim.normalize_fb_noise)},
      {"dataset", {[](ExperimentConfig& c, const std::string& s) {
                     if (s == "student_teacher") c.dataset = DatasetKind::student_teacher;
                     else if (s == "idx") c.dataset = DatasetKind::idx;
                     else throw ConfigError("unknown dataset '" + s + "'");
                   },
                   [](const ExperimentConfig& c) {
                     return std::string(c.dataset == DatasetKind::idx ? "idx" : "student_teacher");
                   }}},
      {"sizes", {[](ExperimentConfig& c, const std::string& s) { c.sizes = parse_sizes(s); },
                 [](const ExperimentConfig& c) { return format_sizes(c.sizes); }}},
      {"hidden_activation",
       {[](ExperimentConfig& c, const std::string& s) { c.hidden_activation = activation_from_string(s); },
        [](const ExperimentConfig& c) { return to_string(c.hidden_activation); }}},
      {"output_activation",
       {[](ExperimentConfig& c, const std::string& s) { c.output_activation = activation_from_string(s); },
        [](const ExperimentConfig& c) { return to_string(c.output_activation); }}},
      {"teacher_sizes", {[](ExperimentConfig& c, const std::string& s) { c.teacher_sizes = parse_sizes(s); },
                         [](const ExperimentConfig& c) { return format_sizes(c.teacher_sizes); }}},
      {"teacher_seed", DFC_UINT(teacher_seed, std::uint64_t)},
      {"n_train", DFC_UINT(n_train, std::size_t)},
      {"n_test", DFC_UINT(n_test, std::size_t)},
      {"idx_images", DFC_STRING(idx_images)},
      {"idx_labels", DFC_STRING(idx_labels)},
      {"idx_limit", DFC_UINT(idx_limit, std::size_t)},
      {"val_count", DFC_UINT(val_count, std::size_t)},
      {"batch_size", DFC_UINT(batch_size, std::size_t)},
      {"diag_every", DFC_UINT(diag_every, std::size_t)},
      {"diag_samples", DFC_UINT(diag_samples, std::size_t)},
      {"gamma_mn", DFC_DOUBLE(diagnostics.gamma_mn)},
      {"gamma_gn", DFC_DOUBLE(diagnostics.gamma_gn)},
      {"jacobian_at_feedforward", DFC_BOOL(diagnostics.jacobian_at_feedforward)},
      {"seed", DFC_UINT(seed, std::uint64_t)},
      {"out_dir", DFC_STRING(out_dir)},
  };
  return table;
}

#undef DFC_DOUBLE
#undef DFC_UINT
#undef DFC_BOOL
#undef DFC_STRING

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->second.set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace dfc
