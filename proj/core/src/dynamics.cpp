#include "dfc/dynamics.hpp"

#include <cmath>

#include "dfc/errors.hpp"

namespace dfc {

void SimConfig::validate() const {
  const auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(dt, "dt");
  positive(tau_v, "tau_v");
  positive(tau_u, "tau_u");
  positive(dt_fb, "dt_fb");
  positive(tau_v_fb, "tau_v_fb");
  positive(tau_v_noise_phase, "tau_v_noise_phase");
  if (k_p < 0.0 || k_p_fb < 0.0) throw ConfigError("k_p must be non-negative");
  if (alpha_tilde < 0.0 || alpha_tilde_fb < 0.0) throw ConfigError("alpha_tilde must be non-negative");
  if (sigma < 0.0 || beta < 0.0) throw ConfigError("sigma and beta must be non-negative");
  if (dt > std::min(tau_v, tau_u)) throw ConfigError("dt must not exceed min(tau_v, tau_u)");
  if (dt_fb > std::min(tau_v_fb, tau_v_noise_phase)) throw ConfigError("dt_fb must not exceed min(tau_v_fb, tau_v_noise_phase)");
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32)};
  engine_.seed(seq);
}

Vector NoiseStream::normal(Eigen::Index n) {
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = dist_(engine_);
  return out;
}

Matrix NoiseStream::normal(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = dist_(engine_);
  }
  return out;
}

namespace {

bool out_of_bounds(const Vector& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || std::abs(x(i)) > kDivergenceBound) return true;
  }
  return false;
}

void check_state(const std::vector<Vector>& v, const ControllerState& ctrl, std::size_t step) {
  bool bad = out_of_bounds(ctrl.u) || out_of_bounds(ctrl.u_int);
  for (const auto& x : v) bad = bad || out_of_bounds(x);
  if (bad) throw DivergenceError("network dynamics diverged", step);
}

enum class BufferMode { every_step, last_step };

/// Shared state of one simulated sample: activations, compartments and the
/// controller.
struct SimState {
  std::vector<Vector> v, r, v_ff, v_fb;
  ControllerState ctrl;

  Snapshot snapshot() const { return {v, v_ff, v_fb, ctrl}; }
};

SimState initial_state(const NetworkParams& params, const Activations& ff) {
  SimState s;
  s.v = ff.v;
  s.r = ff.r;
  s.v_ff = ff.v;
  for (const auto& l : params.layers) s.v_fb.push_back(Vector::Zero(l.W.rows()));
  s.ctrl = ControllerState::zeros(static_cast<Eigen::Index>(params.output_size()));
  return s;
}

PhaseResult integrate_forward(const NetworkParams& params, const Vector& r0, const Vector& target,
                              const SimConfig& config, bool record, BufferMode mode) {
  params.validate();
  if (target.size() != static_cast<Eigen::Index>(params.output_size())) {
    throw ShapeError("simulate: target dimension does not match network output");
  }
  const Activations ff = forward_pass(params, r0);
  SimState s = initial_state(params, ff);
  const ControlGains gains = config.forward_gains();
  const double leak = config.dt / config.tau_v;
  const std::size_t depth = params.depth();
  // The first layer's feedforward drive never changes: r0 is clamped.
  const Vector first_drive = ff.v.front();

  PhaseResult out;
  out.buffer = UpdateBuffer::zeros_like(params);
  if (record) {
    out.trajectory.snapshots.reserve(config.k_max + 1);
    out.trajectory.snapshots.push_back(s.snapshot());
  }

  for (std::size_t k = 0; k < config.k_max; ++k) {
    const Vector e = target - s.r.back();
    s.ctrl = controller_step(s.ctrl, e, gains, config.dt);
    for (std::size_t i = 0; i < depth; ++i) {
      const auto& l = params.layers[i];
      const Vector& prev = i == 0 ? r0 : s.r[i - 1];
      s.v_ff[i] = i == 0 ? first_drive : Vector(l.W * prev + l.b);
      s.v_fb[i] = l.Q * s.ctrl.u;
      s.v[i] += leak * (-s.v[i] + s.v_ff[i] + s.v_fb[i]);
      s.r[i] = phi(l.activation, s.v[i]);
      if (mode == BufferMode::every_step || k + 1 == config.k_max) {
        const Vector diff = s.r[i] - phi(l.activation, s.v_ff[i]);
        out.buffer.layers[i].dW.noalias() += diff * prev.transpose();
        out.buffer.layers[i].db += diff;
      }
    }
    check_state(s.v, s.ctrl, k + 1);
    if (record) out.trajectory.snapshots.push_back(s.snapshot());
  }
  out.buffer.step_count = mode == BufferMode::every_step ? config.k_max : 1;
  if (config.k_max > 0) out.buffer = out.buffer.averaged();
  out.final_state = s.snapshot();
  return out;
}

}  // namespace

PhaseResult simulate_forward_phase(const NetworkParams& params, const Vector& r0, const Vector& target,
                                   const SimConfig& config, bool record) {
  return integrate_forward(params, r0, target, config, record, BufferMode::every_step);
}

PhaseResult simulate_ss_phase(const NetworkParams& params, const Vector& r0, const Vector& target,
                              const SimConfig& config, bool record) {
  return integrate_forward(params, r0, target, config, record, BufferMode::last_step);
}

SteadyState analytic_steady_state(const NetworkParams& params, const Vector& r0, const Vector& target,
                                  double alpha_tilde) {
  params.validate();
  SteadyState ss;
  ss.feedforward = forward_pass(params, r0);
  if (target.size() != ss.feedforward.output().size()) {
    throw ShapeError("analytic_steady_state: target dimension does not match network output");
  }
  ss.jacobian = network_jacobian(params, ss.feedforward);
  ss.delta = target - ss.feedforward.output();
  const Matrix q = params.stacked_q();
  const auto n_out = ss.jacobian.rows();
  const Matrix system = ss.jacobian * q + alpha_tilde * Matrix::Identity(n_out, n_out);
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    throw SingularityError("analytic_steady_state: J Q + alpha I is singular; increase alpha_tilde");
  }
  ss.u = lu.solve(ss.delta);
  ss.delta_v = q * ss.u;
  ss.controlled = forward_pass_with_offsets(params, r0, ss.delta_v);

  ss.buffer = UpdateBuffer::zeros_like(params);
  ss.buffer.step_count = 1;
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < params.depth(); ++i) {
    const auto& l = params.layers[i];
    const Vector& v = ss.controlled.v[i];
    ss.v_ff.push_back(v - ss.delta_v.segment(off, v.size()));
    off += v.size();
    auto [dw, db] = forward_increment(v, ss.v_ff.back(), ss.controlled.input_to(i), l.activation);
    ss.buffer.layers[i].dW = std::move(dw);
    ss.buffer.layers[i].db = std::move(db);
  }
  return ss;
}

PhaseResult simulate_feedback_phase(const NetworkParams& params, const Vector& r0, const SimConfig& config,
                                    NoiseStream& noise, const FeedbackOptions& options) {
  params.validate();
  const Activations ff = forward_pass(params, r0);
  const Vector target = ff.output();
  SimState s = initial_state(params, ff);
  const ControlGains gains = config.feedback_gains();
  const double leak_v = config.dt_fb / config.tau_v_noise_phase;
  const double leak_fb = config.dt_fb / config.tau_v_fb;
  const double noise_scale = std::sqrt(config.dt_fb) / config.tau_v_fb * config.sigma;
  const std::size_t depth = params.depth();
  const double hebb_scale =
      config.normalize_fb_noise && config.sigma > 0.0 ? 1.0 / (config.sigma * config.sigma) : 1.0;

  PhaseResult out;
  out.buffer = UpdateBuffer::zeros_like(params);
  if (options.record) {
    out.trajectory.snapshots.reserve(config.t_max_fb + 1);
    out.trajectory.snapshots.push_back(s.snapshot());
  }

  std::vector<Vector> drive(depth);
  for (std::size_t i = 0; i < depth; ++i) drive[i].resize(params.layers[i].W.rows());

  for (std::size_t k = 0; k < config.t_max_fb; ++k) {
    const Vector e = target - s.r.back();
    s.ctrl = controller_step(s.ctrl, e, gains, config.dt_fb);
    for (std::size_t i = 0; i < depth; ++i) {
      const auto& l = params.layers[i];
      const bool frozen = options.freeze_output && i + 1 == depth;
      // v_ff of the first layer is fixed by the clamped input.
      if (i > 0) {
        s.v_ff[i].noalias() = l.W * s.r[i - 1];
        s.v_ff[i] += l.b;
      }
      // Anti-Hebbian term uses v_fb[k] and u[k+1]; the decay is added once below.
      if (!frozen) out.buffer.layers[i].dQ.noalias() -= (hebb_scale * s.v_fb[i]) * s.ctrl.u.transpose();
      drive[i].noalias() = l.Q * s.ctrl.u;
      s.v_fb[i] += leak_fb * (drive[i] - s.v_fb[i]);
      if (!frozen) {
        for (Eigen::Index j = 0; j < s.v_fb[i].size(); ++j) s.v_fb[i](j) += noise_scale * noise.normal();
      }
      s.v[i] += leak_v * (s.v_ff[i] + s.v_fb[i] - s.v[i]);
      if (l.activation == Activation::tanh) s.r[i] = s.v[i].array().tanh().matrix();
      else s.r[i] = s.v[i];
    }
    check_state(s.v, s.ctrl, k + 1);
    if (options.record) out.trajectory.snapshots.push_back(s.snapshot());
  }
  for (std::size_t i = 0; i < depth; ++i) {
    const bool frozen = options.freeze_output && i + 1 == depth;
    if (!frozen) out.buffer.layers[i].dQ -= (config.beta * static_cast<double>(config.t_max_fb)) * params.layers[i].Q;
  }
  out.buffer.step_count = config.t_max_fb;
  if (config.t_max_fb > 0) out.buffer = out.buffer.averaged();
  out.final_state = s.snapshot();
  return out;
}

Matrix sample_admissible_feedback(const Matrix& j, std::mt19937_64& rng, int budget) {
  const auto n = j.rows();
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int attempt = 0; attempt < budget; ++attempt) {
    Matrix m(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) m(r, c) = dist(rng);
    }
    const Matrix q = j.transpose() * m;
    if (min_real_part(eigenvalues(j * q)) > 0.0) return q / q.norm();
  }
  throw SamplingError("sample_admissible_feedback: no admissible Q after " + std::to_string(budget) + " draws");
}

}  // namespace dfc
