#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dfc/controller.hpp"
#include "dfc/network.hpp"
#include "dfc/plasticity.hpp"

namespace dfc {

/// Time constants, gains and step counts for both simulation phases.
/// All leakage values are alpha_tilde (leak on u, independent of k_p).
struct SimConfig {
  // Forward (wake) phase.
  double dt = 0.02;
  std::size_t k_max = 1000;
  double tau_v = 0.2;
  double tau_u = 1.0;
  double k_p = 2.0;
  double alpha_tilde = 1e-3;

  // Feedback (sleep) phase.
  double dt_fb = 0.001;
  std::size_t t_max_fb = 300;
  double tau_v_fb = 0.3;            // feedback compartment
  double sigma = 0.01;
  double beta = 0.01;
  double alpha_tilde_fb = 0.5;
  double k_p_fb = 0.0;
  double tau_v_noise_phase = 0.005;  // network time constant during the feedback phase
  /// Divide the anti-Hebbian term by sigma^2 so the learned Q does not
  /// shrink with the noise power. Off gives the plain -v_fb u^T - beta Q.
  bool normalize_fb_noise = true;

  /// Throws ConfigError on non-positive time constants or oversized steps.
  void validate() const;

  ControlGains forward_gains() const { return {k_p, alpha_tilde, tau_u}; }
  ControlGains feedback_gains() const { return {k_p_fb, alpha_tilde_fb, tau_u}; }
};

/// Magnitude above which a simulated state counts as diverged.
inline constexpr double kDivergenceBound = 1e6;

struct Snapshot {
  std::vector<Vector> v;
  std::vector<Vector> v_ff;
  std::vector<Vector> v_fb;
  ControllerState controller;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
};

/// Gaussian noise stream for one simulated sample. Streams are keyed by
/// (seed, phase/epoch, sample index) so results do not depend on the order
/// in which samples of a minibatch are processed.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t sample);

  double normal() { return dist_(engine_); }
  Vector normal(Eigen::Index n);
  Matrix normal(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

struct PhaseResult {
  Trajectory trajectory;  // empty unless recording was requested
  Snapshot final_state;
  UpdateBuffer buffer;    // averaged over the window (step_count == 1)
};

/// DFC forward phase: Euler integration with layerwise instantaneous
/// transmission and proactive feedback; Eq. 5 increments accumulated every
/// step and averaged over k_max.
PhaseResult simulate_forward_phase(const NetworkParams& params, const Vector& r0, const Vector& target,
                                   const SimConfig& config, bool record = false);

/// DFC-SS: same integration, increments from the last step only.
PhaseResult simulate_ss_phase(const NetworkParams& params, const Vector& r0, const Vector& target,
                              const SimConfig& config, bool record = false);

struct SteadyState {
  Activations feedforward;  // v^-, r^-
  Activations controlled;   // v_ss, r_ss
  std::vector<Vector> v_ff;  // W_i r_{i-1,ss} + b_i
  Matrix jacobian;          // J at the feedforward equilibrium
  Vector delta;             // r_L^* - r_L^-
  Vector u;                 // (JQ + alpha I)^{-1} delta
  Vector delta_v;           // Q u, stacked over layers
  UpdateBuffer buffer;      // phi-wrapped steady-state increments
};

/// Linearized steady state of the controlled network (DFC-SSA).
SteadyState analytic_steady_state(const NetworkParams& params, const Vector& r0, const Vector& target,
                                  double alpha_tilde);

struct FeedbackOptions {
  bool freeze_output = false;  // keep Q_L fixed and inject no noise into the output layer
  bool record = false;
};

/// Noisy sleep phase (Euler-Maruyama on the feedback compartment) with the
/// output target pinned to the feedforward output. Only dQ of the returned
/// buffer is populated.
PhaseResult simulate_feedback_phase(const NetworkParams& params, const Vector& r0, const SimConfig& config,
                                    NoiseStream& noise, const FeedbackOptions& options = {});

/// Q = J^T M with M a random square matrix, resampled until every
/// eigenvalue of J Q has positive real part; scaled to unit Frobenius norm.
Matrix sample_admissible_feedback(const Matrix& j, std::mt19937_64& rng, int budget = 100);

}  // namespace dfc
