#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include "dfc/controller.hpp"
#include "dfc/dynamics.hpp"
#include "dfc/network.hpp"

namespace dfc {

// ---------------------------------------------------------------------------
// Alignment conditions
// ---------------------------------------------------------------------------

/// ||P_{J^T} Q||_F / ||Q||_F. Equals 1 iff the columns of Q lie in Row(J).
double con2_ratio(const Matrix& q, const Matrix& j);

/// Population standard deviation of {||r_0||, ..., ||r_{L-1}||} divided by
/// their mean. The output layer is excluded.
double con1_ratio(const Activations& acts);

// ---------------------------------------------------------------------------
// Oracle updates. All are flat vectors in the column-major per-layer
// weight order used by UpdateBuffer::flat_weights.
// ---------------------------------------------------------------------------

/// R J^T (J J^T + gamma I)^{-1} delta
Vector oracle_mn_update(const Matrix& j, const Matrix& r, const Vector& delta, double gamma);
/// J_W^T (J_W J_W^T + gamma I)^{-1} delta
Vector oracle_gn_update(const Matrix& j_w, const Vector& delta, double gamma);
/// J_W^T delta
Vector oracle_bp_update(const Matrix& j_w, const Vector& delta);
/// R_ss Q (J Q + alpha I)^{-1} delta
Vector oracle_ssa_update(const Matrix& j, const Matrix& q, const Matrix& r_ss, const Vector& delta,
                         double alpha_tilde);

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

/// Linearized matrix of the coupled (Delta v, u) dynamics around a steady
/// state. With the leak-on-u controller the effective controller time
/// constant is gains.tau_u and the effective leak is gains.alpha_tilde.
Matrix a_pi_matrix(const NetworkParams& params, const Activations& steady_state, const ControlGains& gains,
                   double tau_v);

struct StabilityVerdict {
  bool stable = false;
  /// min Re(eig(J_ss Q)) + alpha; positive when the condition holds.
  double margin = 0.0;
};

/// Every eigenvalue of J_ss Q has real part greater than -alpha.
StabilityVerdict condition3_check(const Matrix& j_ss, const Matrix& q, double alpha);

/// Inner product between an update and the BP update (positive = descent).
double descent_check(const Vector& update, const Vector& bp_update);

// ---------------------------------------------------------------------------
// Per-iteration diagnostics
// ---------------------------------------------------------------------------

struct DiagnosticsRecord {
  std::size_t iteration = 0;
  double con1_ratio = std::numeric_limits<double>::quiet_NaN();
  double con2_ratio = std::numeric_limits<double>::quiet_NaN();
  double angle_mn_deg = std::numeric_limits<double>::quiet_NaN();
  double angle_gn_deg = std::numeric_limits<double>::quiet_NaN();
  double angle_bp_deg = std::numeric_limits<double>::quiet_NaN();
  double angle_ssa_deg = std::numeric_limits<double>::quiet_NaN();
  double max_real_eig_api = std::numeric_limits<double>::quiet_NaN();
  double max_real_eig_jq = std::numeric_limits<double>::quiet_NaN();
  double train_loss = std::numeric_limits<double>::quiet_NaN();
};

struct DiagnosticsSettings {
  double gamma_mn = 0.1;
  double gamma_gn = 0.1;
  /// Evaluate J_ss at the feedforward equilibrium instead of the steady state.
  bool jacobian_at_feedforward = false;
};

/// Accumulates oracle updates over the samples of a minibatch and compares
/// them with the update actually applied.
class DiagnosticsAccumulator {
 public:
  DiagnosticsAccumulator(const NetworkParams& params, const SimConfig& sim, DiagnosticsSettings settings);

  void add_sample(const Vector& r0, const Vector& target);

  /// Angles are NaN when either side is a zero vector.
  DiagnosticsRecord finish(const Vector& applied_weight_update) const;

 private:
  const NetworkParams& params_;
  SimConfig sim_;
  DiagnosticsSettings settings_;
  std::size_t samples_ = 0;
  double con1_sum_ = 0.0;
  double con2_sum_ = 0.0;
  double max_eig_api_ = -std::numeric_limits<double>::infinity();
  double max_eig_jq_ = -std::numeric_limits<double>::infinity();
  Vector mn_, gn_, bp_, ssa_;
};

}  // namespace dfc
