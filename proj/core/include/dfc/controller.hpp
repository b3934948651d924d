#pragma once

#include <string>

#include "dfc/numerics.hpp"

namespace dfc {

enum class LossKind { squared_error, cross_entropy_softmax };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& name);

/// Squared error is ||r - y||^2 (no 1/2). Cross entropy has the softmax
/// folded in: -y^T log softmax(r).
double loss_value(LossKind kind, const Vector& output, const Vector& label);
Vector loss_gradient(LossKind kind, const Vector& output, const Vector& label);

struct OutputTarget {
  Vector target;  // r_L^*
  Vector delta;   // r_L^* - r_L^-
};

/// Feedforward output nudged down the loss gradient by stepsize lambda.
OutputTarget compute_target(const Vector& output, const Vector& label, double lambda, LossKind kind);

struct ControllerState {
  Vector u;
  Vector u_int;

  static ControllerState zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
};

struct ControlGains {
  double k_p = 0.0;
  double alpha_tilde = 0.0;
  double tau_u = 1.0;
};

/// One Euler step of the PI controller with leakage on u:
///   u_int <- u_int + dt/tau_u (e - alpha_tilde u_old)
///   u     <- u_int + k_p e
ControllerState controller_step(const ControllerState& state, const Vector& e, const ControlGains& gains, double dt);

}  // namespace dfc
