#include "dfc/controller.hpp"

#include <cmath>

#include "dfc/errors.hpp"

namespace dfc {

std::string to_string(LossKind k) { return k == LossKind::squared_error ? "squared_error" : "cross_entropy_softmax"; }

LossKind loss_from_string(const std::string& name) {
  if (name == "squared_error" || name == "mse") return LossKind::squared_error;
  if (name == "cross_entropy_softmax" || name == "cross_entropy") return LossKind::cross_entropy_softmax;
  throw ConfigError("unknown loss '" + name + "'");
}

namespace {

Vector softmax(const Vector& x) {
  const Vector shifted = (x.array() - x.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

void check_label(const Vector& output, const Vector& label) {
  if (output.size() != label.size()) throw ShapeError("label dimension does not match network output");
}

}  // namespace

double loss_value(LossKind kind, const Vector& output, const Vector& label) {
  check_label(output, label);
  switch (kind) {
    case LossKind::squared_error:
      return (output - label).squaredNorm();
    case LossKind::cross_entropy_softmax: {
      const double m = output.maxCoeff();
      const double log_z = m + std::log((output.array() - m).exp().sum());
      return -(label.array() * (output.array() - log_z)).sum();
    }
  }
  throw ConfigError("unknown loss kind");
}

Vector loss_gradient(LossKind kind, const Vector& output, const Vector& label) {
  check_label(output, label);
  switch (kind) {
    case LossKind::squared_error:
      return 2.0 * (output - label);
    case LossKind::cross_entropy_softmax:
      return softmax(output) * label.sum() - label;
  }
  throw ConfigError("unknown loss kind");
}

OutputTarget compute_target(const Vector& output, const Vector& label, double lambda, LossKind kind) {
  if (lambda < 0.0) throw ConfigError("target stepsize lambda must be non-negative");
  OutputTarget t;
  t.delta = -lambda * loss_gradient(kind, output, label);
  t.target = output + t.delta;
  return t;
}

ControllerState controller_step(const ControllerState& state, const Vector& e, const ControlGains& gains, double dt) {
  ControllerState next;
  next.u_int = state.u_int + (dt / gains.tau_u) * (e - gains.alpha_tilde * state.u);
  next.u = next.u_int + gains.k_p * e;
  return next;
}

}  // namespace dfc
