#include "dfc/baselines.hpp"

#include <cmath>

#include "dfc/errors.hpp"

namespace dfc {

DfaFeedback DfaFeedback::random(const NetworkParams& params, std::mt19937_64& rng) {
  DfaFeedback fb;
  const auto n_out = static_cast<Eigen::Index>(params.output_size());
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(n_out)));
  for (std::size_t i = 0; i + 1 < params.depth(); ++i) {
    Matrix b(params.layers[i].W.rows(), n_out);
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      for (Eigen::Index r = 0; r < b.rows(); ++r) b(r, c) = dist(rng);
    }
    fb.B.push_back(std::move(b));
  }
  return fb;
}

UpdateBuffer bp_gradients(const NetworkParams& params, const Vector& r0, const Vector& label, LossKind loss) {
  const Activations acts = forward_pass(params, r0);
  UpdateBuffer out = UpdateBuffer::zeros_like(params);
  out.step_count = 1;
  // d = -dL/dv_i, walked backwards.
  Vector d = -loss_gradient(loss, acts.output(), label);
  for (std::size_t k = params.depth(); k-- > 0;) {
    const auto& l = params.layers[k];
    d = d.cwiseProduct(phi_prime(l.activation, acts.v[k]));
    out.layers[k].dW = d * acts.input_to(k).transpose();
    out.layers[k].db = d;
    if (k > 0) d = l.W.transpose() * d;
  }
  return out;
}

UpdateBuffer dfa_update(const NetworkParams& params, const DfaFeedback& feedback, const Vector& r0,
                        const Vector& label, LossKind loss) {
  if (feedback.B.size() + 1 != params.depth()) throw ShapeError("dfa_update: one B per hidden layer required");
  const Activations acts = forward_pass(params, r0);
  UpdateBuffer out = UpdateBuffer::zeros_like(params);
  out.step_count = 1;
  const Vector e = -loss_gradient(loss, acts.output(), label);
  for (std::size_t k = 0; k < params.depth(); ++k) {
    const auto& l = params.layers[k];
    const Vector signal = k + 1 == params.depth() ? e : Vector(feedback.B[k] * e);
    const Vector d = signal.cwiseProduct(phi_prime(l.activation, acts.v[k]));
    out.layers[k].dW = d * acts.input_to(k).transpose();
    out.layers[k].db = d;
  }
  return out;
}

}  // namespace dfc
