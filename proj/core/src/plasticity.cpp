#include "dfc/plasticity.hpp"

#include <cmath>

#include "dfc/errors.hpp"

namespace dfc {

UpdateBuffer UpdateBuffer::zeros_like(const NetworkParams& params) {
  UpdateBuffer buf;
  for (const auto& l : params.layers) {
    buf.layers.push_back({Matrix::Zero(l.W.rows(), l.W.cols()), Vector::Zero(l.b.size()),
                          Matrix::Zero(l.Q.rows(), l.Q.cols())});
  }
  return buf;
}

UpdateBuffer& UpdateBuffer::operator+=(const UpdateBuffer& other) {
  if (layers.size() != other.layers.size()) throw ShapeError("UpdateBuffer: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].dW += other.layers[i].dW;
    layers[i].db += other.layers[i].db;
    layers[i].dQ += other.layers[i].dQ;
  }
  step_count += other.step_count;
  return *this;
}

UpdateBuffer& UpdateBuffer::operator*=(double s) {
  for (auto& l : layers) {
    l.dW *= s;
    l.db *= s;
    l.dQ *= s;
  }
  return *this;
}

UpdateBuffer UpdateBuffer::averaged() const {
  UpdateBuffer out = *this;
  if (step_count > 0) out *= 1.0 / static_cast<double>(step_count);
  out.step_count = 1;
  return out;
}

Vector UpdateBuffer::flat_weights() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.dW.size();
  Vector out(n);
  Eigen::Index off = 0;
  for (const auto& l : layers) {
    out.segment(off, l.dW.size()) = l.dW.reshaped();
    off += l.dW.size();
  }
  return out;
}

Vector UpdateBuffer::flat_forward() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.dW.size() + l.db.size();
  Vector out(n);
  Eigen::Index off = 0;
  for (const auto& l : layers) {
    out.segment(off, l.dW.size()) = l.dW.reshaped();
    off += l.dW.size();
    out.segment(off, l.db.size()) = l.db;
    off += l.db.size();
  }
  return out;
}

Vector UpdateBuffer::flat_feedback() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.dQ.size();
  Vector out(n);
  Eigen::Index off = 0;
  for (const auto& l : layers) {
    out.segment(off, l.dQ.size()) = l.dQ.reshaped();
    off += l.dQ.size();
  }
  return out;
}

bool UpdateBuffer::forward_is_zero() const {
  for (const auto& l : layers) {
    if (!l.dW.isZero(0.0) || !l.db.isZero(0.0)) return false;
  }
  return true;
}

std::pair<Matrix, Vector> forward_increment(const Vector& v, const Vector& v_ff, const Vector& r_prev,
                                            Activation activation) {
  if (v.size() != v_ff.size()) throw ShapeError("forward_increment: v and v_ff differ in length");
  Vector diff = phi(activation, v) - phi(activation, v_ff);
  Matrix dw = diff * r_prev.transpose();
  return {std::move(dw), std::move(diff)};
}

Matrix feedback_increment(const Vector& v_fb, const Vector& u, double beta, const Matrix& q) {
  return -v_fb * u.transpose() - beta * q;
}

SteadyStateUpdate steady_state_update(const Vector& v_ss, const Vector& v_ff_ss, const Vector& r_prev_ss,
                                      Activation activation, double eta) {
  SteadyStateUpdate out;
  out.linear = eta * (v_ss - v_ff_ss) * r_prev_ss.transpose();
  out.wrapped = eta * (phi(activation, v_ss) - phi(activation, v_ff_ss)) * r_prev_ss.transpose();
  return out;
}

std::vector<double> layer_specific_rates(const Activations& acts, double eta) {
  std::vector<double> rates;
  for (std::size_t i = 0; i < acts.v.size(); ++i) {
    const double n2 = acts.input_to(i).squaredNorm();
    if (n2 == 0.0) throw DegenerateInputError("layer_specific_rates: zero presynaptic activity");
    rates.push_back(eta / n2);
  }
  return rates;
}

void scale_layers(UpdateBuffer& buffer, const std::vector<double>& rates) {
  if (rates.size() != buffer.layers.size()) throw ShapeError("scale_layers: one rate per layer required");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    buffer.layers[i].dW *= rates[i];
    buffer.layers[i].db *= rates[i];
  }
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

double clip_global_norm(std::vector<Vector>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    for (auto& g : grads) g *= max_norm / norm;
  }
  return norm;
}

void Optimizer::step(const std::vector<Eigen::Map<Vector>>& params, std::vector<Vector> grads) {
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) throw ShapeError("optimizer: tensor size mismatch");
  }
  clip_global_norm(grads, config_.clip_norm);
  ++steps_;
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i];
      p -= config_.lr * grads[i];
    }
    return;
  }
  if (m_.empty()) {
    for (const auto& g : grads) {
      m_.push_back(Vector::Zero(g.size()));
      v_.push_back(Vector::Zero(g.size()));
    }
  }
  if (m_.size() != grads.size()) throw ShapeError("optimizer: tensor list changed between steps");
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    const Vector m_hat = m_[i] / c1;
    const Vector v_hat = v_[i] / c2;
    auto p = params[i];
    p.array() -= config_.lr * m_hat.array() / (v_hat.array().sqrt() + config_.epsilon);
  }
}

void Optimizer::restore(std::size_t steps, std::vector<Vector> m, std::vector<Vector> v) {
  if (m.size() != v.size()) throw ShapeError("optimizer restore: moment lists differ in length");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

namespace {

Eigen::Map<Vector> flat(Matrix& m) { return {m.data(), m.size()}; }
Eigen::Map<Vector> flat(Vector& v) { return {v.data(), v.size()}; }

void check_buffer(const NetworkParams& params, const UpdateBuffer& buffer) {
  if (buffer.layers.size() != params.layers.size()) throw ShapeError("apply_update: layer count mismatch");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    const auto& u = buffer.layers[i];
    if (u.dW.rows() != l.W.rows() || u.dW.cols() != l.W.cols() || u.db.size() != l.b.size() ||
        u.dQ.rows() != l.Q.rows() || u.dQ.cols() != l.Q.cols()) {
      throw ShapeError("apply_update: buffer shape does not match layer " + std::to_string(i + 1));
    }
  }
}

}  // namespace

NetworkParams apply_update(const NetworkParams& params, const UpdateBuffer& buffer, Optimizer& opt) {
  check_buffer(params, buffer);
  NetworkParams out = params;
  std::vector<Eigen::Map<Vector>> views;
  std::vector<Vector> grads;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    views.push_back(flat(out.layers[i].W));
    grads.push_back(-buffer.layers[i].dW.reshaped());
    views.push_back(flat(out.layers[i].b));
    grads.push_back(-buffer.layers[i].db);
  }
  opt.step(views, std::move(grads));
  return out;
}

NetworkParams apply_feedback_update(const NetworkParams& params, const UpdateBuffer& buffer, Optimizer& opt,
                                    bool freeze_output) {
  check_buffer(params, buffer);
  NetworkParams out = params;
  std::vector<Eigen::Map<Vector>> views;
  std::vector<Vector> grads;
  const std::size_t trained = freeze_output ? out.layers.size() - 1 : out.layers.size();
  for (std::size_t i = 0; i < trained; ++i) {
    views.push_back(flat(out.layers[i].Q));
    grads.push_back(-buffer.layers[i].dQ.reshaped());
  }
  if (!views.empty()) opt.step(views, std::move(grads));
  return out;
}

}  // namespace dfc
