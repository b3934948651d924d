#include "dfc/network.hpp"

#include <cmath>

#include "dfc/errors.hpp"

namespace dfc {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "linear"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + name + "'");
}

double phi(Activation a, double x) { return a == Activation::tanh ? std::tanh(x) : x; }

double phi_prime(Activation a, double x) {
  if (a == Activation::linear) return 1.0;
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

Vector phi(Activation a, const Vector& x) {
  if (a == Activation::linear) return x;
  return x.array().tanh().matrix();
}

Vector phi_prime(Activation a, const Vector& x) {
  if (a == Activation::linear) return Vector::Ones(x.size());
  return (1.0 - x.array().tanh().square()).matrix();
}

NetworkParams NetworkParams::zeros(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations) {
  if (sizes.size() < 2) throw ShapeError("network needs an input and at least one layer");
  if (activations.size() != sizes.size() - 1) throw ShapeError("one activation per layer required");
  NetworkParams params;
  const auto n_out = static_cast<Eigen::Index>(sizes.back());
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    Layer layer;
    const auto rows = static_cast<Eigen::Index>(sizes[i]);
    layer.W = Matrix::Zero(rows, static_cast<Eigen::Index>(sizes[i - 1]));
    layer.b = Vector::Zero(rows);
    layer.activation = activations[i - 1];
    layer.Q = Matrix::Zero(rows, n_out);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::size_t NetworkParams::input_size() const { return layers.empty() ? 0 : layers.front().fan_in(); }

std::size_t NetworkParams::output_size() const { return layers.empty() ? 0 : layers.back().size(); }

std::size_t NetworkParams::neuron_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::size_t NetworkParams::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size());
  return n;
}

std::vector<std::size_t> NetworkParams::sizes() const {
  std::vector<std::size_t> out{input_size()};
  for (const auto& l : layers) out.push_back(l.size());
  return out;
}

std::size_t NetworkParams::layer_offset(std::size_t i) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < i; ++k) off += layers[k].size();
  return off;
}

Matrix NetworkParams::stacked_q() const {
  Matrix q(static_cast<Eigen::Index>(neuron_count()), static_cast<Eigen::Index>(output_size()));
  Eigen::Index row = 0;
  for (const auto& l : layers) {
    q.middleRows(row, l.Q.rows()) = l.Q;
    row += l.Q.rows();
  }
  return q;
}

void NetworkParams::set_stacked_q(const Matrix& q) {
  if (q.rows() != static_cast<Eigen::Index>(neuron_count()) || q.cols() != static_cast<Eigen::Index>(output_size())) {
    throw ShapeError("set_stacked_q: wrong shape");
  }
  Eigen::Index row = 0;
  for (auto& l : layers) {
    l.Q = q.middleRows(row, l.W.rows());
    row += l.W.rows();
  }
}

void NetworkParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  const auto n_out = layers.back().W.rows();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string tag = "layer " + std::to_string(i + 1);
    if (i > 0 && l.W.cols() != layers[i - 1].W.rows()) throw ShapeError(tag + ": fan-in does not match previous layer");
    if (l.b.size() != l.W.rows()) throw ShapeError(tag + ": bias length mismatch");
    if (l.Q.rows() != l.W.rows() || l.Q.cols() != n_out) throw ShapeError(tag + ": feedback matrix must be n_i x n_L");
    require_finite(l.W, tag.c_str());
    require_finite(l.b, tag.c_str());
    require_finite(l.Q, tag.c_str());
  }
}

void glorot_normal_init(NetworkParams& params, std::mt19937_64& rng) {
  for (auto& l : params.layers) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(l.W.rows() + l.W.cols()));
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.W.rows(); ++r) l.W(r, c) = dist(rng);
    }
    l.b.setZero();
    l.Q.setZero();
  }
}

Vector Activations::stacked_v() const {
  Eigen::Index n = 0;
  for (const auto& x : v) n += x.size();
  Vector out(n);
  Eigen::Index off = 0;
  for (const auto& x : v) {
    out.segment(off, x.size()) = x;
    off += x.size();
  }
  return out;
}

Activations forward_pass(const NetworkParams& params, const Vector& r0) {
  return forward_pass_with_offsets(params, r0, Vector::Zero(static_cast<Eigen::Index>(params.neuron_count())));
}

Activations forward_pass_with_offsets(const NetworkParams& params, const Vector& r0, const Vector& offsets) {
  if (r0.size() != static_cast<Eigen::Index>(params.input_size())) {
    throw ShapeError("forward_pass: input has length " + std::to_string(r0.size()) + ", expected " +
                     std::to_string(params.input_size()));
  }
  if (offsets.size() != static_cast<Eigen::Index>(params.neuron_count())) {
    throw ShapeError("forward_pass: offset vector length mismatch");
  }
  Activations acts;
  acts.r0 = r0;
  acts.v.reserve(params.depth());
  acts.r.reserve(params.depth());
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < params.depth(); ++i) {
    const auto& l = params.layers[i];
    const Vector& in = acts.input_to(i);
    if (in.size() != l.W.cols()) throw ShapeError("forward_pass: layer " + std::to_string(i + 1) + " fan-in mismatch");
    Vector v = l.W * in + l.b + offsets.segment(off, l.W.rows());
    off += l.W.rows();
    acts.r.push_back(phi(l.activation, v));
    acts.v.push_back(std::move(v));
  }
  return acts;
}

Activations activations_from_v(const NetworkParams& params, const Vector& r0, const std::vector<Vector>& v) {
  Activations acts;
  acts.r0 = r0;
  acts.v = v;
  for (std::size_t i = 0; i < v.size(); ++i) acts.r.push_back(phi(params.layers[i].activation, v[i]));
  return acts;
}

Matrix network_jacobian(const NetworkParams& params, const Activations& acts) {
  const std::size_t depth = params.depth();
  const auto n_out = static_cast<Eigen::Index>(params.output_size());
  Matrix j(n_out, static_cast<Eigen::Index>(params.neuron_count()));
  // Walk backwards: J_L = D(v_L), J_i = J_{i+1} W_{i+1} D(v_i).
  Matrix block = phi_prime(params.layers[depth - 1].activation, acts.v[depth - 1]).asDiagonal();
  for (std::size_t k = depth; k-- > 0;) {
    if (k + 1 < depth) {
      const Vector d = phi_prime(params.layers[k].activation, acts.v[k]);
      block = (block * params.layers[k + 1].W) * d.asDiagonal();
    }
    j.middleCols(static_cast<Eigen::Index>(params.layer_offset(k)), block.cols()) = block;
  }
  return j;
}

Matrix r_matrix(const Activations& acts) {
  Eigen::Index rows = 0, cols = 0;
  for (std::size_t i = 0; i < acts.v.size(); ++i) {
    rows += acts.input_to(i).size() * acts.v[i].size();
    cols += acts.v[i].size();
  }
  Matrix r = Matrix::Zero(rows, cols);
  Eigen::Index row = 0, col = 0;
  for (std::size_t i = 0; i < acts.v.size(); ++i) {
    const Vector& prev = acts.input_to(i);
    const Eigen::Index n = acts.v[i].size();
    for (Eigen::Index c = 0; c < prev.size(); ++c) {
      r.block(row + c * n, col, n, n).diagonal().setConstant(prev(c));
    }
    row += prev.size() * n;
    col += n;
  }
  return r;
}

Vector r_matrix_times(const Activations& acts, const Vector& x) {
  Eigen::Index rows = 0, cols = 0;
  for (std::size_t i = 0; i < acts.v.size(); ++i) {
    rows += acts.input_to(i).size() * acts.v[i].size();
    cols += acts.v[i].size();
  }
  if (x.size() != cols) throw ShapeError("r_matrix_times: vector length mismatch");
  Vector out(rows);
  Eigen::Index row = 0, col = 0;
  for (std::size_t i = 0; i < acts.v.size(); ++i) {
    const Vector& prev = acts.input_to(i);
    const Eigen::Index n = acts.v[i].size();
    const Matrix outer = x.segment(col, n) * prev.transpose();
    out.segment(row, outer.size()) = outer.reshaped();
    row += outer.size();
    col += n;
  }
  return out;
}

Vector r_gram_diagonal(const Activations& acts) {
  Eigen::Index cols = 0;
  for (const auto& v : acts.v) cols += v.size();
  Vector out(cols);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < acts.v.size(); ++i) {
    out.segment(col, acts.v[i].size()).setConstant(acts.input_to(i).squaredNorm());
    col += acts.v[i].size();
  }
  return out;
}

Matrix weight_jacobian(const NetworkParams& params, const Activations& acts) {
  return network_jacobian(params, acts) * r_matrix(acts).transpose();
}

Matrix layer_coupling_matrix(const NetworkParams& params, const Activations& acts) {
  const auto n = static_cast<Eigen::Index>(params.neuron_count());
  Matrix jhat = Matrix::Zero(n, n);
  for (std::size_t i = 1; i < params.depth(); ++i) {
    const auto row = static_cast<Eigen::Index>(params.layer_offset(i));
    const auto col = static_cast<Eigen::Index>(params.layer_offset(i - 1));
    const Vector d = phi_prime(params.layers[i - 1].activation, acts.v[i - 1]);
    const Matrix& w = params.layers[i].W;
    jhat.block(row, col, w.rows(), w.cols()) = w * d.asDiagonal();
  }
  return jhat;
}

}  // namespace dfc
