#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "dfc/numerics.hpp"

namespace dfc {

enum class Activation { tanh, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

double phi(Activation a, double x);
double phi_prime(Activation a, double x);
Vector phi(Activation a, const Vector& x);
Vector phi_prime(Activation a, const Vector& x);

/// One layer of the feedforward model: v_i = W r_{i-1} + b, r_i = phi(v_i),
/// plus the direct feedback weights Q_i (n_i x n_L) from the controller.
struct Layer {
  Matrix W;
  Vector b;
  Activation activation = Activation::tanh;
  Matrix Q;

  std::size_t size() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t fan_in() const { return static_cast<std::size_t>(W.cols()); }
};

struct NetworkParams {
  std::vector<Layer> layers;

  /// Zero-initialized network for the given layer widths (input first).
  static NetworkParams zeros(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations);

  std::size_t depth() const { return layers.size(); }
  std::size_t input_size() const;
  std::size_t output_size() const;
  /// Total neuron count over layers 1..L (length of the stacked v).
  std::size_t neuron_count() const;
  /// Total number of forward weight entries over all layers.
  std::size_t weight_count() const;
  std::vector<std::size_t> sizes() const;

  /// Rows of the stacked feedback matrix that belong to layer i.
  std::size_t layer_offset(std::size_t i) const;

  /// Q = [Q_1; ...; Q_L], shape neuron_count x n_L.
  Matrix stacked_q() const;
  void set_stacked_q(const Matrix& q);

  /// Throws ShapeError if the dimension chain is broken or an entry is not finite.
  void validate() const;
};

/// Glorot-normal forward weights, zero biases, zero feedback weights.
void glorot_normal_init(NetworkParams& params, std::mt19937_64& rng);

/// Feedforward equilibrium (or any trajectory point) of the network.
struct Activations {
  Vector r0;
  std::vector<Vector> v;
  std::vector<Vector> r;

  /// Input to layer i (1-based): r0 for i == 1, r_{i-1} otherwise.
  const Vector& input_to(std::size_t layer_index) const { return layer_index == 0 ? r0 : r[layer_index - 1]; }
  const Vector& output() const { return r.back(); }
  Vector stacked_v() const;
};

Activations forward_pass(const NetworkParams& params, const Vector& r0);

/// Forward sweep with an additive offset per layer:
/// v_i = W_i r_{i-1} + b_i + offsets[i]. Offsets are stacked like v.
Activations forward_pass_with_offsets(const NetworkParams& params, const Vector& r0, const Vector& offsets);

/// Builds activations from given pre-nonlinearities (r_i = phi(v_i)).
Activations activations_from_v(const NetworkParams& params, const Vector& r0, const std::vector<Vector>& v);

/// J = [J_1 ... J_L] with J_i = d r_L / d v_i, where a perturbation of v_i
/// is propagated through every downstream layer.
Matrix network_jacobian(const NetworkParams& params, const Activations& acts);

/// Block-diagonal R with block i = r_{i-1} kron I_{n_i}, so that J_W = J R^T
/// for column-major vectorized weights.
Matrix r_matrix(const Activations& acts);

/// R x without materializing R: layer i contributes vec(x_i r_{i-1}^T).
Vector r_matrix_times(const Activations& acts, const Vector& x);

/// ||r_{i-1}||^2 repeated n_i times per layer: the diagonal of R^T R.
Vector r_gram_diagonal(const Activations& acts);

/// d r_L / d vec(W) for all layers, column-major vectorization per layer.
Matrix weight_jacobian(const NetworkParams& params, const Activations& acts);

/// Block sub-diagonal matrix with W_{i+1} D(v_i) below the diagonal.
Matrix layer_coupling_matrix(const NetworkParams& params, const Activations& acts);

}  // namespace dfc
