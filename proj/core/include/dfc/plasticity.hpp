#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dfc/network.hpp"

namespace dfc {

/// Parameter increments for one layer. Increments are descent-style: they
/// are added to the parameters after scaling by a learning rate.
struct LayerUpdate {
  Matrix dW;
  Vector db;
  Matrix dQ;
};

struct UpdateBuffer {
  std::vector<LayerUpdate> layers;
  std::size_t step_count = 0;

  static UpdateBuffer zeros_like(const NetworkParams& params);

  UpdateBuffer& operator+=(const UpdateBuffer& other);
  UpdateBuffer& operator*=(double s);

  /// Divides every increment by step_count and resets step_count to 1.
  UpdateBuffer averaged() const;

  /// Forward weights of every layer, each vectorized column-major, concatenated.
  Vector flat_weights() const;
  /// Forward weights and biases: [vec(W_1); b_1; vec(W_2); b_2; ...].
  Vector flat_forward() const;
  Vector flat_feedback() const;

  bool forward_is_zero() const;
};

/// Eq. 5 increment for one layer and one step:
/// dW = (phi(v) - phi(v_ff)) r_prev^T, db = phi(v) - phi(v_ff).
std::pair<Matrix, Vector> forward_increment(const Vector& v, const Vector& v_ff, const Vector& r_prev,
                                            Activation activation);

/// Anti-Hebbian feedback increment with weight decay: -v_fb u^T - beta Q.
Matrix feedback_increment(const Vector& v_fb, const Vector& u, double beta, const Matrix& q);

struct SteadyStateUpdate {
  Matrix linear;   // eta (v_ss - v_ff_ss) r_prev^T
  Matrix wrapped;  // eta (phi(v_ss) - phi(v_ff_ss)) r_prev^T
};

SteadyStateUpdate steady_state_update(const Vector& v_ss, const Vector& v_ff_ss, const Vector& r_prev_ss,
                                      Activation activation, double eta);

/// eta / ||r_{i-1}||^2 for every layer, using the given (feedforward) activations.
std::vector<double> layer_specific_rates(const Activations& acts, double eta);

/// Scales layer i's forward increments by rates[i].
void scale_layers(UpdateBuffer& buffer, const std::vector<double>& rates);

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global-norm clipping threshold on the gradient; <= 0 disables clipping.
  double clip_norm = 0.0;
};

/// SGD or bias-corrected Adam over a fixed list of flat parameter tensors.
class Optimizer {
 public:
  Optimizer() = default;
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  /// theta <- theta - lr * step(g) for each tensor, after optional clipping.
  void step(const std::vector<Eigen::Map<Vector>>& params, std::vector<Vector> grads);

  const OptimizerConfig& config() const { return config_; }
  std::size_t step_count() const { return steps_; }
  const std::vector<Vector>& first_moments() const { return m_; }
  const std::vector<Vector>& second_moments() const { return v_; }

  void restore(std::size_t steps, std::vector<Vector> m, std::vector<Vector> v);

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
};

/// Clips the concatenation of grads to the given global L2 norm. Returns the
/// pre-clipping norm.
double clip_global_norm(std::vector<Vector>& grads, double max_norm);

/// Applies the forward increments (W, b) with the optimizer. The optimizer
/// receives the gradient g = -increment.
NetworkParams apply_update(const NetworkParams& params, const UpdateBuffer& buffer, Optimizer& opt);

/// Applies the feedback increments. With freeze_output the output layer's Q_L is left untouched.
NetworkParams apply_feedback_update(const NetworkParams& params, const UpdateBuffer& buffer, Optimizer& opt,
                                    bool freeze_output);

}  // namespace dfc
