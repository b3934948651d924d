#include "dfc/analysis.hpp"

#include <cmath>

#include "dfc/errors.hpp"

namespace dfc {

double con2_ratio(const Matrix& q, const Matrix& j) {
  const double norm = q.norm();
  if (norm == 0.0) throw DegenerateInputError("con2_ratio: Q is zero");
  return project_onto_rowspace(q, j).norm() / norm;
}

double con1_ratio(const Activations& acts) {
  if (acts.v.empty()) throw DegenerateInputError("con1_ratio: network has no layers");
  const std::size_t count = acts.v.size();  // r_0 .. r_{L-1}
  std::vector<double> norms;
  norms.reserve(count);
  for (std::size_t i = 0; i < count; ++i) norms.push_back(acts.input_to(i).norm());
  double mean = 0.0;
  for (double n : norms) mean += n;
  mean /= static_cast<double>(count);
  if (mean == 0.0) throw DegenerateInputError("con1_ratio: all layer norms are zero");
  double var = 0.0;
  for (double n : norms) var += (n - mean) * (n - mean);
  var /= static_cast<double>(count);
  return std::sqrt(var) / mean;
}

Vector oracle_mn_update(const Matrix& j, const Matrix& r, const Vector& delta, double gamma) {
  return r * (damped_pinv(j, gamma) * delta);
}

Vector oracle_gn_update(const Matrix& j_w, const Vector& delta, double gamma) {
  return damped_pinv(j_w, gamma) * delta;
}

Vector oracle_bp_update(const Matrix& j_w, const Vector& delta) { return j_w.transpose() * delta; }

Vector oracle_ssa_update(const Matrix& j, const Matrix& q, const Matrix& r_ss, const Vector& delta,
                         double alpha_tilde) {
  const Matrix system = j * q + alpha_tilde * Matrix::Identity(j.rows(), j.rows());
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw SingularityError("oracle_ssa_update: J Q + alpha I is singular");
  return r_ss * (q * lu.solve(delta));
}

Matrix a_pi_matrix(const NetworkParams& params, const Activations& steady_state, const ControlGains& gains,
                   double tau_v) {
  const auto n = static_cast<Eigen::Index>(params.neuron_count());
  const auto m = static_cast<Eigen::Index>(params.output_size());
  const Matrix q = params.stacked_q();
  const Matrix j_ss = network_jacobian(params, steady_state);
  const Matrix jhat = layer_coupling_matrix(params, steady_state);
  const Matrix eye_n = Matrix::Identity(n, n);
  const Matrix lower = eye_n - jhat;
  const double kp_tv = gains.k_p / tau_v;

  Matrix a(n + m, n + m);
  a.topLeftCorner(n, n) = -lower / tau_v;
  a.topRightCorner(n, m) = lower * q / tau_v;
  a.bottomLeftCorner(m, n) = j_ss * ((kp_tv - 1.0 / gains.tau_u) * eye_n - kp_tv * jhat);
  a.bottomRightCorner(m, m) =
      -kp_tv * j_ss * lower * q - (gains.alpha_tilde / gains.tau_u) * Matrix::Identity(m, m);
  return a;
}

StabilityVerdict condition3_check(const Matrix& j_ss, const Matrix& q, double alpha) {
  const double margin = min_real_part(eigenvalues(j_ss * q)) + alpha;
  return {margin > 0.0, margin};
}

double descent_check(const Vector& update, const Vector& bp_update) {
  if (update.size() != bp_update.size()) throw ShapeError("descent_check: length mismatch");
  return update.dot(bp_update);
}

DiagnosticsAccumulator::DiagnosticsAccumulator(const NetworkParams& params, const SimConfig& sim,
                                               DiagnosticsSettings settings)
    : params_(params), sim_(sim), settings_(settings) {
  const auto w = static_cast<Eigen::Index>(params.weight_count());
  mn_ = Vector::Zero(w);
  gn_ = Vector::Zero(w);
  bp_ = Vector::Zero(w);
  ssa_ = Vector::Zero(w);
}

void DiagnosticsAccumulator::add_sample(const Vector& r0, const Vector& target) {
  const SteadyState ss = analytic_steady_state(params_, r0, target, sim_.alpha_tilde);
  const Matrix& j = ss.jacobian;
  const Matrix q = params_.stacked_q();
  const auto m = j.rows();

  con1_sum_ += con1_ratio(ss.feedforward);
  con2_sum_ += q.norm() > 0.0 ? con2_ratio(q, j) : 0.0;

  // R is never materialized: J_W J_W^T = J diag(R^T R) J^T and J_W^T y = R J^T y.
  mn_ += r_matrix_times(ss.feedforward, damped_pinv(j, settings_.gamma_mn) * ss.delta);
  const Matrix gram = j * r_gram_diagonal(ss.feedforward).asDiagonal() * j.transpose() +
                      settings_.gamma_gn * Matrix::Identity(m, m);
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) throw SingularityError("diagnostics: J_W J_W^T + gamma I is singular");
  gn_ += r_matrix_times(ss.feedforward, j.transpose() * lu.solve(ss.delta));
  bp_ += r_matrix_times(ss.feedforward, j.transpose() * ss.delta);
  ssa_ += r_matrix_times(ss.controlled, ss.delta_v);

  const Activations& at = settings_.jacobian_at_feedforward ? ss.feedforward : ss.controlled;
  const Matrix j_ss = settings_.jacobian_at_feedforward ? j : network_jacobian(params_, at);
  max_eig_jq_ = std::max(max_eig_jq_, max_real_part(eigenvalues(j_ss * q)));
  max_eig_api_ = std::max(max_eig_api_,
                          max_real_part(eigenvalues(a_pi_matrix(params_, at, sim_.forward_gains(), sim_.tau_v))));
  ++samples_;
}

namespace {

double safe_angle(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return angle_degrees(a, b);
}

}  // namespace

DiagnosticsRecord DiagnosticsAccumulator::finish(const Vector& applied_weight_update) const {
  DiagnosticsRecord rec;
  if (samples_ == 0) return rec;
  const double n = static_cast<double>(samples_);
  rec.con1_ratio = con1_sum_ / n;
  rec.con2_ratio = con2_sum_ / n;
  rec.angle_mn_deg = safe_angle(applied_weight_update, mn_);
  rec.angle_gn_deg = safe_angle(applied_weight_update, gn_);
  rec.angle_bp_deg = safe_angle(applied_weight_update, bp_);
  rec.angle_ssa_deg = safe_angle(applied_weight_update, ssa_);
  rec.max_real_eig_api = max_eig_api_;
  rec.max_real_eig_jq = max_eig_jq_;
  return rec;
}

}  // namespace dfc
