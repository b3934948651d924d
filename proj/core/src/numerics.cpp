#include "dfc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dfc/errors.hpp"

namespace dfc {

namespace {

std::string shape_of(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace

Matrix pinv(const Matrix& a) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = kRankTolerance * (s.size() > 0 ? s(0) : 0.0);
  Vector s_inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) s_inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix damped_pinv(const Matrix& a, double gamma) {
  if (gamma < 0.0) throw ShapeError("damped_pinv: negative damping");
  if (gamma == 0.0) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    const double cutoff = kRankTolerance * (s.size() > 0 ? s(0) : 0.0);
    const auto rank = std::count_if(s.data(), s.data() + s.size(), [&](double x) { return x > cutoff; });
    if (rank < a.rows()) {
      throw SingularityError("damped_pinv: A A^T is singular for " + shape_of(a) + " input (rank " +
                             std::to_string(rank) + ")");
    }
    return pinv(a);
  }
  const Matrix gram = a * a.transpose() + gamma * Matrix::Identity(a.rows(), a.rows());
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) throw SingularityError("damped_pinv: A A^T + gamma I is singular");
  return a.transpose() * lu.inverse();
}

Matrix project_onto_rowspace(const Matrix& q, const Matrix& j) {
  if (q.rows() != j.cols()) {
    throw ShapeError("project_onto_rowspace: Q is " + shape_of(q) + " but J is " + shape_of(j));
  }
  try {
    return damped_pinv(j, 0.0) * (j * q);
  } catch (const SingularityError&) {
    throw SingularityError("project_onto_rowspace: J is rank deficient");
  }
}

Spectrum eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("eigenvalues: matrix is " + shape_of(a) + ", not square");
  Spectrum out;
  if (a.size() == 0) return out;
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw SingularityError("eigenvalues: solver did not converge");
  const auto& values = solver.eigenvalues();
  out.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values(i));
  return out;
}

double max_real_part(const Spectrum& spectrum) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : spectrum) best = std::max(best, z.real());
  return best;
}

double min_real_part(const Spectrum& spectrum) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& z : spectrum) best = std::min(best, z.real());
  return best;
}

double angle_degrees(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("angle_degrees: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("angle_degrees: zero vector");
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / std::numbers::pi;
}

double angle_degrees(const Vector& a, const Vector& b) { return angle_degrees(as_span(a), as_span(b)); }

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw ShapeError(std::string(what) + ": non-finite entries");
}

}  // namespace dfc
