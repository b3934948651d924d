#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dfc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Spectrum = std::vector<std::complex<double>>;

/// Relative cutoff below which singular values count as zero.
inline constexpr double kRankTolerance = 1e-12;

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// kRankTolerance * sigma_max are treated as zero.
Matrix pinv(const Matrix& a);

/// A^T (A A^T + gamma I)^{-1}. For gamma == 0 the SVD pseudoinverse is
/// returned and A must have full row rank.
Matrix damped_pinv(const Matrix& a, double gamma);

/// J^T (J J^T)^{-1} J Q: the orthogonal projection of the columns of Q onto
/// the row space of J.
Matrix project_onto_rowspace(const Matrix& q, const Matrix& j);

/// Full spectrum of a real square matrix (general, non-symmetric solver).
Spectrum eigenvalues(const Matrix& a);

double max_real_part(const Spectrum& spectrum);
double min_real_part(const Spectrum& spectrum);

/// Angle between two flat vectors in degrees, in [0, 180].
double angle_degrees(std::span<const double> a, std::span<const double> b);
double angle_degrees(const Vector& a, const Vector& b);

/// Throws ShapeError unless every entry is finite.
void require_finite(const Matrix& a, const char* what);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace dfc
