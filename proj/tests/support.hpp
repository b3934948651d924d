#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dfc/network.hpp"

namespace dfc::test {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

inline Vector gaussian(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  return gaussian(n, 1, rng, scale).col(0);
}

/// Random network with N(0, scale^2 / fan_in) weights. Biases only when asked.
inline NetworkParams random_network(const std::vector<std::size_t>& sizes, Activation hidden, Activation output,
                                    std::mt19937_64& rng, double scale = 1.0, bool biases = false) {
  std::vector<Activation> acts(sizes.size() - 1, hidden);
  acts.back() = output;
  NetworkParams p = NetworkParams::zeros(sizes, acts);
  for (auto& l : p.layers) {
    l.W = gaussian(l.W.rows(), l.W.cols(), rng, scale / std::sqrt(static_cast<double>(l.W.cols())));
    if (biases) l.b = gaussian(l.b.size(), rng, 0.1);
  }
  return p;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

/// Central differences of f: R^n -> R^m.
template <class F>
Matrix fd_jacobian(F&& f, const Vector& x, double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix out(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    out.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return out;
}

/// Output of the network when every v_i is shifted by the stacked offset.
inline Vector output_with_offsets(const NetworkParams& p, const Vector& r0, const Vector& offsets) {
  return forward_pass_with_offsets(p, r0, offsets).output();
}

}  // namespace dfc::test
