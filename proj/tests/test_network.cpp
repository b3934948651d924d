#include "doctest.h"
#include "dfc/errors.hpp"
#include "dfc/network.hpp"
#include "support.hpp"

using namespace dfc;
using dfc::test::fd_jacobian;
using dfc::test::gaussian;
using dfc::test::random_network;

namespace {

NetworkParams scalar_chain() {
  NetworkParams p = NetworkParams::zeros({1, 1, 1}, {Activation::linear, Activation::linear});
  p.layers[0].W(0, 0) = 2.0;
  p.layers[1].W(0, 0) = 3.0;
  return p;
}

// Flat column-major weights of every layer.
Vector flat_weights(const NetworkParams& p) {
  Vector out(static_cast<Eigen::Index>(p.weight_count()));
  Eigen::Index off = 0;
  for (const auto& l : p.layers) {
    out.segment(off, l.W.size()) = l.W.reshaped();
    off += l.W.size();
  }
  return out;
}

NetworkParams with_weights(NetworkParams p, const Vector& w) {
  Eigen::Index off = 0;
  for (auto& l : p.layers) {
    l.W = w.segment(off, l.W.size()).reshaped(l.W.rows(), l.W.cols());
    off += l.W.size();
  }
  return p;
}

}  // namespace

TEST_CASE("forward_pass examples") {
  const auto acts = forward_pass(scalar_chain(), Vector::Ones(1));
  CHECK(acts.r[0](0) == doctest::Approx(2.0));
  CHECK(acts.r[1](0) == doctest::Approx(6.0));

  NetworkParams zero = NetworkParams::zeros({3, 2}, {Activation::tanh});
  CHECK(forward_pass(zero, Vector::Ones(3)).r[0].norm() == 0.0);

  NetworkParams one = NetworkParams::zeros({1, 1}, {Activation::tanh});
  one.layers[0].W(0, 0) = 1.0;
  CHECK(forward_pass(one, Vector::Ones(1)).r[0](0) == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));
  CHECK(forward_pass(one, Vector::Ones(1)).r[0](0) == doctest::Approx(0.7615941559557649));

  CHECK_THROWS_AS(forward_pass(one, Vector::Ones(2)), ShapeError);
}

TEST_CASE("forward_pass is deterministic") {
  std::mt19937_64 rng(1);
  const auto p = random_network({4, 6, 3}, Activation::tanh, Activation::linear, rng, 1.0, true);
  const Vector x = gaussian(4, rng);
  const auto a = forward_pass(p, x), b = forward_pass(p, x);
  for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
}

TEST_CASE("network_jacobian") {
  NetworkParams single = NetworkParams::zeros({3, 4}, {Activation::linear});
  std::mt19937_64 rng(2);
  single.layers[0].W = gaussian(4, 3, rng);
  const Matrix j1 = network_jacobian(single, forward_pass(single, gaussian(3, rng)));
  CHECK((j1 - Matrix::Identity(4, 4)).norm() == 0.0);

  const auto chain = scalar_chain();
  const Vector r0 = Vector::Ones(1);
  const Matrix j = network_jacobian(chain, forward_pass(chain, r0));
  CHECK(j(0, 0) == doctest::Approx(3.0));
  CHECK(j(0, 1) == doctest::Approx(1.0));
  const Matrix fd = fd_jacobian([&](const Vector& o) { return test::output_with_offsets(chain, r0, o); },
                                Vector::Zero(2));
  CHECK((fd - j).cwiseAbs().maxCoeff() < 1e-6);

  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 g(100 + seed);
    const auto p = random_network({5, 7, 6, 4, 3}, Activation::tanh, Activation::tanh, g, 1.5, true);
    const Vector x = gaussian(5, g);
    const Matrix jac = network_jacobian(p, forward_pass(p, x));
    const Matrix num = fd_jacobian([&](const Vector& o) { return test::output_with_offsets(p, x, o); },
                                   Vector::Zero(static_cast<Eigen::Index>(p.neuron_count())));
    CHECK(test::rel_err(jac, num) < 1e-5);
  }
}

TEST_CASE("r_matrix structure") {
  NetworkParams p = NetworkParams::zeros({1, 1}, {Activation::linear});
  const Matrix r = r_matrix(forward_pass(p, Vector::Ones(1)));
  CHECK(r.rows() == 1);
  CHECK(r(0, 0) == 1.0);

  std::mt19937_64 rng(4);
  const auto net = random_network({4, 5, 3, 2}, Activation::tanh, Activation::linear, rng, 1.0, true);
  const auto acts = forward_pass(net, gaussian(4, rng));
  const Matrix big = r_matrix(acts);
  CHECK(big.rows() == static_cast<Eigen::Index>(net.weight_count()));
  CHECK(big.cols() == static_cast<Eigen::Index>(net.neuron_count()));

  // R^T R = diag(||r_{i-1}||^2 I)
  const Matrix gram = big.transpose() * big;
  const Vector diag = r_gram_diagonal(acts);
  CHECK((gram - Matrix(diag.asDiagonal())).norm() < 1e-12);

  const Vector x = gaussian(big.cols(), rng);
  CHECK((r_matrix_times(acts, x) - big * x).norm() < 1e-12);
}

TEST_CASE("weight_jacobian matches finite differences over weights") {
  for (int seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(40 + seed);
    const auto p = random_network({3, 4, 4, 2}, Activation::tanh, Activation::linear, rng, 1.2, true);
    const Vector x = gaussian(3, rng);
    const Matrix jw = weight_jacobian(p, forward_pass(p, x));
    const Matrix num =
        fd_jacobian([&](const Vector& w) { return forward_pass(with_weights(p, w), x).output(); }, flat_weights(p));
    CHECK(test::rel_err(jw, num) < 1e-5);
  }
}

TEST_CASE("weight_jacobian special cases") {
  std::mt19937_64 rng(9);
  auto p = random_network({3, 4, 2}, Activation::tanh, Activation::linear, rng);
  const Matrix jw = weight_jacobian(p, forward_pass(p, Vector::Zero(3)));
  CHECK(jw.leftCols(12).norm() == 0.0);

  NetworkParams single = NetworkParams::zeros({1, 3}, {Activation::linear});
  const Matrix js = weight_jacobian(single, forward_pass(single, Vector::Constant(1, 2.0)));
  CHECK((js - 2.0 * Matrix::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("stacked feedback round trip and validation") {
  std::mt19937_64 rng(12);
  auto p = random_network({3, 4, 2}, Activation::tanh, Activation::linear, rng);
  const Matrix q = gaussian(6, 2, rng);
  p.set_stacked_q(q);
  CHECK(p.stacked_q() == q);
  CHECK(p.layers[1].Q == q.bottomRows(2));
  CHECK_THROWS_AS(p.set_stacked_q(gaussian(5, 2, rng)), ShapeError);

  p.layers[1].W = Matrix::Zero(2, 5);
  CHECK_THROWS_AS(p.validate(), ShapeError);
}

TEST_CASE("glorot init scale") {
  NetworkParams p = NetworkParams::zeros({300, 200}, {Activation::tanh});
  std::mt19937_64 rng(0);
  glorot_normal_init(p, rng);
  const double var = p.layers[0].W.squaredNorm() / static_cast<double>(p.layers[0].W.size());
  CHECK(var == doctest::Approx(2.0 / 500.0).epsilon(0.03));
  CHECK(p.layers[0].b.norm() == 0.0);
}

TEST_CASE("layer_coupling_matrix is block sub-diagonal") {
  std::mt19937_64 rng(13);
  const auto p = random_network({2, 3, 3, 2}, Activation::tanh, Activation::linear, rng);
  const auto acts = forward_pass(p, gaussian(2, rng));
  const Matrix jhat = layer_coupling_matrix(p, acts);
  CHECK(jhat.topRows(3).norm() == 0.0);
  const Matrix expect = p.layers[1].W * phi_prime(Activation::tanh, acts.v[0]).asDiagonal();
  CHECK((jhat.block(3, 0, 3, 3) - expect).norm() < 1e-15);
  CHECK(jhat.block(6, 0, 2, 3).norm() == 0.0);
}
