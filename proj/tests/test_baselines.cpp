#include "doctest.h"
#include "dfc/analysis.hpp"
#include "dfc/baselines.hpp"
#include "dfc/errors.hpp"
#include "support.hpp"

using namespace dfc;
using dfc::test::gaussian;
using dfc::test::random_network;

namespace {

// Negative loss gradient over [vec(W_1); b_1; ...] by central differences.
Vector fd_increment(const NetworkParams& p, const Vector& x, const Vector& y, LossKind loss) {
  Vector flat(static_cast<Eigen::Index>(p.weight_count() + p.neuron_count()));
  Eigen::Index off = 0;
  for (const auto& l : p.layers) {
    flat.segment(off, l.W.size()) = l.W.reshaped();
    off += l.W.size();
    flat.segment(off, l.b.size()) = l.b;
    off += l.b.size();
  }
  const Matrix g = test::fd_jacobian(
      [&](const Vector& theta) {
        NetworkParams q = p;
        Eigen::Index o = 0;
        for (auto& l : q.layers) {
          l.W = theta.segment(o, l.W.size()).reshaped(l.W.rows(), l.W.cols());
          o += l.W.size();
          l.b = theta.segment(o, l.b.size());
          o += l.b.size();
        }
        return Vector::Constant(1, loss_value(loss, forward_pass(q, x).output(), y));
      },
      flat);
  return -g.row(0).transpose();
}

}  // namespace

TEST_CASE("bp_gradients with zero error is zero") {
  std::mt19937_64 rng(1);
  const auto p = random_network({3, 4, 2}, Activation::tanh, Activation::linear, rng, 1.0, true);
  const Vector x = gaussian(3, rng);
  CHECK(bp_gradients(p, x, forward_pass(p, x).output(), LossKind::squared_error).forward_is_zero());
}

TEST_CASE("single linear layer: outer product of the error and the input") {
  std::mt19937_64 rng(2);
  NetworkParams p = NetworkParams::zeros({3, 2}, {Activation::linear});
  p.layers[0].W = gaussian(2, 3, rng);
  const Vector x = gaussian(3, rng), y = gaussian(2, rng);
  const Vector e = 2.0 * (y - p.layers[0].W * x);
  const auto g = bp_gradients(p, x, y, LossKind::squared_error);
  CHECK((g.layers[0].dW - e * x.transpose()).norm() < 1e-14);
  CHECK((g.layers[0].db - e).norm() < 1e-14);
}

TEST_CASE("bp_gradients match finite differences") {
  for (int seed = 0; seed < 4; ++seed) {
    std::mt19937_64 rng(10 + seed);
    const auto p = random_network({4, 5, 4, 3}, Activation::tanh, Activation::linear, rng, 1.3, true);
    const Vector x = gaussian(4, rng), y = gaussian(3, rng);
    const Vector analytic = bp_gradients(p, x, y, LossKind::squared_error).flat_forward();
    CHECK(test::rel_err(analytic, fd_increment(p, x, y, LossKind::squared_error)) < 1e-5);

    Vector onehot = Vector::Zero(3);
    onehot(seed % 3) = 1.0;
    const Vector ce = bp_gradients(p, x, onehot, LossKind::cross_entropy_softmax).flat_forward();
    CHECK((ce - fd_increment(p, x, onehot, LossKind::cross_entropy_softmax)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("bp_gradients equal the BP oracle") {
  std::mt19937_64 rng(3);
  const auto p = random_network({4, 6, 3}, Activation::tanh, Activation::linear, rng);
  const Vector x = gaussian(4, rng), y = gaussian(3, rng);
  const auto acts = forward_pass(p, x);
  const Vector delta = -loss_gradient(LossKind::squared_error, acts.output(), y);
  const Vector oracle = oracle_bp_update(weight_jacobian(p, acts), delta);
  CHECK((bp_gradients(p, x, y, LossKind::squared_error).flat_weights() - oracle).norm() < 1e-10 * oracle.norm());
}

TEST_CASE("dfa_update") {
  std::mt19937_64 rng(4);
  const auto p = random_network({4, 5, 4, 3}, Activation::linear, Activation::linear, rng);
  const Vector x = gaussian(4, rng), y = gaussian(3, rng);

  const auto fb = DfaFeedback::random(p, rng);
  REQUIRE(fb.B.size() == 2);
  CHECK(fb.B[0].rows() == 5);
  CHECK(fb.B[1].cols() == 3);
  CHECK(dfa_update(p, fb, x, forward_pass(p, x).output(), LossKind::squared_error).forward_is_zero());

  // B_i = J_i^T reproduces backprop on a linear network
  const auto acts = forward_pass(p, x);
  const Matrix j = network_jacobian(p, acts);
  DfaFeedback exact;
  exact.B = {j.leftCols(5).transpose(), j.middleCols(5, 4).transpose()};
  const auto bp = bp_gradients(p, x, y, LossKind::squared_error);
  const auto dfa = dfa_update(p, exact, x, y, LossKind::squared_error);
  CHECK((dfa.flat_forward() - bp.flat_forward()).norm() < 1e-12 * bp.flat_forward().norm());

  // output layer always matches backprop
  const auto random = dfa_update(p, fb, x, y, LossKind::squared_error);
  CHECK((random.layers[2].dW - bp.layers[2].dW).norm() < 1e-14);

  DfaFeedback wrong;
  CHECK_THROWS_AS(dfa_update(p, wrong, x, y, LossKind::squared_error), ShapeError);
}

TEST_CASE("dfa does not read downstream weights beyond the output error") {
  std::mt19937_64 rng(5);
  const auto p = random_network({3, 4, 4, 2}, Activation::tanh, Activation::linear, rng, 1.0, true);
  const auto fb = DfaFeedback::random(p, rng);
  const Vector x = gaussian(3, rng), y = gaussian(2, rng);
  auto q = p;
  q.layers[1].W += gaussian(4, 4, rng, 0.3);
  q.layers[2].W += gaussian(2, 4, rng, 0.3);
  // keep the output error fixed by moving the label with the output
  const Vector y2 = y + forward_pass(q, x).output() - forward_pass(p, x).output();
  const auto a = dfa_update(p, fb, x, y, LossKind::squared_error);
  const auto b = dfa_update(q, fb, x, y2, LossKind::squared_error);
  CHECK((a.layers[0].dW - b.layers[0].dW).norm() < 1e-12);
  CHECK((a.layers[0].db - b.layers[0].db).norm() < 1e-12);
}
