#include "doctest.h"
#include "dfc/controller.hpp"
#include "dfc/errors.hpp"
#include "support.hpp"

using namespace dfc;

TEST_CASE("compute_target examples") {
  const Vector out = Eigen::Vector2d(1, 0);
  const Vector y = Eigen::Vector2d(0, 1);

  const auto same = compute_target(out, y, 0.0, LossKind::squared_error);
  CHECK(same.target == out);
  CHECK(same.delta.norm() == 0.0);

  const auto half = compute_target(out, y, 0.5, LossKind::squared_error);
  CHECK((half.target - y).norm() < 1e-15);

  const auto quarter = compute_target(out, y, 0.25, LossKind::squared_error);
  CHECK(quarter.target(0) == doctest::Approx(0.5));
  CHECK(quarter.target(1) == doctest::Approx(0.5));

  // finite-difference gradient of ||r - y||^2
  const Matrix fd = test::fd_jacobian(
      [&](const Vector& r) { return Vector::Constant(1, loss_value(LossKind::squared_error, r, y)); }, out);
  const Vector by_hand = out - 0.25 * fd.row(0).transpose();
  CHECK((quarter.target - by_hand).norm() < 1e-8);

  CHECK_THROWS_AS(compute_target(out, y, -1.0, LossKind::squared_error), ConfigError);
  CHECK_THROWS_AS(compute_target(out, Vector::Ones(3), 0.1, LossKind::squared_error), ShapeError);
}

TEST_CASE("squared error delta is 2 lambda (y - r)") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    const Vector r = test::gaussian(4, rng), y = test::gaussian(4, rng);
    const auto t = compute_target(r, y, 0.037, LossKind::squared_error);
    CHECK(t.delta == (2.0 * 0.037) * (y - r));
  }
}

TEST_CASE("cross entropy gradient matches finite differences") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const Vector r = test::gaussian(10, rng, 3.0);
    Vector y = Vector::Zero(10);
    y(static_cast<Eigen::Index>(rng() % 10)) = 1.0;
    const Matrix fd = test::fd_jacobian(
        [&](const Vector& x) { return Vector::Constant(1, loss_value(LossKind::cross_entropy_softmax, x, y)); }, r);
    CHECK((loss_gradient(LossKind::cross_entropy_softmax, r, y) - fd.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("loss names") {
  CHECK(loss_from_string("mse") == LossKind::squared_error);
  CHECK(loss_from_string(to_string(LossKind::cross_entropy_softmax)) == LossKind::cross_entropy_softmax);
  CHECK_THROWS_AS(loss_from_string("hinge"), ConfigError);
}

TEST_CASE("controller_step examples") {
  const ControlGains plain{0.0, 0.0, 1.0};
  const auto zero = controller_step(ControllerState::zeros(1), Vector::Zero(1), plain, 0.1);
  CHECK(zero.u.norm() == 0.0);
  CHECK(zero.u_int.norm() == 0.0);

  const auto one = controller_step(ControllerState::zeros(1), Vector::Ones(1), plain, 0.1);
  CHECK(one.u_int(0) == doctest::Approx(0.1));
  CHECK(one.u(0) == doctest::Approx(0.1));

  const auto prop = controller_step(ControllerState::zeros(1), Vector::Ones(1), ControlGains{2.0, 0.0, 1.0}, 0.1);
  CHECK(prop.u(0) == doctest::Approx(2.1));
  CHECK(prop.u_int(0) == doctest::Approx(0.1));
}

TEST_CASE("leaky integrator converges to e / alpha") {
  const ControlGains g{0.0, 0.5, 1.0};
  const Vector e = Eigen::Vector2d(1.0, -2.0);
  ControllerState s = ControllerState::zeros(2);
  double prev_gap = 1e300;
  for (int k = 0; k < 2000; ++k) {
    s = controller_step(s, e, g, 0.01);
    const double gap = (s.u_int - e / 0.5).norm();
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3);
}
