#include <benchmark/benchmark.h>

#include <random>

#include "dfc/dynamics.hpp"
#include "dfc/network.hpp"
#include "dfc/numerics.hpp"

namespace {

struct Fixture {
  dfc::NetworkParams params;
  dfc::Vector r0, target;
};

// width x 3 hidden tanh layers, linear output of 10, Q = J^T at the feedforward point
Fixture make_net(std::size_t width) {
  std::mt19937_64 rng(7);
  Fixture f;
  f.params = dfc::NetworkParams::zeros({width, width, width, width, 10},
                                       {dfc::Activation::tanh, dfc::Activation::tanh, dfc::Activation::tanh,
                                        dfc::Activation::linear});
  dfc::glorot_normal_init(f.params, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  f.r0 = dfc::Vector::NullaryExpr(static_cast<Eigen::Index>(width), [&] { return n(rng); });
  const auto ff = dfc::forward_pass(f.params, f.r0);
  f.params.set_stacked_q(dfc::network_jacobian(f.params, ff).transpose());
  f.target = ff.output() + 0.1 * dfc::Vector::Ones(10);
  return f;
}

void BM_ForwardPhase(benchmark::State& state) {
  const Fixture f = make_net(static_cast<std::size_t>(state.range(0)));
  dfc::SimConfig cfg;
  cfg.k_max = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(dfc::simulate_forward_phase(f.params, f.r0, f.target, cfg));
}
BENCHMARK(BM_ForwardPhase)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_AnalyticSteadyState(benchmark::State& state) {
  const Fixture f = make_net(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dfc::analytic_steady_state(f.params, f.r0, f.target, 1e-3));
}
BENCHMARK(BM_AnalyticSteadyState)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_FeedbackPhase(benchmark::State& state) {
  const Fixture f = make_net(static_cast<std::size_t>(state.range(0)));
  dfc::SimConfig cfg;
  std::uint64_t sample = 0;
  for (auto _ : state) {
    dfc::NoiseStream noise(1, 0, sample++);
    benchmark::DoNotOptimize(dfc::simulate_feedback_phase(f.params, f.r0, cfg, noise));
  }
}
BENCHMARK(BM_FeedbackPhase)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DampedPinv(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 1.0);
  const dfc::Matrix a = dfc::Matrix::NullaryExpr(10, n, [&] { return d(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(dfc::damped_pinv(a, 0.1));
}
BENCHMARK(BM_DampedPinv)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
