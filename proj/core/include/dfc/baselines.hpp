#pragma once

#include <random>
#include <vector>

#include "dfc/controller.hpp"
#include "dfc/network.hpp"
#include "dfc/plasticity.hpp"

namespace dfc {

/// Fixed random direct feedback matrices B_i (n_i x n_L), one per hidden
/// layer. The output layer uses the error directly.
struct DfaFeedback {
  std::vector<Matrix> B;

  /// Entries drawn from N(0, 1/n_L).
  static DfaFeedback random(const NetworkParams& params, std::mt19937_64& rng);
};

/// Negative loss gradient with respect to W_i and b_i (an increment, same
/// sign convention as the DFC buffers).
UpdateBuffer bp_gradients(const NetworkParams& params, const Vector& r0, const Vector& label, LossKind loss);

/// dW_i = (D(v_i) B_i e) r_{i-1}^T with e = -dL/dr_L; the output layer uses
/// D(v_L) e.
UpdateBuffer dfa_update(const NetworkParams& params, const DfaFeedback& feedback, const Vector& r0,
                        const Vector& label, LossKind loss);

}  // namespace dfc
