#pragma once

#include <cmath>
#include <cstdint>

#include "cdgan/tensor.hpp"

namespace cdgan {

/// First/second moment accumulators for one parameter tensor.
struct AdamMoments {
  Tensor m;
  Tensor v;

  static AdamMoments zeros_like(const Tensor& p) {
    const auto& s = p.shape();
    return {Tensor(s[0], s[1], s[2], s[3]), Tensor(s[0], s[1], s[2], s[3])};
  }
};

/// One bias-corrected ADAM step in place. `step` is the 1-based count of
/// updates applied to this parameter group, used for bias correction.
inline void adam_update(Tensor& param, const Tensor& grad, AdamMoments& mo, int64_t step,
                        Scalar learning_rate, Scalar beta1, Scalar beta2, Scalar epsilon = 1e-8) {
  require_same_shape(param, grad, "adam_update");
  require_same_shape(param, mo.m, "adam_update moments");
  if (step < 1) throw ValueError("adam_update: step must be >= 1");
  if (!grad.all_finite()) throw ValueError("adam_update: non-finite gradient");
  const Scalar c1 = 1.0 - std::pow(beta1, static_cast<Scalar>(step));
  const Scalar c2 = 1.0 - std::pow(beta2, static_cast<Scalar>(step));
  for (int64_t i = 0; i < param.numel(); ++i) {
    mo.m[i] = beta1 * mo.m[i] + (1.0 - beta1) * grad[i];
    mo.v[i] = beta2 * mo.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const Scalar mhat = mo.m[i] / c1;
    const Scalar vhat = mo.v[i] / c2;
    param[i] -= learning_rate * mhat / (std::sqrt(vhat) + epsilon);
  }
}

}  // namespace cdgan
