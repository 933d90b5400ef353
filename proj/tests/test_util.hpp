#pragma once

#include <gtest/gtest.h>

#include <functional>
#include <memory>
#include <vector>

#include "cdgan/rng.hpp"
#include "cdgan/tape.hpp"

namespace cdgan::testutil {

inline std::shared_ptr<Tensor> random_param(Rng& rng, int n, int c, int h, int w, Scalar scale = 1.0) {
  auto t = std::make_shared<Tensor>(n, c, h, w);
  for (int64_t i = 0; i < t->numel(); ++i) (*t)[i] = scale * rng.normal();
  return t;
}

/// Compares analytic leaf gradients against central finite differences over
/// every element of every param.  `build` must construct the graph from the
/// current contents of the shared params and return the scalar root.
inline void check_gradients(const std::vector<std::shared_ptr<Tensor>>& params,
                            const std::function<ad::NodeId(ad::Tape&)>& build,
                            Scalar eps = 1e-5, Scalar tol = 1e-6) {
  ad::Tape tape;
  ad::NodeId root = build(tape);
  ASSERT_EQ(tape.value(root).numel(), 1);
  tape.backward(root);

  std::vector<const Tensor*> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(tape.leaf_grad(p));

  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& pv = *params[pi];
    for (int64_t i = 0; i < pv.numel(); ++i) {
      const Scalar saved = pv[i];
      pv[i] = saved + eps;
      ad::Tape tp;
      const Scalar fp = tp.value(build(tp))[0];
      pv[i] = saved - eps;
      ad::Tape tm;
      const Scalar fm = tm.value(build(tm))[0];
      pv[i] = saved;
      const Scalar numeric = (fp - fm) / (2 * eps);
      const Scalar a = analytic[pi] ? (*analytic[pi])[i] : 0.0;
      EXPECT_NEAR(a, numeric, tol * std::max({1.0, std::abs(a), std::abs(numeric)}))
          << "param " << pi << " element " << i;
    }
  }
}

}  // namespace cdgan::testutil
