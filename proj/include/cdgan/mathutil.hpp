#pragma once

#include <algorithm>
#include <cmath>

#include "cdgan/tensor.hpp"

namespace cdgan {

inline Scalar sigmoid(Scalar x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline Scalar softplus(Scalar x) {
  return std::max(x, Scalar{0}) + std::log1p(std::exp(-std::abs(x)));
}

inline Scalar clamp(Scalar v, Scalar lo, Scalar hi) { return std::min(std::max(v, lo), hi); }

/// In-place softmax over a contiguous row of n entries.
inline void softmax_row(Scalar* row, int n) {
  Scalar m = row[0];
  for (int i = 1; i < n; ++i) m = std::max(m, row[i]);
  Scalar z = 0;
  for (int i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - m);
    z += row[i];
  }
  for (int i = 0; i < n; ++i) row[i] /= z;
}

}  // namespace cdgan
