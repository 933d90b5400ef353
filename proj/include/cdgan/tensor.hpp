#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <vector>

#include "cdgan/errors.hpp"

namespace cdgan {

using Scalar = double;

/// Dense rank-4 tensor in NCHW layout. Lower-rank values use degenerate
/// trailing dimensions, e.g. a batch of scalars is (N, 1, 1, 1).
class Tensor {
 public:
  Tensor() = default;

  Tensor(int n, int c, int h, int w) : shape_{n, c, h, w} {
    if (n < 0 || c < 0 || h < 0 || w < 0) {
      throw ShapeError("Tensor: negative dimension in " + shape_str());
    }
    data_.assign(static_cast<size_t>(numel()), Scalar{0});
  }

  static Tensor zeros(int n, int c, int h, int w) { return Tensor(n, c, h, w); }

  static Tensor full(int n, int c, int h, int w, Scalar v) {
    Tensor t(n, c, h, w);
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor scalar(Scalar v) { return full(1, 1, 1, 1, v); }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }

  int64_t numel() const {
    return static_cast<int64_t>(shape_[0]) * shape_[1] * shape_[2] * shape_[3];
  }
  bool empty() const { return data_.empty(); }

  Scalar& at(int n, int c, int h, int w) {
    return data_[static_cast<size_t>(((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  Scalar at(int n, int c, int h, int w) const {
    return data_[static_cast<size_t>(((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  Scalar& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  Scalar operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::vector<Scalar>& vec() { return data_; }
  const std::vector<Scalar>& vec() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(" << shape_[0] << ", " << shape_[1] << ", " << shape_[2] << ", " << shape_[3] << ")";
    return os.str();
  }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (Scalar v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  Scalar min() const { return data_.empty() ? 0 : *std::min_element(data_.begin(), data_.end()); }
  Scalar max() const { return data_.empty() ? 0 : *std::max_element(data_.begin(), data_.end()); }
  Scalar sum() const { return std::accumulate(data_.begin(), data_.end(), Scalar{0}); }
  Scalar mean() const { return data_.empty() ? 0 : sum() / static_cast<Scalar>(data_.size()); }

  /// Largest |a - b| over all elements; both tensors must have equal shape.
  static Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
      throw ShapeError("max_abs_diff: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    Scalar m = 0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }

 private:
  std::array<int, 4> shape_{0, 0, 0, 0};
  std::vector<Scalar> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace cdgan
