#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "cdgan/mathutil.hpp"
#include "cdgan/tape.hpp"

namespace cdgan::ad {

using EMat = Eigen::MatrixXd;
using ERowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMapRow = Eigen::Map<ERowMat>;
using EMapRowConst = Eigen::Map<const ERowMat>;

/// Spatial geometry of a strided convolution.
struct ConvGeom {
  int kernel = 3;
  int stride = 1;
  int pad = 0;

  int out_dim(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  bool valid_for(int in) const { return in + 2 * pad >= kernel && out_dim(in) >= 1; }
};

namespace detail {

/// Unfolds one sample (C, H, W) into a (C*k*k, Ho*Wo) column matrix.
inline void im2col(const Scalar* x, int C, int H, int W, const ConvGeom& g, EMat& cols) {
  const int Ho = g.out_dim(H), Wo = g.out_dim(W);
  cols.resize(static_cast<Eigen::Index>(C) * g.kernel * g.kernel, static_cast<Eigen::Index>(Ho) * Wo);
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const int row = (c * g.kernel + ky) * g.kernel + kx;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * g.stride + ky - g.pad;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * g.stride + kx - g.pad;
            const bool inside = ih >= 0 && ih < H && iw >= 0 && iw < W;
            cols(row, static_cast<Eigen::Index>(oh) * Wo + ow) =
                inside ? x[(static_cast<int64_t>(c) * H + ih) * W + iw] : 0.0;
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds columns back into (C, H, W).
inline void col2im(const EMat& cols, int C, int H, int W, const ConvGeom& g, Scalar* x) {
  const int Ho = g.out_dim(H), Wo = g.out_dim(W);
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const int row = (c * g.kernel + ky) * g.kernel + kx;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * g.stride + ky - g.pad;
          if (ih < 0 || ih >= H) continue;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * g.stride + kx - g.pad;
            if (iw < 0 || iw >= W) continue;
            x[(static_cast<int64_t>(c) * H + ih) * W + iw] += cols(row, static_cast<Eigen::Index>(oh) * Wo + ow);
          }
        }
      }
    }
  }
}

}  // namespace detail

/// y = conv2d(x, w) + b.  w is (C_out, C_in, k, k), b is (C_out, 1, 1, 1).
inline NodeId conv2d(Tape& t, NodeId x, NodeId w, NodeId b, const ConvGeom& g) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& bv = t.value(b);
  const int N = xv.n(), Ci = xv.c(), H = xv.h(), W = xv.w();
  const int Co = wv.n();
  if (wv.c() != Ci || wv.h() != g.kernel || wv.w() != g.kernel) {
    throw ShapeError("conv2d: weight " + wv.shape_str() + " does not match input " + xv.shape_str());
  }
  if (bv.numel() != Co) throw ShapeError("conv2d: bias size mismatch");
  if (!g.valid_for(H) || !g.valid_for(W)) {
    throw ShapeError("conv2d: geometry collapses spatial dims for input " + xv.shape_str());
  }
  const int Ho = g.out_dim(H), Wo = g.out_dim(W);
  const int64_t K = static_cast<int64_t>(Ci) * g.kernel * g.kernel;
  const int64_t P = static_cast<int64_t>(Ho) * Wo;

  Tensor y(N, Co, Ho, Wo);
  EMapRowConst wm(wv.data(), Co, K);
  EMat cols;
  for (int n = 0; n < N; ++n) {
    detail::im2col(xv.data() + static_cast<int64_t>(n) * Ci * H * W, Ci, H, W, g, cols);
    EMapRow ym(y.data() + static_cast<int64_t>(n) * Co * P, Co, P);
    ym.noalias() = wm * cols;
    for (int co = 0; co < Co; ++co) ym.row(co).array() += bv[co];
  }

  return t.make(std::move(y), {x, w, b}, [x, w, b, g](Tape& tp, NodeId self) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    const Tensor& gy = tp.grad(self);
    const int N = xv.n(), Ci = xv.c(), H = xv.h(), W = xv.w();
    const int Co = wv.n();
    const int Ho = g.out_dim(H), Wo = g.out_dim(W);
    const int64_t K = static_cast<int64_t>(Ci) * g.kernel * g.kernel;
    const int64_t P = static_cast<int64_t>(Ho) * Wo;
    const bool need_x = tp.requires_grad(x);
    const bool need_w = tp.requires_grad(w);
    const bool need_b = tp.requires_grad(b);

    EMapRowConst wm(wv.data(), Co, K);
    EMat cols, dcols;
    for (int n = 0; n < N; ++n) {
      EMapRowConst gym(gy.data() + static_cast<int64_t>(n) * Co * P, Co, P);
      if (need_w) {
        detail::im2col(xv.data() + static_cast<int64_t>(n) * Ci * H * W, Ci, H, W, g, cols);
        EMapRow dwm(tp.grad(w).data(), Co, K);
        dwm.noalias() += gym * cols.transpose();
      }
      if (need_b) {
        Tensor& db = tp.grad(b);
        for (int co = 0; co < Co; ++co) db[co] += gym.row(co).sum();
      }
      if (need_x) {
        dcols.noalias() = wm.transpose() * gym;
        detail::col2im(dcols, Ci, H, W, g, tp.grad(x).data() + static_cast<int64_t>(n) * Ci * H * W);
      }
    }
  });
}

/// Fractional-stride (transposed) convolution: upsamples (N, C_in, H, W) to
/// (N, C_out, out_h, out_w).  w is (C_in, C_out, k, k), the adjoint of a
/// regular conv mapping the output back down to the input.
inline NodeId conv2d_transpose(Tape& t, NodeId x, NodeId w, NodeId b, const ConvGeom& g,
                               int out_h, int out_w) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& bv = t.value(b);
  const int N = xv.n(), Ci = xv.c(), H = xv.h(), W = xv.w();
  const int Co = wv.c();
  if (wv.n() != Ci || wv.h() != g.kernel || wv.w() != g.kernel) {
    throw ShapeError("conv2d_transpose: weight " + wv.shape_str() + " does not match input " + xv.shape_str());
  }
  if (bv.numel() != Co) throw ShapeError("conv2d_transpose: bias size mismatch");
  if (g.out_dim(out_h) != H || g.out_dim(out_w) != W) {
    throw ShapeError("conv2d_transpose: requested output size is inconsistent with stride geometry");
  }
  const int64_t K = static_cast<int64_t>(Co) * g.kernel * g.kernel;
  const int64_t P = static_cast<int64_t>(H) * W;

  Tensor y(N, Co, out_h, out_w);
  EMapRowConst wm(wv.data(), Ci, K);
  EMat dcols;
  for (int n = 0; n < N; ++n) {
    EMapRowConst xm(xv.data() + static_cast<int64_t>(n) * Ci * P, Ci, P);
    dcols.noalias() = wm.transpose() * xm;
    Scalar* yn = y.data() + static_cast<int64_t>(n) * Co * out_h * out_w;
    detail::col2im(dcols, Co, out_h, out_w, g, yn);
    for (int co = 0; co < Co; ++co) {
      Scalar* plane = yn + static_cast<int64_t>(co) * out_h * out_w;
      for (int64_t i = 0; i < static_cast<int64_t>(out_h) * out_w; ++i) plane[i] += bv[co];
    }
  }

  return t.make(std::move(y), {x, w, b}, [x, w, b, g, out_h, out_w](Tape& tp, NodeId self) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    const Tensor& gy = tp.grad(self);
    const int N = xv.n(), Ci = xv.c(), H = xv.h(), W = xv.w();
    const int Co = wv.c();
    const int64_t K = static_cast<int64_t>(Co) * g.kernel * g.kernel;
    const int64_t P = static_cast<int64_t>(H) * W;
    const bool need_x = tp.requires_grad(x);
    const bool need_w = tp.requires_grad(w);
    const bool need_b = tp.requires_grad(b);

    EMapRowConst wm(wv.data(), Ci, K);
    EMat gcols;
    for (int n = 0; n < N; ++n) {
      const Scalar* gyn = gy.data() + static_cast<int64_t>(n) * Co * out_h * out_w;
      detail::im2col(gyn, Co, out_h, out_w, g, gcols);
      if (need_x) {
        EMapRow dxm(tp.grad(x).data() + static_cast<int64_t>(n) * Ci * P, Ci, P);
        dxm.noalias() += wm * gcols;
      }
      if (need_w) {
        EMapRowConst xm(xv.data() + static_cast<int64_t>(n) * Ci * P, Ci, P);
        EMapRow dwm(tp.grad(w).data(), Ci, K);
        dwm.noalias() += xm * gcols.transpose();
      }
      if (need_b) {
        Tensor& db = tp.grad(b);
        for (int co = 0; co < Co; ++co) {
          Scalar s = 0;
          const Scalar* plane = gyn + static_cast<int64_t>(co) * out_h * out_w;
          for (int64_t i = 0; i < static_cast<int64_t>(out_h) * out_w; ++i) s += plane[i];
          db[co] += s;
        }
      }
    }
  });
}

/// Per-sample, per-channel normalization over the spatial extent with a
/// learned affine map.  gamma/beta are (1, C, 1, 1).
inline NodeId instance_norm(Tape& t, NodeId x, NodeId gamma, NodeId beta, Scalar eps = 1e-5) {
  const Tensor& xv = t.value(x);
  const Tensor& gv = t.value(gamma);
  const Tensor& bv = t.value(beta);
  const int N = xv.n(), C = xv.c(), H = xv.h(), W = xv.w();
  if (gv.numel() != C || bv.numel() != C) {
    throw ShapeError("instance_norm: affine params do not match channels of " + xv.shape_str());
  }
  const int64_t M = static_cast<int64_t>(H) * W;

  Tensor y(N, C, H, W);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const Scalar* xp = xv.data() + (static_cast<int64_t>(n) * C + c) * M;
      Scalar* yp = y.data() + (static_cast<int64_t>(n) * C + c) * M;
      Scalar mu = 0;
      for (int64_t i = 0; i < M; ++i) mu += xp[i];
      mu /= static_cast<Scalar>(M);
      Scalar var = 0;
      for (int64_t i = 0; i < M; ++i) var += (xp[i] - mu) * (xp[i] - mu);
      var /= static_cast<Scalar>(M);
      const Scalar istd = 1.0 / std::sqrt(var + eps);
      for (int64_t i = 0; i < M; ++i) yp[i] = gv[c] * (xp[i] - mu) * istd + bv[c];
    }
  }

  return t.make(std::move(y), {x, gamma, beta}, [x, gamma, beta, eps](Tape& tp, NodeId self) {
    const Tensor& xv = tp.value(x);
    const Tensor& gv = tp.value(gamma);
    const Tensor& gy = tp.grad(self);
    const int N = xv.n(), C = xv.c(), H = xv.h(), W = xv.w();
    const int64_t M = static_cast<int64_t>(H) * W;
    const bool need_x = tp.requires_grad(x);
    const bool need_g = tp.requires_grad(gamma);
    const bool need_b = tp.requires_grad(beta);

    std::vector<Scalar> xhat(static_cast<size_t>(M));
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const Scalar* xp = xv.data() + (static_cast<int64_t>(n) * C + c) * M;
        const Scalar* gp = gy.data() + (static_cast<int64_t>(n) * C + c) * M;
        Scalar mu = 0;
        for (int64_t i = 0; i < M; ++i) mu += xp[i];
        mu /= static_cast<Scalar>(M);
        Scalar var = 0;
        for (int64_t i = 0; i < M; ++i) var += (xp[i] - mu) * (xp[i] - mu);
        var /= static_cast<Scalar>(M);
        const Scalar istd = 1.0 / std::sqrt(var + eps);
        for (int64_t i = 0; i < M; ++i) xhat[static_cast<size_t>(i)] = (xp[i] - mu) * istd;

        if (need_g || need_b) {
          Scalar dg = 0, db = 0;
          for (int64_t i = 0; i < M; ++i) {
            dg += gp[i] * xhat[static_cast<size_t>(i)];
            db += gp[i];
          }
          if (need_g) tp.grad(gamma)[c] += dg;
          if (need_b) tp.grad(beta)[c] += db;
        }
        if (need_x) {
          // dxhat = gp * gamma; dx = istd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
          Scalar s1 = 0, s2 = 0;
          for (int64_t i = 0; i < M; ++i) {
            const Scalar dxh = gp[i] * gv[c];
            s1 += dxh;
            s2 += dxh * xhat[static_cast<size_t>(i)];
          }
          s1 /= static_cast<Scalar>(M);
          s2 /= static_cast<Scalar>(M);
          Scalar* dxp = tp.grad(x).data() + (static_cast<int64_t>(n) * C + c) * M;
          for (int64_t i = 0; i < M; ++i) {
            const Scalar dxh = gp[i] * gv[c];
            dxp[i] += istd * (dxh - s1 - xhat[static_cast<size_t>(i)] * s2);
          }
        }
      }
    }
  });
}

inline NodeId leaky_relu(Tape& t, NodeId x, Scalar slope) {
  const Tensor& xv = t.value(x);
  Tensor y = xv;
  for (int64_t i = 0; i < y.numel(); ++i) {
    if (y[i] < 0) y[i] *= slope;
  }
  return t.make(std::move(y), {x}, [x, slope](Tape& tp, NodeId self) {
    const Tensor& xv = tp.value(x);
    const Tensor& gy = tp.grad(self);
    Tensor& dx = tp.grad(x);
    for (int64_t i = 0; i < xv.numel(); ++i) dx[i] += gy[i] * (xv[i] > 0 ? 1.0 : slope);
  });
}

inline NodeId tanh_act(Tape& t, NodeId x) {
  const Tensor& xv = t.value(x);
  Tensor y = xv;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = std::tanh(y[i]);
  return t.make(std::move(y), {x}, [x](Tape& tp, NodeId self) {
    const Tensor& yv = tp.value(self);
    const Tensor& gy = tp.grad(self);
    Tensor& dx = tp.grad(x);
    for (int64_t i = 0; i < yv.numel(); ++i) dx[i] += gy[i] * (1.0 - yv[i] * yv[i]);
  });
}

inline NodeId add(Tape& t, NodeId a, NodeId b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "add");
  Tensor y = av;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += bv[i];
  return t.make(std::move(y), {a, b}, [a, b](Tape& tp, NodeId self) {
    const Tensor& gy = tp.grad(self);
    if (tp.requires_grad(a)) tp.accumulate(a, gy);
    if (tp.requires_grad(b)) tp.accumulate(b, gy);
  });
}

/// Appends one constant plane per class, tiled with the one-hot entry, to
/// the channel dimension.  Carries no gradient of its own.
inline NodeId append_label_channels(Tape& t, NodeId x, const std::vector<Scalar>& one_hot) {
  const Tensor& xv = t.value(x);
  const int N = xv.n(), C = xv.c(), H = xv.h(), W = xv.w();
  const int L = static_cast<int>(one_hot.size());
  const int64_t M = static_cast<int64_t>(H) * W;

  Tensor y(N, C + L, H, W);
  for (int n = 0; n < N; ++n) {
    const Scalar* src = xv.data() + static_cast<int64_t>(n) * C * M;
    Scalar* dst = y.data() + static_cast<int64_t>(n) * (C + L) * M;
    std::copy(src, src + C * M, dst);
    for (int l = 0; l < L; ++l) {
      Scalar* plane = dst + (static_cast<int64_t>(C) + l) * M;
      std::fill(plane, plane + M, one_hot[static_cast<size_t>(l)]);
    }
  }

  return t.make(std::move(y), {x}, [x, C, L, M](Tape& tp, NodeId self) {
    const Tensor& gy = tp.grad(self);
    Tensor& dx = tp.grad(x);
    const int N = dx.n();
    for (int n = 0; n < N; ++n) {
      const Scalar* src = gy.data() + static_cast<int64_t>(n) * (C + L) * M;
      Scalar* dst = dx.data() + static_cast<int64_t>(n) * C * M;
      for (int64_t i = 0; i < C * M; ++i) dst[i] += src[i];
    }
  });
}

/// (N, C, H, W) -> (N, C, 1, 1) spatial mean.
inline NodeId global_avg_pool(Tape& t, NodeId x) {
  const Tensor& xv = t.value(x);
  const int N = xv.n(), C = xv.c();
  const int64_t M = static_cast<int64_t>(xv.h()) * xv.w();
  Tensor y(N, C, 1, 1);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const Scalar* p = xv.data() + (static_cast<int64_t>(n) * C + c) * M;
      Scalar s = 0;
      for (int64_t i = 0; i < M; ++i) s += p[i];
      y.at(n, c, 0, 0) = s / static_cast<Scalar>(M);
    }
  }
  return t.make(std::move(y), {x}, [x, M](Tape& tp, NodeId self) {
    const Tensor& gy = tp.grad(self);
    Tensor& dx = tp.grad(x);
    const int N = dx.n(), C = dx.c();
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const Scalar g = gy.at(n, c, 0, 0) / static_cast<Scalar>(M);
        Scalar* p = dx.data() + (static_cast<int64_t>(n) * C + c) * M;
        for (int64_t i = 0; i < M; ++i) p[i] += g;
      }
    }
  });
}

/// Copies channels [c0, c1) of x.
inline NodeId slice_channels(Tape& t, NodeId x, int c0, int c1) {
  const Tensor& xv = t.value(x);
  const int N = xv.n(), C = xv.c(), H = xv.h(), W = xv.w();
  if (c0 < 0 || c1 > C || c0 >= c1) throw ShapeError("slice_channels: bad range");
  const int64_t M = static_cast<int64_t>(H) * W;
  Tensor y(N, c1 - c0, H, W);
  for (int n = 0; n < N; ++n) {
    const Scalar* src = xv.data() + (static_cast<int64_t>(n) * C + c0) * M;
    Scalar* dst = y.data() + static_cast<int64_t>(n) * (c1 - c0) * M;
    std::copy(src, src + static_cast<int64_t>(c1 - c0) * M, dst);
  }
  return t.make(std::move(y), {x}, [x, c0, c1, C, M](Tape& tp, NodeId self) {
    const Tensor& gy = tp.grad(self);
    Tensor& dx = tp.grad(x);
    const int N = dx.n();
    for (int n = 0; n < N; ++n) {
      const Scalar* src = gy.data() + static_cast<int64_t>(n) * (c1 - c0) * M;
      Scalar* dst = dx.data() + (static_cast<int64_t>(n) * C + c0) * M;
      for (int64_t i = 0; i < static_cast<int64_t>(c1 - c0) * M; ++i) dst[i] += src[i];
    }
  });
}

/// Scalar node: mean over all elements of (a - b)^2.
inline NodeId mean_sq_diff(Tape& t, NodeId a, NodeId b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "mean_sq_diff");
  const Scalar inv = 1.0 / static_cast<Scalar>(av.numel());
  Scalar s = 0;
  for (int64_t i = 0; i < av.numel(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  return t.make(Tensor::scalar(s * inv), {a, b}, [a, b, inv](Tape& tp, NodeId self) {
    const Scalar g = tp.grad(self)[0];
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    const bool na = tp.requires_grad(a), nb = tp.requires_grad(b);
    for (int64_t i = 0; i < av.numel(); ++i) {
      const Scalar d = 2.0 * inv * (av[i] - bv[i]) * g;
      if (na) tp.grad(a)[i] += d;
      if (nb) tp.grad(b)[i] -= d;
    }
  });
}

/// Scalar node: mean over all elements of |a - b|.
inline NodeId mean_abs_diff(Tape& t, NodeId a, NodeId b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "mean_abs_diff");
  const Scalar inv = 1.0 / static_cast<Scalar>(av.numel());
  Scalar s = 0;
  for (int64_t i = 0; i < av.numel(); ++i) s += std::abs(av[i] - bv[i]);
  return t.make(Tensor::scalar(s * inv), {a, b}, [a, b, inv](Tape& tp, NodeId self) {
    const Scalar g = tp.grad(self)[0];
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    const bool na = tp.requires_grad(a), nb = tp.requires_grad(b);
    for (int64_t i = 0; i < av.numel(); ++i) {
      const Scalar diff = av[i] - bv[i];
      const Scalar d = (diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0)) * inv * g;
      if (na) tp.grad(a)[i] += d;
      if (nb) tp.grad(b)[i] -= d;
    }
  });
}

/// Scalar node: mean softplus(sign * x).  With sign=-1 this is
/// -mean log sigmoid(x); with sign=+1 it is -mean log(1 - sigmoid(x)).
inline NodeId mean_softplus(Tape& t, NodeId x, Scalar sign) {
  const Tensor& xv = t.value(x);
  const Scalar inv = 1.0 / static_cast<Scalar>(xv.numel());
  Scalar s = 0;
  for (int64_t i = 0; i < xv.numel(); ++i) s += softplus(sign * xv[i]);
  return t.make(Tensor::scalar(s * inv), {x}, [x, sign, inv](Tape& tp, NodeId self) {
    const Scalar g = tp.grad(self)[0];
    const Tensor& xv = tp.value(x);
    Tensor& dx = tp.grad(x);
    for (int64_t i = 0; i < xv.numel(); ++i) dx[i] += sign * sigmoid(sign * xv[i]) * inv * g;
  });
}

/// Scalar node: mean cross-entropy of per-sample class logits (N, C, 1, 1)
/// against integer labels, computed through a stable log-sum-exp.
inline NodeId softmax_xent(Tape& t, NodeId logits, const std::vector<int>& labels) {
  const Tensor& lv = t.value(logits);
  const int N = lv.n(), C = lv.c();
  if (lv.h() != 1 || lv.w() != 1) throw ShapeError("softmax_xent: logits must be (N, C, 1, 1)");
  if (static_cast<int>(labels.size()) != N) throw ShapeError("softmax_xent: labels size mismatch");
  for (int lab : labels) {
    if (lab < 0 || lab >= C) throw ValueError("softmax_xent: label out of range");
  }
  const Scalar invN = 1.0 / static_cast<Scalar>(N);
  Scalar loss = 0;
  for (int n = 0; n < N; ++n) {
    const Scalar* row = lv.data() + static_cast<int64_t>(n) * C;
    Scalar m = row[0];
    for (int c = 1; c < C; ++c) m = std::max(m, row[c]);
    Scalar z = 0;
    for (int c = 0; c < C; ++c) z += std::exp(row[c] - m);
    loss += std::log(z) + m - row[labels[static_cast<size_t>(n)]];
  }
  return t.make(Tensor::scalar(loss * invN), {logits}, [logits, labels, invN](Tape& tp, NodeId self) {
    const Scalar g = tp.grad(self)[0];
    const Tensor& lv = tp.value(logits);
    Tensor& dl = tp.grad(logits);
    const int N = lv.n(), C = lv.c();
    std::vector<Scalar> p(static_cast<size_t>(C));
    for (int n = 0; n < N; ++n) {
      const Scalar* row = lv.data() + static_cast<int64_t>(n) * C;
      std::copy(row, row + C, p.begin());
      softmax_row(p.data(), C);
      Scalar* drow = dl.data() + static_cast<int64_t>(n) * C;
      for (int c = 0; c < C; ++c) {
        drow[c] += (p[static_cast<size_t>(c)] - (c == labels[static_cast<size_t>(n)] ? 1.0 : 0.0)) * invN * g;
      }
    }
  });
}

/// Scalar node: sum of w_i * term_i over scalar terms.
inline NodeId weighted_sum(Tape& t, const std::vector<NodeId>& terms, const std::vector<Scalar>& weights) {
  if (terms.size() != weights.size()) throw ShapeError("weighted_sum: size mismatch");
  Scalar s = 0;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (t.value(terms[i]).numel() != 1) throw ShapeError("weighted_sum: non-scalar term");
    s += weights[i] * t.value(terms[i])[0];
  }
  return t.make(Tensor::scalar(s), terms, [terms, weights](Tape& tp, NodeId self) {
    const Scalar g = tp.grad(self)[0];
    for (size_t i = 0; i < terms.size(); ++i) {
      if (tp.requires_grad(terms[i])) tp.grad(terms[i])[0] += weights[i] * g;
    }
  });
}

}  // namespace cdgan::ad
