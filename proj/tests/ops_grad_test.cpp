#include "cdgan/ops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "test_util.hpp"

namespace cdgan {
namespace {

using ad::ConvGeom;
using ad::NodeId;
using ad::Tape;
using testutil::check_gradients;
using testutil::random_param;

Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, const ConvGeom& g) {
  const int N = x.n(), Ci = x.c(), H = x.h(), W = x.w();
  const int Co = w.n(), Ho = g.out_dim(H), Wo = g.out_dim(W);
  Tensor y(N, Co, Ho, Wo);
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          Scalar acc = b[co];
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int ih = oh * g.stride + ky - g.pad;
                const int iw = ow * g.stride + kx - g.pad;
                if (ih >= 0 && ih < H && iw >= 0 && iw < W) {
                  acc += w.at(co, ci, ky, kx) * x.at(n, ci, ih, iw);
                }
              }
          y.at(n, co, oh, ow) = acc;
        }
  return y;
}

Tensor naive_conv_transpose(const Tensor& x, const Tensor& w, const Tensor& b, const ConvGeom& g,
                            int out_h, int out_w) {
  const int N = x.n(), Ci = x.c(), H = x.h(), W = x.w();
  const int Co = w.c();
  Tensor y(N, Co, out_h, out_w);
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int i = 0; i < out_h * out_w; ++i) y.at(n, co, i / out_w, i % out_w) = b[co];
  for (int n = 0; n < N; ++n)
    for (int ci = 0; ci < Ci; ++ci)
      for (int oh = 0; oh < H; ++oh)
        for (int ow = 0; ow < W; ++ow)
          for (int co = 0; co < Co; ++co)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int ih = oh * g.stride + ky - g.pad;
                const int iw = ow * g.stride + kx - g.pad;
                if (ih >= 0 && ih < out_h && iw >= 0 && iw < out_w) {
                  y.at(n, co, ih, iw) += w.at(ci, co, ky, kx) * x.at(n, ci, oh, ow);
                }
              }
  return y;
}

TEST(ConvGeom, OutputDims) {
  ConvGeom half{3, 2, 1};
  EXPECT_EQ(half.out_dim(8), 4);
  EXPECT_EQ(half.out_dim(9), 5);
  EXPECT_EQ(half.out_dim(32), 16);
  ConvGeom keep{7, 1, 3};
  EXPECT_EQ(keep.out_dim(8), 8);
  EXPECT_EQ(keep.out_dim(32), 32);
  ConvGeom shrink{2, 1, 0};
  EXPECT_EQ(shrink.out_dim(8), 7);
  EXPECT_TRUE(half.valid_for(2));
  EXPECT_FALSE(shrink.valid_for(1));
}

TEST(Conv2d, MatchesNaiveStrided) {
  Rng rng(10);
  auto x = random_param(rng, 2, 3, 5, 6);
  auto w = random_param(rng, 4, 3, 3, 3);
  auto b = random_param(rng, 1, 4, 1, 1);
  ConvGeom g{3, 2, 1};
  Tape t;
  NodeId y = ad::conv2d(t, t.leaf(x, false), t.leaf(w, false), t.leaf(b, false), g);
  Tensor ref = naive_conv(*x, *w, *b, g);
  ASSERT_TRUE(t.value(y).same_shape(ref));
  EXPECT_LT(Tensor::max_abs_diff(t.value(y), ref), 1e-12);
}

TEST(Conv2d, MatchesNaiveWideKernel) {
  Rng rng(11);
  auto x = random_param(rng, 1, 2, 8, 8);
  auto w = random_param(rng, 3, 2, 7, 7);
  auto b = random_param(rng, 1, 3, 1, 1);
  ConvGeom g{7, 1, 3};
  Tape t;
  NodeId y = ad::conv2d(t, t.leaf(x, false), t.leaf(w, false), t.leaf(b, false), g);
  Tensor ref = naive_conv(*x, *w, *b, g);
  EXPECT_EQ(t.value(y).h(), 8);
  EXPECT_LT(Tensor::max_abs_diff(t.value(y), ref), 1e-12);
}

TEST(Conv2d, RejectsBadShapes) {
  Tape t;
  auto x = std::make_shared<Tensor>(1, 3, 8, 8);
  auto w = std::make_shared<Tensor>(4, 2, 3, 3);  // channel mismatch
  auto b = std::make_shared<Tensor>(1, 4, 1, 1);
  EXPECT_THROW(ad::conv2d(t, t.leaf(x, false), t.leaf(w, false), t.leaf(b, false), ConvGeom{3, 1, 1}),
               ShapeError);
}

TEST(Conv2d, Gradcheck) {
  Rng rng(12);
  auto x = random_param(rng, 1, 2, 4, 4);
  auto w = random_param(rng, 3, 2, 3, 3, 0.5);
  auto b = random_param(rng, 1, 3, 1, 1, 0.1);
  ConvGeom g{3, 2, 1};
  check_gradients({x, w, b}, [&](Tape& t) {
    NodeId y = ad::conv2d(t, t.leaf(x, true), t.leaf(w, true), t.leaf(b, true), g);
    return ad::mean_sq_diff(t, y, t.constant(Tensor(1, 3, 2, 2)));
  });
}

TEST(ConvTranspose, MatchesNaive) {
  Rng rng(13);
  auto x = random_param(rng, 2, 3, 4, 4);
  auto w = random_param(rng, 3, 2, 3, 3);
  auto b = random_param(rng, 1, 2, 1, 1);
  ConvGeom g{3, 2, 1};
  Tape t;
  NodeId y = ad::conv2d_transpose(t, t.leaf(x, false), t.leaf(w, false), t.leaf(b, false), g, 8, 8);
  Tensor ref = naive_conv_transpose(*x, *w, *b, g, 8, 8);
  ASSERT_TRUE(t.value(y).same_shape(ref));
  EXPECT_LT(Tensor::max_abs_diff(t.value(y), ref), 1e-12);
}

// The upsampling conv must be the exact adjoint of the downsampling conv
// with the same raw weight block: <conv(u), t> == <u, conv_transpose(t)>.
TEST(ConvTranspose, AdjointOfConv) {
  Rng rng(14);
  const ConvGeom g{3, 2, 1};
  auto u = random_param(rng, 1, 2, 8, 8);
  auto t_in = random_param(rng, 1, 4, 4, 4);
  auto w = random_param(rng, 4, 2, 3, 3);
  auto zb_down = std::make_shared<Tensor>(1, 4, 1, 1);
  auto zb_up = std::make_shared<Tensor>(1, 2, 1, 1);

  Tape tp;
  const Tensor& down = tp.value(ad::conv2d(tp, tp.leaf(u, false), tp.leaf(w, false), tp.leaf(zb_down, false), g));
  const Tensor& up = tp.value(
      ad::conv2d_transpose(tp, tp.leaf(t_in, false), tp.leaf(w, false), tp.leaf(zb_up, false), g, 8, 8));

  Scalar lhs = 0, rhs = 0;
  for (int64_t i = 0; i < down.numel(); ++i) lhs += down[i] * (*t_in)[i];
  for (int64_t i = 0; i < up.numel(); ++i) rhs += up[i] * (*u)[i];
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
}

TEST(ConvTranspose, RejectsInconsistentOutputSize) {
  Tape t;
  auto x = std::make_shared<Tensor>(1, 3, 4, 4);
  auto w = std::make_shared<Tensor>(3, 2, 3, 3);
  auto b = std::make_shared<Tensor>(1, 2, 1, 1);
  EXPECT_THROW(ad::conv2d_transpose(t, t.leaf(x, false), t.leaf(w, false), t.leaf(b, false),
                                    ConvGeom{3, 2, 1}, 16, 16),
               ShapeError);
}

TEST(ConvTranspose, Gradcheck) {
  Rng rng(15);
  auto x = random_param(rng, 1, 3, 3, 3);
  auto w = random_param(rng, 3, 2, 3, 3, 0.5);
  auto b = random_param(rng, 1, 2, 1, 1, 0.1);
  ConvGeom g{3, 2, 1};
  check_gradients({x, w, b}, [&](Tape& t) {
    NodeId y = ad::conv2d_transpose(t, t.leaf(x, true), t.leaf(w, true), t.leaf(b, true), g, 6, 6);
    return ad::mean_sq_diff(t, y, t.constant(Tensor(1, 2, 6, 6)));
  });
}

TEST(InstanceNorm, NormalizesPerChannelInstance) {
  Rng rng(16);
  auto x = random_param(rng, 2, 3, 6, 6, 2.0);
  for (int64_t i = 0; i < x->numel(); ++i) (*x)[i] += 5.0;  // offset to make the shift visible
  auto gamma = std::make_shared<Tensor>(1, 3, 1, 1);
  auto beta = std::make_shared<Tensor>(1, 3, 1, 1);
  gamma->fill(1.5);
  (*beta)[0] = -1.0;
  (*beta)[1] = 0.0;
  (*beta)[2] = 2.0;

  Tape t;
  const Tensor& y = t.value(ad::instance_norm(t, t.leaf(x, false), t.leaf(gamma, false), t.leaf(beta, false)));
  const int64_t M = 36;
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      Scalar mean = 0, var = 0;
      for (int h = 0; h < 6; ++h)
        for (int w = 0; w < 6; ++w) mean += y.at(n, c, h, w);
      mean /= M;
      for (int h = 0; h < 6; ++h)
        for (int w = 0; w < 6; ++w) var += (y.at(n, c, h, w) - mean) * (y.at(n, c, h, w) - mean);
      var /= M;
      EXPECT_NEAR(mean, (*beta)[c], 1e-9);
      EXPECT_NEAR(std::sqrt(var), 1.5, 1e-2);
    }
  }
}

TEST(InstanceNorm, Gradcheck) {
  Rng rng(17);
  auto x = random_param(rng, 2, 2, 3, 3);
  auto gamma = random_param(rng, 1, 2, 1, 1, 0.3);
  auto beta = random_param(rng, 1, 2, 1, 1, 0.3);
  for (int64_t i = 0; i < gamma->numel(); ++i) (*gamma)[i] += 1.0;
  auto target = random_param(rng, 2, 2, 3, 3);
  check_gradients({x, gamma, beta}, [&](Tape& t) {
    NodeId y = ad::instance_norm(t, t.leaf(x, true), t.leaf(gamma, true), t.leaf(beta, true));
    return ad::mean_sq_diff(t, y, t.constant(*target));
  }, 1e-5, 1e-5);
}

TEST(LeakyRelu, ForwardValues) {
  auto x = std::make_shared<Tensor>(1, 1, 1, 4);
  (*x)[0] = 2.0; (*x)[1] = -2.0; (*x)[2] = 0.0; (*x)[3] = -0.5;
  Tape t;
  const Tensor& y = t.value(ad::leaky_relu(t, t.leaf(x, false), 0.2));
  EXPECT_DOUBLE_EQ(y[0], 2.0);
  EXPECT_DOUBLE_EQ(y[1], -0.4);
  EXPECT_DOUBLE_EQ(y[2], 0.0);
  EXPECT_DOUBLE_EQ(y[3], -0.1);
}

TEST(LeakyRelu, Gradcheck) {
  Rng rng(18);
  auto x = random_param(rng, 1, 2, 3, 3);
  auto target = random_param(rng, 1, 2, 3, 3);
  check_gradients({x}, [&](Tape& t) {
    NodeId y = ad::leaky_relu(t, t.leaf(x, true), 0.2);
    return ad::mean_sq_diff(t, y, t.constant(*target));
  });
}

TEST(TanhAct, ForwardAndGradcheck) {
  Rng rng(19);
  auto x = random_param(rng, 1, 2, 3, 3);
  Tape t;
  const Tensor& y = t.value(ad::tanh_act(t, t.leaf(x, false)));
  for (int64_t i = 0; i < x->numel(); ++i) EXPECT_DOUBLE_EQ(y[i], std::tanh((*x)[i]));
  auto target = random_param(rng, 1, 2, 3, 3);
  check_gradients({x}, [&](Tape& tp) {
    return ad::mean_sq_diff(tp, ad::tanh_act(tp, tp.leaf(x, true)), tp.constant(*target));
  });
}

TEST(Add, ValuesAndRepeatedInput) {
  Rng rng(20);
  auto a = random_param(rng, 1, 2, 2, 2);
  auto b = random_param(rng, 1, 2, 2, 2);
  Tape t;
  NodeId s = ad::add(t, t.leaf(a, false), t.leaf(b, false));
  for (int64_t i = 0; i < a->numel(); ++i) EXPECT_DOUBLE_EQ(t.value(s)[i], (*a)[i] + (*b)[i]);

  // x + x through the same leaf node must double the gradient.
  auto target = random_param(rng, 1, 2, 2, 2);
  check_gradients({a}, [&](Tape& tp) {
    NodeId x = tp.leaf(a, true);
    return ad::mean_sq_diff(tp, ad::add(tp, x, x), tp.constant(*target));
  });
}

TEST(AppendLabelChannels, ForwardAndGradRouting) {
  Rng rng(21);
  auto x = random_param(rng, 2, 2, 3, 3);
  std::vector<Scalar> one_hot{0.0, 1.0, 0.0};
  Tape t;
  const Tensor& y = t.value(ad::append_label_channels(t, t.leaf(x, false), one_hot));
  ASSERT_EQ(y.c(), 5);
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 2; ++c)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 3; ++w) EXPECT_DOUBLE_EQ(y.at(n, c, h, w), x->at(n, c, h, w));
    for (int l = 0; l < 3; ++l)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 3; ++w) EXPECT_DOUBLE_EQ(y.at(n, 2 + l, h, w), one_hot[static_cast<size_t>(l)]);
  }

  auto target = random_param(rng, 2, 5, 3, 3);
  check_gradients({x}, [&](Tape& tp) {
    NodeId yy = ad::append_label_channels(tp, tp.leaf(x, true), one_hot);
    return ad::mean_sq_diff(tp, yy, tp.constant(*target));
  });
}

TEST(GlobalAvgPool, ForwardAndGradcheck) {
  Rng rng(22);
  auto x = random_param(rng, 2, 3, 4, 4);
  Tape t;
  const Tensor& y = t.value(ad::global_avg_pool(t, t.leaf(x, false)));
  ASSERT_EQ(y.h(), 1);
  ASSERT_EQ(y.w(), 1);
  Scalar manual = 0;
  for (int h = 0; h < 4; ++h)
    for (int w = 0; w < 4; ++w) manual += x->at(1, 2, h, w);
  EXPECT_NEAR(y.at(1, 2, 0, 0), manual / 16.0, 1e-12);

  auto target = random_param(rng, 2, 3, 1, 1);
  check_gradients({x}, [&](Tape& tp) {
    return ad::mean_sq_diff(tp, ad::global_avg_pool(tp, tp.leaf(x, true)), tp.constant(*target));
  });
}

TEST(SliceChannels, ForwardAndGradcheck) {
  Rng rng(23);
  auto x = random_param(rng, 2, 5, 2, 2);
  Tape t;
  const Tensor& y = t.value(ad::slice_channels(t, t.leaf(x, false), 1, 4));
  ASSERT_EQ(y.c(), 3);
  EXPECT_DOUBLE_EQ(y.at(1, 0, 1, 1), x->at(1, 1, 1, 1));
  EXPECT_DOUBLE_EQ(y.at(0, 2, 0, 0), x->at(0, 3, 0, 0));
  EXPECT_THROW(ad::slice_channels(t, t.leaf(x, false), 3, 3), ShapeError);
  EXPECT_THROW(ad::slice_channels(t, t.leaf(x, false), 0, 6), ShapeError);

  auto target = random_param(rng, 2, 3, 2, 2);
  check_gradients({x}, [&](Tape& tp) {
    return ad::mean_sq_diff(tp, ad::slice_channels(tp, tp.leaf(x, true), 1, 4), tp.constant(*target));
  });
}

TEST(MeanSqDiff, ValueAndGradcheck) {
  auto a = std::make_shared<Tensor>(1, 1, 1, 2);
  (*a)[0] = 1.0; (*a)[1] = 2.0;
  Tape t;
  NodeId v = ad::mean_sq_diff(t, t.leaf(a, false), t.constant(Tensor(1, 1, 1, 2)));
  EXPECT_DOUBLE_EQ(t.value(v)[0], 2.5);

  Rng rng(24);
  auto x = random_param(rng, 1, 2, 3, 3);
  auto y = random_param(rng, 1, 2, 3, 3);
  check_gradients({x, y}, [&](Tape& tp) {
    return ad::mean_sq_diff(tp, tp.leaf(x, true), tp.leaf(y, true));
  });
}

TEST(MeanAbsDiff, ValueAndGradcheck) {
  auto a = std::make_shared<Tensor>(1, 1, 1, 2);
  (*a)[0] = 1.0; (*a)[1] = -2.0;
  Tape t;
  NodeId v = ad::mean_abs_diff(t, t.leaf(a, false), t.constant(Tensor(1, 1, 1, 2)));
  EXPECT_DOUBLE_EQ(t.value(v)[0], 1.5);

  Rng rng(25);
  auto x = random_param(rng, 1, 2, 3, 3);
  auto y = random_param(rng, 1, 2, 3, 3);
  check_gradients({x, y}, [&](Tape& tp) {
    return ad::mean_abs_diff(tp, tp.leaf(x, true), tp.leaf(y, true));
  });
}

TEST(MeanSoftplus, ValueMatchesLogistic) {
  auto x = std::make_shared<Tensor>(1, 1, 1, 1);
  (*x)[0] = 0.0;
  Tape t;
  NodeId v = ad::mean_softplus(t, t.leaf(x, false), -1.0);
  EXPECT_NEAR(t.value(v)[0], std::log(2.0), 1e-15);  // -log sigmoid(0)

  (*x)[0] = 3.0;
  Tape t2;
  NodeId v2 = ad::mean_softplus(t2, t2.leaf(x, false), -1.0);
  EXPECT_NEAR(t2.value(v2)[0], -std::log(1.0 / (1.0 + std::exp(-3.0))), 1e-12);
  NodeId v3 = ad::mean_softplus(t2, t2.leaf(x, false), 1.0);
  EXPECT_NEAR(t2.value(v3)[0], -std::log(1.0 - 1.0 / (1.0 + std::exp(-3.0))), 1e-12);
}

TEST(MeanSoftplus, GradcheckBothSigns) {
  Rng rng(26);
  auto x = random_param(rng, 1, 2, 2, 2);
  check_gradients({x}, [&](Tape& tp) { return ad::mean_softplus(tp, tp.leaf(x, true), -1.0); });
  check_gradients({x}, [&](Tape& tp) { return ad::mean_softplus(tp, tp.leaf(x, true), 1.0); });
}

TEST(SoftmaxXent, UniformLogitsGiveLogC) {
  auto logits = std::make_shared<Tensor>(2, 4, 1, 1);
  logits->fill(0.7);  // any constant row is a uniform distribution
  Tape t;
  NodeId v = ad::softmax_xent(t, t.leaf(logits, false), {1, 3});
  EXPECT_NEAR(t.value(v)[0], std::log(4.0), 1e-12);
}

TEST(SoftmaxXent, ShiftInvariantAndGradcheck) {
  Rng rng(27);
  auto logits = random_param(rng, 3, 5, 1, 1);
  std::vector<int> labels{0, 2, 4};
  Tape t;
  const Scalar base = t.value(ad::softmax_xent(t, t.leaf(logits, false), labels))[0];
  auto shifted = std::make_shared<Tensor>(*logits);
  for (int64_t i = 0; i < shifted->numel(); ++i) (*shifted)[i] += 100.0;
  Tape t2;
  const Scalar moved = t2.value(ad::softmax_xent(t2, t2.leaf(shifted, false), labels))[0];
  EXPECT_NEAR(base, moved, 1e-10);

  check_gradients({logits}, [&](Tape& tp) {
    return ad::softmax_xent(tp, tp.leaf(logits, true), labels);
  });
}

TEST(SoftmaxXent, RejectsBadLabels) {
  auto logits = std::make_shared<Tensor>(2, 3, 1, 1);
  Tape t;
  EXPECT_THROW(ad::softmax_xent(t, t.leaf(logits, false), {0, 3}), ValueError);
  EXPECT_THROW(ad::softmax_xent(t, t.leaf(logits, false), {0}), ShapeError);
}

TEST(WeightedSum, ValueAndGradcheck) {
  auto a = std::make_shared<Tensor>(1, 1, 1, 1);
  auto b = std::make_shared<Tensor>(1, 1, 1, 1);
  (*a)[0] = 2.0;
  (*b)[0] = -3.0;
  Tape t;
  NodeId v = ad::weighted_sum(t, {t.leaf(a, false), t.leaf(b, false)}, {10.0, 0.1});
  EXPECT_DOUBLE_EQ(t.value(v)[0], 19.7);

  Rng rng(28);
  auto x = random_param(rng, 1, 1, 2, 2);
  check_gradients({x}, [&](Tape& tp) {
    NodeId leaf = tp.leaf(x, true);
    NodeId t1 = ad::mean_softplus(tp, leaf, -1.0);
    NodeId t2 = ad::mean_sq_diff(tp, leaf, tp.constant(Tensor(1, 1, 2, 2)));
    return ad::weighted_sum(tp, {t1, t2}, {0.5, 2.0});
  });
}

// A parameter registered as a leaf twice (two tower roles) must receive the
// sum of the gradients from both uses, matching a finite difference on the
// single shared storage.
TEST(Tape, TiedLeafAccumulatesAcrossUses) {
  Rng rng(29);
  auto shared = random_param(rng, 1, 1, 2, 2);
  auto target = random_param(rng, 1, 1, 2, 2);
  check_gradients({shared}, [&](Tape& tp) {
    NodeId use1 = tp.leaf(shared, true);
    NodeId use2 = tp.leaf(shared, true);  // same node comes back
    NodeId branch1 = ad::mean_sq_diff(tp, ad::tanh_act(tp, use1), tp.constant(*target));
    NodeId branch2 = ad::mean_softplus(tp, use2, -1.0);
    return ad::weighted_sum(tp, {branch1, branch2}, {1.0, 1.0});
  });
}

TEST(Tape, FrozenLeafGetsNoGradient) {
  Rng rng(30);
  auto trainable = random_param(rng, 1, 1, 2, 2);
  auto frozen = random_param(rng, 1, 1, 2, 2);
  Tape t;
  NodeId a = t.leaf(trainable, true);
  NodeId f = t.leaf(frozen, false);
  NodeId loss = ad::mean_sq_diff(t, ad::add(t, a, f), t.constant(Tensor(1, 1, 2, 2)));
  t.backward(loss);
  EXPECT_NE(t.leaf_grad(trainable), nullptr);
  EXPECT_EQ(t.leaf_grad(frozen), nullptr);
}

TEST(Tape, FullyFrozenGraphSkipsBackward) {
  auto frozen = std::make_shared<Tensor>(1, 1, 2, 2);
  frozen->fill(0.3);
  Tape t;
  NodeId loss = ad::mean_softplus(t, ad::tanh_act(t, t.leaf(frozen, false)), -1.0);
  EXPECT_FALSE(t.requires_grad(loss));
  t.backward(loss);  // must not blow up
  EXPECT_EQ(t.leaf_grad(frozen), nullptr);
}

// Gradients still flow *through* frozen ops to trainable inputs: the
// generator phase backpropagates through a frozen discriminator.
TEST(Tape, GradFlowsThroughFrozenParamsToInput) {
  Rng rng(31);
  auto input_param = random_param(rng, 1, 2, 4, 4);
  auto frozen_w = random_param(rng, 3, 2, 3, 3, 0.5);
  auto frozen_b = random_param(rng, 1, 3, 1, 1, 0.1);
  ConvGeom g{3, 2, 1};
  Tape probe;
  {
    NodeId y = ad::conv2d(probe, probe.leaf(input_param, true), probe.leaf(frozen_w, false),
                          probe.leaf(frozen_b, false), g);
    probe.backward(ad::mean_softplus(probe, y, -1.0));
    EXPECT_NE(probe.leaf_grad(input_param), nullptr);
    EXPECT_EQ(probe.leaf_grad(frozen_w), nullptr);
    EXPECT_EQ(probe.leaf_grad(frozen_b), nullptr);
  }
  check_gradients({input_param}, [&](Tape& tp) {
    NodeId y = ad::conv2d(tp, tp.leaf(input_param, true), tp.leaf(frozen_w, false),
                          tp.leaf(frozen_b, false), g);
    return ad::mean_softplus(tp, y, -1.0);
  });
}

}  // namespace
}  // namespace cdgan
