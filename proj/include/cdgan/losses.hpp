#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cdgan/mathutil.hpp"
#include "cdgan/ops.hpp"

namespace cdgan {

enum class Phase { D, EG };

enum class DistanceNorm { L1, L2 };

/// Relative weights of the composite objective.
struct LossWeights {
  Scalar alpha0 = 10.0;  // reconstruction
  Scalar alpha1 = 0.1;   // latent consistency
  Scalar alpha2 = 0.1;   // classification
  Scalar alpha3 = 10.0;  // cycle consistency

  bool operator==(const LossWeights&) const = default;

  void validate() const {
    for (Scalar a : {alpha0, alpha1, alpha2, alpha3}) {
      if (!std::isfinite(a) || a < 0) {
        throw ConfigError("loss weights must be finite and non-negative");
      }
    }
  }
};

/// Per-term scalars for one update phase, plus their weighted composite.
struct LossBreakdown {
  Scalar gan_x = 0;
  Scalar gan_y = 0;
  Scalar rec = 0;
  Scalar lcl = 0;
  Scalar cls_real = 0;
  Scalar cls_fake = 0;
  Scalar cyc = 0;
  Scalar composite = 0;
  Phase phase = Phase::D;
};

inline constexpr Scalar kScoreClamp = 1e-7;

namespace detail {

inline Scalar checked_score(Scalar s, const char* who) {
  if (!(s > 0.0 && s < 1.0)) {
    throw ValueError(std::string(who) + ": score " + std::to_string(s) + " outside (0, 1)");
  }
  return clamp(s, kScoreClamp, 1.0 - kScoreClamp);
}

}  // namespace detail

/// Adversarial loss over realness scores in (0, 1). Phase D is the
/// discriminator's minimization form; phase EG is the non-saturating
/// generator form.
inline Scalar gan_loss(const std::vector<Scalar>& real_scores, const std::vector<Scalar>& fake_scores,
                       Phase phase) {
  if (phase == Phase::D) {
    if (real_scores.empty() || fake_scores.empty()) throw ValueError("gan_loss: empty score vector");
    Scalar lr = 0, lf = 0;
    for (Scalar s : real_scores) lr += std::log(detail::checked_score(s, "gan_loss"));
    for (Scalar s : fake_scores) lf += std::log(1.0 - detail::checked_score(s, "gan_loss"));
    return -(lr / static_cast<Scalar>(real_scores.size()) + lf / static_cast<Scalar>(fake_scores.size()));
  }
  if (fake_scores.empty()) throw ValueError("gan_loss: empty score vector");
  Scalar lf = 0;
  for (Scalar s : fake_scores) lf += std::log(detail::checked_score(s, "gan_loss"));
  return -lf / static_cast<Scalar>(fake_scores.size());
}

/// Mean squared difference over every element.
inline Scalar reconstruction_loss(const Tensor& x, const Tensor& x_rec) {
  require_same_shape(x, x_rec, "reconstruction_loss");
  Scalar s = 0;
  for (int64_t i = 0; i < x.numel(); ++i) s += (x[i] - x_rec[i]) * (x[i] - x_rec[i]);
  return s / static_cast<Scalar>(x.numel());
}

namespace detail {

inline Scalar mean_distance(const Tensor& a, const Tensor& b, DistanceNorm norm, const char* who) {
  require_same_shape(a, b, who);
  Scalar s = 0;
  if (norm == DistanceNorm::L1) {
    for (int64_t i = 0; i < a.numel(); ++i) s += std::abs(a[i] - b[i]);
  } else {
    for (int64_t i = 0; i < a.numel(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return s / static_cast<Scalar>(a.numel());
}

}  // namespace detail

/// Mean distance between a latent code and its round-trip re-encoding.
inline Scalar latent_consistency_loss(const Tensor& z, const Tensor& z_roundtrip,
                                      DistanceNorm norm = DistanceNorm::L1) {
  return detail::mean_distance(z, z_roundtrip, norm, "latent_consistency_loss");
}

/// Mean distance between an image and its two-hop cycle reconstruction.
inline Scalar cycle_consistency_loss(const Tensor& x, const Tensor& x_cycled,
                                     DistanceNorm norm = DistanceNorm::L1) {
  return detail::mean_distance(x, x_cycled, norm, "cycle_consistency_loss");
}

/// Mean negative log posterior of the true domain label. `posteriors` is
/// (N, n_domains, 1, 1) with rows on the simplex.
inline Scalar classification_loss(const Tensor& posteriors, const std::vector<int>& labels) {
  const int N = posteriors.n(), C = posteriors.c();
  if (posteriors.h() != 1 || posteriors.w() != 1) {
    throw ShapeError("classification_loss: posteriors must be (N, n_domains, 1, 1)");
  }
  if (static_cast<int>(labels.size()) != N) {
    throw ShapeError("classification_loss: labels size mismatch");
  }
  for (int64_t i = 0; i < posteriors.numel(); ++i) {
    if (!(posteriors[i] >= 0.0)) {
      throw ValueError("classification_loss: posterior entry " + std::to_string(posteriors[i]) +
                       " is negative or non-finite");
    }
  }
  Scalar s = 0;
  for (int n = 0; n < N; ++n) {
    const int lab = labels[static_cast<size_t>(n)];
    if (lab < 0 || lab >= C) throw ValueError("classification_loss: label out of range");
    s -= std::log(clamp(posteriors.at(n, lab, 0, 0), kScoreClamp, 1.0));
  }
  return s / static_cast<Scalar>(N);
}

/// Weighted composite objective. The phase on `terms` selects which pieces
/// participate: the discriminator phase sees its GAN terms plus weighted
/// real-image classification; the encoder/generator phase sees its GAN
/// terms plus weighted reconstruction, latent consistency, fake-image
/// classification, and cycle terms.
inline Scalar composite_loss(const LossBreakdown& terms, const LossWeights& w) {
  if (terms.phase == Phase::D) {
    return terms.gan_x + terms.gan_y + w.alpha2 * terms.cls_real;
  }
  return terms.gan_x + terms.gan_y + w.alpha0 * terms.rec + w.alpha1 * terms.lcl +
         w.alpha2 * terms.cls_fake + w.alpha3 * terms.cyc;
}

/// Tape-graph builders used during training. These work in logit space,
/// which is algebraically identical to the score-space forms above but
/// avoids saturating sigmoids inside the backward pass.
namespace graph {

/// Discriminator adversarial term: -mean log sigmoid(real) - mean log(1 - sigmoid(fake)).
inline ad::NodeId gan_d(ad::Tape& t, ad::NodeId real_logit, ad::NodeId fake_logit) {
  return ad::weighted_sum(
      t, {ad::mean_softplus(t, real_logit, -1.0), ad::mean_softplus(t, fake_logit, 1.0)}, {1.0, 1.0});
}

/// Non-saturating generator adversarial term: -mean log sigmoid(fake).
inline ad::NodeId gan_eg(ad::Tape& t, ad::NodeId fake_logit) {
  return ad::mean_softplus(t, fake_logit, -1.0);
}

inline ad::NodeId distance(ad::Tape& t, ad::NodeId a, ad::NodeId b, DistanceNorm norm) {
  return norm == DistanceNorm::L1 ? ad::mean_abs_diff(t, a, b) : ad::mean_sq_diff(t, a, b);
}

/// Mean negative log posterior, fed with pre-softmax class logits.
inline ad::NodeId classification(ad::Tape& t, ad::NodeId class_logits, const std::vector<int>& labels) {
  return ad::softmax_xent(t, class_logits, labels);
}

}  // namespace graph

}  // namespace cdgan
