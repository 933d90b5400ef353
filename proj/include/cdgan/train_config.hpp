#pragma once

#include <cmath>
#include <cstdint>

#include "cdgan/losses.hpp"

namespace cdgan {

/// Optimization and loop settings for the training run.
struct TrainConfig {
  Scalar learning_rate = 1e-4;
  Scalar adam_beta1 = 0.5;
  Scalar adam_beta2 = 0.999;
  int batch_per_domain = 1;
  int max_iterations = 2000;
  uint64_t seed = 0;
  LossWeights weights;
  int checkpoint_every = 500;
  int log_every = 10;
  DistanceNorm distance_norm = DistanceNorm::L1;

  bool operator==(const TrainConfig&) const = default;

  void validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
      throw ConfigError("train: learning_rate must be positive");
    }
    if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1) {
      throw ConfigError("train: adam betas must lie in [0, 1)");
    }
    if (batch_per_domain < 1) throw ConfigError("train: batch_per_domain must be positive");
    if (max_iterations < 0) throw ConfigError("train: max_iterations must be non-negative");
    if (checkpoint_every < 1) throw ConfigError("train: checkpoint_every must be positive");
    if (log_every < 1) throw ConfigError("train: log_every must be positive");
    weights.validate();
  }
};

}  // namespace cdgan
