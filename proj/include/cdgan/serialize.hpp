#pragma once

#include <json.hpp>

#include "cdgan/model.hpp"
#include "cdgan/train_config.hpp"

namespace cdgan {

using nlohmann::json;

/// JSON conversions for the config structs. Reading merges present keys
/// onto defaults, so partial documents are valid.

inline void to_json(json& j, const ModelConfig& c) {
  j = json{{"n_domains", c.n_domains},
           {"image_size", c.image_size},
           {"image_channels", c.image_channels},
           {"base_channels", c.base_channels},
           {"n_residual_blocks", c.n_residual_blocks},
           {"n_conv_layers", c.n_conv_layers},
           {"disc_depth", c.disc_depth},
           {"share_lowest", c.share_lowest},
           {"share_highest", c.share_highest},
           {"n_shared_layers", c.n_shared_layers},
           {"disc_instance_norm", c.disc_instance_norm},
           {"leaky_slope", c.leaky_slope}};
}

inline void from_json(const json& j, ModelConfig& c) {
  c.n_domains = j.value("n_domains", c.n_domains);
  c.image_size = j.value("image_size", c.image_size);
  c.image_channels = j.value("image_channels", c.image_channels);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.n_residual_blocks = j.value("n_residual_blocks", c.n_residual_blocks);
  c.n_conv_layers = j.value("n_conv_layers", c.n_conv_layers);
  c.disc_depth = j.value("disc_depth", c.disc_depth);
  c.share_lowest = j.value("share_lowest", c.share_lowest);
  c.share_highest = j.value("share_highest", c.share_highest);
  c.n_shared_layers = j.value("n_shared_layers", c.n_shared_layers);
  c.disc_instance_norm = j.value("disc_instance_norm", c.disc_instance_norm);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
}

inline void to_json(json& j, const LossWeights& w) {
  j = json{{"alpha0", w.alpha0}, {"alpha1", w.alpha1}, {"alpha2", w.alpha2}, {"alpha3", w.alpha3}};
}

inline void from_json(const json& j, LossWeights& w) {
  w.alpha0 = j.value("alpha0", w.alpha0);
  w.alpha1 = j.value("alpha1", w.alpha1);
  w.alpha2 = j.value("alpha2", w.alpha2);
  w.alpha3 = j.value("alpha3", w.alpha3);
}

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"batch_per_domain", c.batch_per_domain},
           {"max_iterations", c.max_iterations},
           {"seed", c.seed},
           {"weights", c.weights},
           {"checkpoint_every", c.checkpoint_every},
           {"log_every", c.log_every},
           {"distance_norm", c.distance_norm == DistanceNorm::L1 ? "l1" : "l2"}};
}

inline void from_json(const json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.batch_per_domain = j.value("batch_per_domain", c.batch_per_domain);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.seed = j.value("seed", c.seed);
  if (j.contains("weights")) c.weights = j.at("weights").get<LossWeights>();
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.log_every = j.value("log_every", c.log_every);
  if (j.contains("distance_norm")) {
    const std::string s = j.at("distance_norm").get<std::string>();
    if (s == "l1") {
      c.distance_norm = DistanceNorm::L1;
    } else if (s == "l2") {
      c.distance_norm = DistanceNorm::L2;
    } else {
      throw ConfigError("train: distance_norm must be l1 or l2, got " + s);
    }
  }
}

inline void to_json(json& j, const TiedGroup& g) {
  j = json::array({g.network_a, g.layer_a, g.network_b, g.layer_b});
}

inline void from_json(const json& j, TiedGroup& g) {
  g.network_a = j.at(0).get<std::string>();
  g.layer_a = j.at(1).get<int>();
  g.network_b = j.at(2).get<std::string>();
  g.layer_b = j.at(3).get<int>();
}

}  // namespace cdgan
