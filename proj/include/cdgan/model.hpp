#pragma once

#include <array>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cdgan/mathutil.hpp"
#include "cdgan/ops.hpp"
#include "cdgan/rng.hpp"

namespace cdgan {

/// Hyper-parameters fixing the shapes of all six networks.
struct ModelConfig {
  int n_domains = 4;
  int image_size = 256;
  int image_channels = 3;
  int base_channels = 64;
  int n_residual_blocks = 4;
  int n_conv_layers = 3;
  int disc_depth = 6;
  bool share_lowest = true;
  bool share_highest = true;
  int n_shared_layers = 1;
  bool disc_instance_norm = true;
  Scalar leaky_slope = 0.2;

  bool operator==(const ModelConfig&) const = default;

  int latent_channels() const { return base_channels << (n_conv_layers - 1); }
  int latent_size() const { return image_size >> (n_conv_layers - 1); }

  /// Spatial size of the discriminator feature map feeding the head.
  int disc_prehead_size() const {
    int s = image_size;
    ad::ConvGeom g{3, 2, 1};
    for (int i = 0; i < disc_depth - 1; ++i) s = g.out_dim(s);
    return s;
  }

  void validate() const {
    if (n_domains < 1) throw ConfigError("model: n_domains must be positive");
    if (image_size < 1) throw ConfigError("model: image_size must be positive");
    if (image_channels < 1) throw ConfigError("model: image_channels must be positive");
    if (base_channels < 1) throw ConfigError("model: base_channels must be positive");
    if (n_residual_blocks < 0) throw ConfigError("model: n_residual_blocks must be non-negative");
    if (n_conv_layers < 1) throw ConfigError("model: n_conv_layers must be positive");
    if (disc_depth < 1) throw ConfigError("model: disc_depth must be positive");
    const int div = 1 << (n_conv_layers - 1);
    if (image_size % div != 0) {
      throw ConfigError("model: image_size " + std::to_string(image_size) +
                        " is not divisible by 2^(n_conv_layers-1) = " + std::to_string(div));
    }
    if (n_shared_layers < 0 || n_shared_layers > 4) {
      throw ConfigError("model: n_shared_layers must lie in [0, 4]");
    }
    if (n_shared_layers == 0 && (share_lowest || share_highest)) {
      throw ConfigError("model: n_shared_layers = 0 requires share_lowest = share_highest = false");
    }
    if (disc_prehead_size() < 2) {
      throw ConfigError("model: disc_depth " + std::to_string(disc_depth) +
                        " collapses the pre-head feature map below 2x2 at image_size " +
                        std::to_string(image_size));
    }
  }
};

/// A domain id together with its one-hot encoding.
struct DomainLabel {
  int id = 0;
  std::vector<Scalar> one_hot;

  static DomainLabel make(int id, int n_domains) {
    if (id < 0 || id >= n_domains) {
      throw ValueError("label id " + std::to_string(id) + " out of range for " +
                       std::to_string(n_domains) + " domains");
    }
    DomainLabel l;
    l.id = id;
    l.one_hot.assign(static_cast<size_t>(n_domains), 0.0);
    l.one_hot[static_cast<size_t>(id)] = 1.0;
    return l;
  }
};

enum class LayerKind { Conv, Residual, ConvTranspose, OutputConv, Head };

/// Static description of one layer; the parameter shapes derive from it.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  bool norm = true;
  bool activation = true;
  int extra_in = 0;  // label channels appended to the layer input
};

/// Table-style shorthand for a layer, e.g. c64k7s1, R256, u128.
inline std::string layer_brief(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::Residual:
      return "R" + std::to_string(s.out_channels);
    case LayerKind::ConvTranspose:
    case LayerKind::OutputConv:
      return "u" + std::to_string(s.out_channels);
    case LayerKind::Conv:
    case LayerKind::Head:
      break;
  }
  return "c" + std::to_string(s.out_channels) + "k" + std::to_string(s.kernel) + "s" +
         std::to_string(s.stride);
}

struct Layer {
  LayerSpec spec;
  std::map<std::string, std::shared_ptr<Tensor>> params;  // name -> shared storage
};

struct Network {
  std::string name;
  std::vector<Layer> layers;
};

/// Records that layer `layer_a` of `network_a` shares storage with layer
/// `layer_b` of `network_b`.
struct TiedGroup {
  std::string network_a;
  int layer_a = 0;
  std::string network_b;
  int layer_b = 0;
};

inline std::vector<LayerSpec> encoder_specs(const ModelConfig& c) {
  std::vector<LayerSpec> out;
  out.push_back({LayerKind::Conv, c.image_channels, c.base_channels, 7, 1, 3, true, true, 0});
  for (int i = 1; i < c.n_conv_layers; ++i) {
    out.push_back({LayerKind::Conv, c.base_channels << (i - 1), c.base_channels << i, 3, 2, 1, true, true, 0});
  }
  for (int i = 0; i < c.n_residual_blocks; ++i) {
    out.push_back({LayerKind::Residual, c.latent_channels(), c.latent_channels(), 3, 1, 1, true, true, 0});
  }
  return out;
}

inline std::vector<LayerSpec> generator_specs(const ModelConfig& c) {
  std::vector<LayerSpec> out;
  const int lc = c.latent_channels();
  for (int i = 0; i < c.n_residual_blocks; ++i) {
    out.push_back({LayerKind::Residual, lc, lc, 3, 1, 1, true, true, 0});
  }
  for (int i = 0; i < c.n_conv_layers - 1; ++i) {
    out.push_back({LayerKind::ConvTranspose, i == 0 ? lc : (lc >> (i - 1)), lc >> i, 3, 2, 1, true, true, 0});
  }
  const int last_in = c.n_conv_layers > 1 ? lc >> (c.n_conv_layers - 2) : lc;
  out.push_back({LayerKind::OutputConv, last_in, c.image_channels, 3, 1, 1, false, false, 0});
  // Conditioning enters at the first layer and again at the output conv.
  // The second site matters: instance norm cancels spatially constant
  // channels, so a label appended only before normalized layers cannot
  // reach the interior of the output image. The output conv has no norm,
  // giving the label a direct global pathway to the pixels.
  out.front().extra_in = c.n_domains;
  out.back().extra_in = c.n_domains;
  return out;
}

inline std::vector<LayerSpec> discriminator_specs(const ModelConfig& c) {
  std::vector<LayerSpec> out;
  for (int i = 0; i < c.disc_depth - 1; ++i) {
    out.push_back({LayerKind::Conv, i == 0 ? c.image_channels : c.base_channels << (i - 1),
                   c.base_channels << i, 3, 2, 1, c.disc_instance_norm, true, 0});
  }
  const int head_in = c.disc_depth > 1 ? c.base_channels << (c.disc_depth - 2) : c.image_channels;
  out.push_back({LayerKind::Head, head_in, 1 + c.n_domains, 2, 1, 0, false, false, 0});
  return out;
}

namespace detail {

inline std::shared_ptr<Tensor> init_weight(Rng& rng, int n, int c, int h, int w) {
  auto t = std::make_shared<Tensor>(n, c, h, w);
  for (int64_t i = 0; i < t->numel(); ++i) (*t)[i] = rng.normal(0.0, 0.02);
  return t;
}

inline std::shared_ptr<Tensor> init_const(int channels, Scalar v) {
  auto t = std::make_shared<Tensor>(1, channels, 1, 1);
  t->fill(v);
  return t;
}

inline Layer build_layer(const LayerSpec& s, Rng& rng) {
  Layer L;
  L.spec = s;
  const int in = s.in_channels + s.extra_in;
  switch (s.kind) {
    case LayerKind::Conv:
    case LayerKind::OutputConv:
    case LayerKind::Head:
      L.params["weight"] = init_weight(rng, s.out_channels, in, s.kernel, s.kernel);
      L.params["bias"] = init_const(s.out_channels, 0.0);
      break;
    case LayerKind::ConvTranspose:
      L.params["weight"] = init_weight(rng, in, s.out_channels, s.kernel, s.kernel);
      L.params["bias"] = init_const(s.out_channels, 0.0);
      break;
    case LayerKind::Residual:
      L.params["conv1_weight"] = init_weight(rng, s.out_channels, in, 3, 3);
      L.params["conv1_bias"] = init_const(s.out_channels, 0.0);
      L.params["norm1_gamma"] = init_const(s.out_channels, 1.0);
      L.params["norm1_beta"] = init_const(s.out_channels, 0.0);
      L.params["conv2_weight"] = init_weight(rng, s.out_channels, s.out_channels, 3, 3);
      L.params["conv2_bias"] = init_const(s.out_channels, 0.0);
      L.params["norm2_gamma"] = init_const(s.out_channels, 1.0);
      L.params["norm2_beta"] = init_const(s.out_channels, 0.0);
      return L;
  }
  if (s.norm) {
    L.params["gamma"] = init_const(s.out_channels, 1.0);
    L.params["beta"] = init_const(s.out_channels, 0.0);
  }
  return L;
}

inline Network build_network(const std::string& name, const std::vector<LayerSpec>& specs, Rng& rng) {
  Network net;
  net.name = name;
  net.layers.reserve(specs.size());
  for (const LayerSpec& s : specs) net.layers.push_back(build_layer(s, rng));
  return net;
}

/// Indices of the layers to tie in a tower pair with `tieable` candidate
/// layers, tying up to n from each requested end.
inline std::vector<int> tie_indices(int tieable, int n, bool lowest, bool highest) {
  std::set<int> s;
  if (lowest) {
    for (int i = 0; i < std::min(n, tieable); ++i) s.insert(i);
  }
  if (highest) {
    for (int i = std::max(0, tieable - n); i < tieable; ++i) s.insert(i);
  }
  return {s.begin(), s.end()};
}

}  // namespace detail

enum class Tower { X, Y };

struct Model {
  ModelConfig config;
  Network encoder_x, encoder_y, generator_x, generator_y, discriminator_x, discriminator_y;
  std::vector<TiedGroup> tied_groups;

  std::array<Network*, 6> networks() {
    return {&encoder_x, &encoder_y, &generator_x, &generator_y, &discriminator_x, &discriminator_y};
  }
  std::array<const Network*, 6> networks() const {
    return {&encoder_x, &encoder_y, &generator_x, &generator_y, &discriminator_x, &discriminator_y};
  }

  Network& network(const std::string& name) {
    for (Network* n : networks()) {
      if (n->name == name) return *n;
    }
    throw ValueError("unknown network " + name);
  }

  const Network& network(const std::string& name) const {
    for (const Network* n : networks()) {
      if (n->name == name) return *n;
    }
    throw ValueError("unknown network " + name);
  }

  const Network& encoder(Tower t) const { return t == Tower::X ? encoder_x : encoder_y; }
  const Network& generator(Tower t) const { return t == Tower::X ? generator_x : generator_y; }
  const Network& discriminator(Tower t) const { return t == Tower::X ? discriminator_x : discriminator_y; }
};

/// One named parameter tensor; keys look like encoder_x/0/weight.
struct NamedParam {
  std::string key;
  std::shared_ptr<Tensor> tensor;
};

/// Every parameter of every network in a fixed canonical order. Tied twins
/// appear under both names but point at the same storage.
inline std::vector<NamedParam> named_params(const Model& m) {
  std::vector<NamedParam> out;
  for (const Network* net : m.networks()) {
    for (size_t li = 0; li < net->layers.size(); ++li) {
      for (const auto& [pname, tensor] : net->layers[li].params) {
        out.push_back({net->name + "/" + std::to_string(li) + "/" + pname, tensor});
      }
    }
  }
  return out;
}

/// Builds all six networks with seeded initialization, then aliases the
/// storage of tied layers so twins stay bit-identical by construction.
inline Model build_model(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m;
  m.config = cfg;
  Rng rng(seed);
  m.encoder_x = detail::build_network("encoder_x", encoder_specs(cfg), rng);
  m.encoder_y = detail::build_network("encoder_y", encoder_specs(cfg), rng);
  m.generator_x = detail::build_network("generator_x", generator_specs(cfg), rng);
  m.generator_y = detail::build_network("generator_y", generator_specs(cfg), rng);
  m.discriminator_x = detail::build_network("discriminator_x", discriminator_specs(cfg), rng);
  m.discriminator_y = detail::build_network("discriminator_y", discriminator_specs(cfg), rng);

  auto tie_pair = [&m](Network& a, Network& b, int tieable) {
    const auto idx = detail::tie_indices(tieable, m.config.n_shared_layers, m.config.share_lowest,
                                         m.config.share_highest);
    for (int i : idx) {
      for (auto& [pname, tensor] : a.layers[static_cast<size_t>(i)].params) {
        b.layers[static_cast<size_t>(i)].params[pname] = tensor;
      }
      m.tied_groups.push_back({a.name, i, b.name, i});
    }
  };
  const int enc_layers = static_cast<int>(m.encoder_x.layers.size());
  const int gen_tieable = static_cast<int>(m.generator_x.layers.size()) - 1;  // output layer never tied
  tie_pair(m.encoder_x, m.encoder_y, enc_layers);
  tie_pair(m.generator_x, m.generator_y, gen_tieable);
  return m;
}

/// Largest element-wise difference across all tied groups; exactly 0 when
/// the tying invariant holds.
inline Scalar tied_group_divergence(const Model& m) {
  Scalar worst = 0;
  for (const TiedGroup& g : m.tied_groups) {
    const Network& a = m.network(g.network_a);
    const Network& b = m.network(g.network_b);
    const auto& pa = a.layers[static_cast<size_t>(g.layer_a)].params;
    const auto& pb = b.layers[static_cast<size_t>(g.layer_b)].params;
    for (const auto& [name, ta] : pa) {
      worst = std::max(worst, Tensor::max_abs_diff(*ta, *pb.at(name)));
    }
  }
  return worst;
}

namespace detail {

inline ad::NodeId layer_forward(ad::Tape& t, const ModelConfig& cfg, const Layer& L, ad::NodeId x,
                                bool trainable, const std::vector<Scalar>* label) {
  auto P = [&](const char* name) { return t.leaf(L.params.at(name), trainable); };
  const LayerSpec& s = L.spec;
  const ad::NodeId shortcut = x;  // residual shortcut bypasses the label planes
  if (s.extra_in > 0) {
    if (label == nullptr || static_cast<int>(label->size()) != s.extra_in) {
      throw ValueError("layer expects a " + std::to_string(s.extra_in) + "-way label");
    }
    x = ad::append_label_channels(t, x, *label);
  }
  switch (s.kind) {
    case LayerKind::Conv:
    case LayerKind::Head: {
      ad::NodeId y = ad::conv2d(t, x, P("weight"), P("bias"), {s.kernel, s.stride, s.pad});
      if (s.norm) y = ad::instance_norm(t, y, P("gamma"), P("beta"));
      if (s.activation) y = ad::leaky_relu(t, y, cfg.leaky_slope);
      return y;
    }
    case LayerKind::OutputConv: {
      ad::NodeId y = ad::conv2d(t, x, P("weight"), P("bias"), {s.kernel, s.stride, s.pad});
      return ad::tanh_act(t, y);
    }
    case LayerKind::ConvTranspose: {
      const Tensor& xv = t.value(x);
      ad::NodeId y = ad::conv2d_transpose(t, x, P("weight"), P("bias"), {s.kernel, s.stride, s.pad},
                                          xv.h() * s.stride, xv.w() * s.stride);
      if (s.norm) y = ad::instance_norm(t, y, P("gamma"), P("beta"));
      if (s.activation) y = ad::leaky_relu(t, y, cfg.leaky_slope);
      return y;
    }
    case LayerKind::Residual: {
      ad::NodeId h = ad::conv2d(t, x, P("conv1_weight"), P("conv1_bias"), {3, 1, 1});
      h = ad::instance_norm(t, h, P("norm1_gamma"), P("norm1_beta"));
      h = ad::leaky_relu(t, h, cfg.leaky_slope);
      h = ad::conv2d(t, h, P("conv2_weight"), P("conv2_bias"), {3, 1, 1});
      h = ad::instance_norm(t, h, P("norm2_gamma"), P("norm2_beta"));
      return ad::add(t, shortcut, h);
    }
  }
  throw ValueError("unreachable layer kind");
}

inline void require_image_shape(const Tensor& v, const ModelConfig& cfg, const char* who) {
  if (v.c() != cfg.image_channels || v.h() != cfg.image_size || v.w() != cfg.image_size) {
    throw ShapeError(std::string(who) + ": expected (N, " + std::to_string(cfg.image_channels) + ", " +
                     std::to_string(cfg.image_size) + ", " + std::to_string(cfg.image_size) + "), got " +
                     v.shape_str());
  }
}

}  // namespace detail

/// Runs an encoder tower on the tape; `trainable` decides whether its
/// parameters participate in the backward pass.
inline ad::NodeId encode_on(ad::Tape& t, const Model& m, Tower tower, ad::NodeId images, bool trainable) {
  detail::require_image_shape(t.value(images), m.config, "encode");
  ad::NodeId h = images;
  for (const Layer& L : m.encoder(tower).layers) {
    h = detail::layer_forward(t, m.config, L, h, trainable, nullptr);
  }
  return h;
}

/// Runs a generator tower conditioned on a target-domain label.
inline ad::NodeId generate_on(ad::Tape& t, const Model& m, Tower tower, ad::NodeId z,
                              const DomainLabel& label, bool trainable) {
  const Tensor& zv = t.value(z);
  if (zv.c() != m.config.latent_channels() || zv.h() != m.config.latent_size() ||
      zv.w() != m.config.latent_size()) {
    throw ShapeError("generate: latent shape " + zv.shape_str() + " does not match config");
  }
  if (label.id < 0 || label.id >= m.config.n_domains ||
      static_cast<int>(label.one_hot.size()) != m.config.n_domains) {
    throw ValueError("generate: label does not match n_domains");
  }
  ad::NodeId h = z;
  for (const Layer& L : m.generator(tower).layers) {
    h = detail::layer_forward(t, m.config, L, h, trainable, &label.one_hot);
  }
  return h;
}

/// Realness logit and per-class logits of a discriminator tower, pooled to
/// one value per sample.
struct DiscNodes {
  ad::NodeId realness_logit;  // (N, 1, 1, 1), pre-sigmoid
  ad::NodeId class_logits;    // (N, n_domains, 1, 1), pre-softmax
};

inline DiscNodes discriminate_on(ad::Tape& t, const Model& m, Tower tower, ad::NodeId images,
                                 bool trainable) {
  detail::require_image_shape(t.value(images), m.config, "discriminate");
  ad::NodeId h = images;
  for (const Layer& L : m.discriminator(tower).layers) {
    h = detail::layer_forward(t, m.config, L, h, trainable, nullptr);
  }
  ad::NodeId pooled = ad::global_avg_pool(t, h);
  return {ad::slice_channels(t, pooled, 0, 1),
          ad::slice_channels(t, pooled, 1, 1 + m.config.n_domains)};
}

/// Eager (inference) wrappers below run a private tape with every
/// parameter frozen and copy the result out.

inline Tensor encode(const Model& m, Tower tower, const Tensor& images) {
  ad::Tape t;
  return t.value(encode_on(t, m, tower, t.constant(images), false));
}

inline Tensor generate(const Model& m, Tower tower, const Tensor& z, const DomainLabel& label) {
  ad::Tape t;
  return t.value(generate_on(t, m, tower, t.constant(z), label, false));
}

struct DiscOutput {
  Tensor realness;         // (N, 1, 1, 1), sigmoid of the pooled logit
  Tensor class_logits;     // (N, n_domains, 1, 1)
  Tensor class_posterior;  // (N, n_domains, 1, 1), rows on the simplex
};

inline DiscOutput discriminate(const Model& m, Tower tower, const Tensor& images) {
  ad::Tape t;
  DiscNodes nodes = discriminate_on(t, m, tower, t.constant(images), false);
  DiscOutput out;
  out.realness = t.value(nodes.realness_logit);
  for (int64_t i = 0; i < out.realness.numel(); ++i) out.realness[i] = sigmoid(out.realness[i]);
  out.class_logits = t.value(nodes.class_logits);
  out.class_posterior = out.class_logits;
  const int N = out.class_posterior.n(), C = out.class_posterior.c();
  for (int n = 0; n < N; ++n) softmax_row(out.class_posterior.data() + static_cast<int64_t>(n) * C, C);
  return out;
}

}  // namespace cdgan
