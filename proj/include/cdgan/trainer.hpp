#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cdgan/checkpoint.hpp"
#include "cdgan/data.hpp"
#include "cdgan/log.hpp"
#include "cdgan/losses.hpp"
#include "cdgan/optimizer.hpp"
#include "cdgan/train_config.hpp"

namespace cdgan {

/// Uniform draw over all ordered pairs of distinct domain ids.
inline std::pair<int, int> sample_domain_pair(int n_domains, Rng& rng) {
  if (n_domains < 2) throw ValueError("sample_domain_pair: need at least 2 domains");
  const int a = static_cast<int>(rng.uniform_int(n_domains));
  int b = static_cast<int>(rng.uniform_int(n_domains - 1));
  if (b >= a) ++b;
  return {a, b};
}

inline void to_json(json& j, const LossBreakdown& b) {
  j = json{{"gan_x", b.gan_x},       {"gan_y", b.gan_y},   {"rec", b.rec},
           {"lcl", b.lcl},           {"cls_real", b.cls_real}, {"cls_fake", b.cls_fake},
           {"cyc", b.cyc},           {"composite", b.composite},
           {"phase", b.phase == Phase::D ? "d" : "eg"}};
}

inline void from_json(const json& j, LossBreakdown& b) {
  b.gan_x = j.at("gan_x");
  b.gan_y = j.at("gan_y");
  b.rec = j.at("rec");
  b.lcl = j.at("lcl");
  b.cls_real = j.at("cls_real");
  b.cls_fake = j.at("cls_fake");
  b.cyc = j.at("cyc");
  b.composite = j.at("composite");
  b.phase = j.at("phase") == "d" ? Phase::D : Phase::EG;
}

/// Loss record of one iteration: the discriminator-phase breakdown and the
/// encoder/generator-phase breakdown measured right after it.
struct HistoryRow {
  int iteration = 0;
  LossBreakdown d;
  LossBreakdown eg;
};

inline void to_json(json& j, const HistoryRow& r) {
  j = json{{"iteration", r.iteration}, {"d", r.d}, {"eg", r.eg}};
}

inline void from_json(const json& j, HistoryRow& r) {
  r.iteration = j.at("iteration");
  r.d = j.at("d");
  r.eg = j.at("eg");
}

inline constexpr const char* kMetricsHeader =
    "iteration,gan_x,gan_y,rec,lcl,cls_real,cls_fake,cyc,composite_d,composite_eg";

/// Owns the model, optimizer state, sampling state, and loss history of
/// one training run. Each train_step performs the two alternating updates:
/// discriminators first (encoders/generators fixed), then encoders and
/// generators against the freshly updated discriminators.
class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainConfig& train_config,
          const MultiDomainDataset* data)
      : model_(build_model(model_config, train_config.seed)),
        cfg_(train_config),
        data_(data),
        sampler_(data),
        rng_(train_config.seed ^ 0xD1B54A32D192ED03ull) {
    cfg_.validate();
    check_data_compatibility();
    init_optimizer_slots();
  }

  /// Parameter gradients keyed like named_params(); tied twins report the
  /// same (already summed) gradient under each of their keys.
  using GradMap = std::map<std::string, Tensor>;

  /// Discriminator update on two batches from distinct domains. Encoders
  /// and generators are frozen, so the translated images enter the
  /// discriminators as constants. Touches no encoder/generator parameter.
  LossBreakdown discriminator_step(const Batch& batch_a, const Batch& batch_b) {
    ad::Tape t;
    LossBreakdown d{};
    const ad::NodeId composite = build_discriminator_graph(t, batch_a, batch_b, d);
    t.backward(composite);
    apply_updates(t, Phase::D);
    return d;
  }

  /// Evaluates the discriminator-phase objective without changing any
  /// state; optionally reports its parameter gradients.
  LossBreakdown probe_discriminator(const Batch& batch_a, const Batch& batch_b,
                                    GradMap* grads = nullptr) {
    ad::Tape t;
    LossBreakdown d{};
    const ad::NodeId composite = build_discriminator_graph(t, batch_a, batch_b, d);
    if (grads != nullptr) {
      t.backward(composite);
      collect_grads(t, *grads);
    }
    return d;
  }

  /// Evaluates the encoder/generator-phase objective without changing any
  /// state; optionally reports its parameter gradients.
  LossBreakdown probe_encoder_generator(const Batch& batch_a, const Batch& batch_b,
                                        GradMap* grads = nullptr) {
    ad::Tape t;
    LossBreakdown eg{};
    const ad::NodeId composite = build_encoder_generator_graph(t, batch_a, batch_b, eg);
    if (grads != nullptr) {
      t.backward(composite);
      collect_grads(t, *grads);
    }
    return eg;
  }

 private:
  ad::NodeId build_discriminator_graph(ad::Tape& t, const Batch& batch_a, const Batch& batch_b,
                                       LossBreakdown& d) {
    require_distinct(batch_a, batch_b);
    const std::vector<int> labels_a(static_cast<size_t>(batch_a.images.n()), batch_a.label.id);
    const std::vector<int> labels_b(static_cast<size_t>(batch_b.images.n()), batch_b.label.id);
    d.phase = Phase::D;
    const ad::NodeId x = t.constant(batch_a.images);
    const ad::NodeId y = t.constant(batch_b.images);
    const ad::NodeId fake_x =
        generate_on(t, model_, Tower::X, encode_on(t, model_, Tower::Y, y, false), batch_a.label, false);
    const ad::NodeId fake_y =
        generate_on(t, model_, Tower::Y, encode_on(t, model_, Tower::X, x, false), batch_b.label, false);
    const DiscNodes real_dx = discriminate_on(t, model_, Tower::X, x, true);
    const DiscNodes real_dy = discriminate_on(t, model_, Tower::Y, y, true);
    const DiscNodes fake_dx = discriminate_on(t, model_, Tower::X, fake_x, true);
    const DiscNodes fake_dy = discriminate_on(t, model_, Tower::Y, fake_y, true);
    const ad::NodeId gan_x = graph::gan_d(t, real_dx.realness_logit, fake_dx.realness_logit);
    const ad::NodeId gan_y = graph::gan_d(t, real_dy.realness_logit, fake_dy.realness_logit);
    const ad::NodeId cls = ad::add(t, graph::classification(t, real_dx.class_logits, labels_a),
                                   graph::classification(t, real_dy.class_logits, labels_b));
    const ad::NodeId composite =
        ad::weighted_sum(t, {gan_x, gan_y, cls}, {1.0, 1.0, cfg_.weights.alpha2});
    d.gan_x = scalar_of(t, gan_x);
    d.gan_y = scalar_of(t, gan_y);
    d.cls_real = scalar_of(t, cls);
    d.composite = scalar_of(t, composite);
    check_finite(d);
    return composite;
  }

  ad::NodeId build_encoder_generator_graph(ad::Tape& t, const Batch& batch_a, const Batch& batch_b,
                                           LossBreakdown& eg) {
    require_distinct(batch_a, batch_b);
    const std::vector<int> labels_a(static_cast<size_t>(batch_a.images.n()), batch_a.label.id);
    const std::vector<int> labels_b(static_cast<size_t>(batch_b.images.n()), batch_b.label.id);
    const LossWeights& w = cfg_.weights;
    eg.phase = Phase::EG;
    const ad::NodeId x = t.constant(batch_a.images);
    const ad::NodeId y = t.constant(batch_b.images);
    const ad::NodeId zx = encode_on(t, model_, Tower::X, x, true);
    const ad::NodeId zy = encode_on(t, model_, Tower::Y, y, true);
    const ad::NodeId fake_y = generate_on(t, model_, Tower::Y, zx, batch_b.label, true);
    const ad::NodeId fake_x = generate_on(t, model_, Tower::X, zy, batch_a.label, true);
    const ad::NodeId rec_x = generate_on(t, model_, Tower::X, zx, batch_a.label, true);
    const ad::NodeId rec_y = generate_on(t, model_, Tower::Y, zy, batch_b.label, true);
    const ad::NodeId z_fake_y = encode_on(t, model_, Tower::Y, fake_y, true);
    const ad::NodeId z_fake_x = encode_on(t, model_, Tower::X, fake_x, true);
    const ad::NodeId cyc_x = generate_on(t, model_, Tower::X, z_fake_y, batch_a.label, true);
    const ad::NodeId cyc_y = generate_on(t, model_, Tower::Y, z_fake_x, batch_b.label, true);
    const DiscNodes dx = discriminate_on(t, model_, Tower::X, fake_x, false);
    const DiscNodes dy = discriminate_on(t, model_, Tower::Y, fake_y, false);

    const ad::NodeId gan_x = graph::gan_eg(t, dx.realness_logit);
    const ad::NodeId gan_y = graph::gan_eg(t, dy.realness_logit);
    const ad::NodeId rec = ad::add(t, graph::distance(t, x, rec_x, DistanceNorm::L2),
                                   graph::distance(t, y, rec_y, DistanceNorm::L2));
    const ad::NodeId lcl = ad::add(t, graph::distance(t, zx, z_fake_y, cfg_.distance_norm),
                                   graph::distance(t, zy, z_fake_x, cfg_.distance_norm));
    const ad::NodeId cls = ad::add(t, graph::classification(t, dx.class_logits, labels_a),
                                   graph::classification(t, dy.class_logits, labels_b));
    const ad::NodeId cyc = ad::add(t, graph::distance(t, x, cyc_x, cfg_.distance_norm),
                                   graph::distance(t, y, cyc_y, cfg_.distance_norm));
    const ad::NodeId composite = ad::weighted_sum(
        t, {gan_x, gan_y, rec, lcl, cls, cyc}, {1.0, 1.0, w.alpha0, w.alpha1, w.alpha2, w.alpha3});
    eg.gan_x = scalar_of(t, gan_x);
    eg.gan_y = scalar_of(t, gan_y);
    eg.rec = scalar_of(t, rec);
    eg.lcl = scalar_of(t, lcl);
    eg.cls_fake = scalar_of(t, cls);
    eg.cyc = scalar_of(t, cyc);
    eg.composite = scalar_of(t, composite);
    check_finite(eg);
    return composite;
  }

  void collect_grads(ad::Tape& t, GradMap& grads) const {
    grads.clear();
    for (const NamedParam& p : named_params(model_)) {
      const Tensor* g = t.leaf_grad(p.tensor);
      if (g != nullptr) grads[p.key] = *g;
    }
  }

 public:
  /// Encoder/generator update against the current discriminators, whose
  /// parameters are frozen but still pass gradients through. Touches no
  /// discriminator parameter.
  LossBreakdown encoder_generator_step(const Batch& batch_a, const Batch& batch_b) {
    ad::Tape t;
    LossBreakdown eg{};
    const ad::NodeId composite = build_encoder_generator_graph(t, batch_a, batch_b, eg);
    t.backward(composite);
    apply_updates(t, Phase::EG);
    return eg;
  }

  /// One full iteration on two already-sampled batches: discriminator
  /// update first, then the encoder/generator update against the result.
  std::pair<LossBreakdown, LossBreakdown> train_step(const Batch& batch_a, const Batch& batch_b) {
    const LossBreakdown d = discriminator_step(batch_a, batch_b);
    const LossBreakdown eg = encoder_generator_step(batch_a, batch_b);
    ++iteration_;
    history_.push_back({iteration_, d, eg});
    return {d, eg};
  }

  /// Draws a fresh domain pair and fresh per-domain batches, then runs one
  /// train_step.
  const HistoryRow& step_once() {
    const auto [da, db] = sample_domain_pair(data_->n_domains(), rng_);
    const Batch batch_a = sampler_.sample_batch(da, cfg_.batch_per_domain, rng_);
    const Batch batch_b = sampler_.sample_batch(db, cfg_.batch_per_domain, rng_);
    train_step(batch_a, batch_b);
    return history_.back();
  }

  /// Runs until max_iterations, drawing a fresh domain pair and fresh
  /// batches each iteration. With a non-empty out_dir, appends to
  /// out_dir/metrics.csv every log_every iterations and writes a full
  /// checkpoint every checkpoint_every iterations.
  void run(const std::string& out_dir = "") {
    std::ofstream metrics;
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      const std::string path = out_dir + "/metrics.csv";
      const bool fresh = !std::filesystem::exists(path) || iteration_ == 0;
      metrics.open(path, fresh ? std::ios::trunc : std::ios::app);
      if (!metrics) throw IoError("train: cannot open " + path);
      if (fresh) metrics << kMetricsHeader << "\n";
    }
    while (iteration_ < cfg_.max_iterations) {
      const HistoryRow& row = step_once();
      if (metrics.is_open() && iteration_ % cfg_.log_every == 0) {
        metrics << metrics_row(row) << "\n";
        metrics.flush();
      }
      if (iteration_ % cfg_.log_every == 0) {
        logging::debug("iteration " + std::to_string(iteration_) + " composite_d " +
                                    std::to_string(row.d.composite) + " composite_eg " +
                                    std::to_string(row.eg.composite));
      }
      if (!out_dir.empty() && iteration_ % cfg_.checkpoint_every == 0) {
        char name[48];
        std::snprintf(name, sizeof(name), "checkpoint_%06d.cdgn", iteration_);
        save(out_dir + "/" + name);
      }
    }
  }

  /// One CSV line: discriminator-phase adversarial/classification columns,
  /// encoder/generator-phase distance and fake-classification columns.
  static std::string metrics_row(const HistoryRow& r) {
    auto fmt = [](Scalar v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string(buf);
    };
    return std::to_string(r.iteration) + "," + fmt(r.d.gan_x) + "," + fmt(r.d.gan_y) + "," +
           fmt(r.eg.rec) + "," + fmt(r.eg.lcl) + "," + fmt(r.d.cls_real) + "," +
           fmt(r.eg.cls_fake) + "," + fmt(r.eg.cyc) + "," + fmt(r.d.composite) + "," +
           fmt(r.eg.composite);
  }

  void save(const std::string& path) const {
    ContainerWriter w("trainer");
    save_model_into(w, model_);
    for (const NamedParam& p : unique_params_) {
      const AdamMoments& mo = moments_.at(p.key);
      w.add("moments/" + p.key + "/m", &mo.m);
      w.add("moments/" + p.key + "/v", &mo.v);
    }
    w.set_meta("train_config", cfg_);
    w.set_meta("iteration", iteration_);
    w.set_meta("step_d", step_d_);
    w.set_meta("step_eg", step_eg_);
    w.set_meta("rng", rng_.serialize());
    w.set_meta("sampler", sampler_.state());
    w.set_meta("history", history_);
    w.set_meta("domains", data_->domains);
    w.write(path);
  }

  static Trainer load(const std::string& path, const MultiDomainDataset* data) {
    ContainerReader r(path);
    if (r.kind() != "trainer") {
      throw IoError("trainer checkpoint expected, found kind '" + r.kind() + "' in " + path);
    }
    Model m = load_model_from(r);
    const TrainConfig tc = r.header().at("train_config").get<TrainConfig>();
    Trainer out(std::move(m), tc, data);
    for (const NamedParam& p : out.unique_params_) {
      AdamMoments& mo = out.moments_.at(p.key);
      r.read_into("moments/" + p.key + "/m", mo.m);
      r.read_into("moments/" + p.key + "/v", mo.v);
    }
    out.iteration_ = r.header().at("iteration");
    out.step_d_ = r.header().at("step_d");
    out.step_eg_ = r.header().at("step_eg");
    out.rng_ = Rng::deserialize(r.header().at("rng").get<std::string>());
    out.sampler_.restore(r.header().at("sampler"));
    out.history_ = r.header().at("history").get<std::vector<HistoryRow>>();
    return out;
  }

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }
  int64_t step_d() const { return step_d_; }
  int64_t step_eg() const { return step_eg_; }
  const std::vector<HistoryRow>& history() const { return history_; }
  Rng& rng() { return rng_; }

 private:
  Trainer(Model&& m, const TrainConfig& train_config, const MultiDomainDataset* data)
      : model_(std::move(m)), cfg_(train_config), data_(data), sampler_(data), rng_(0) {
    cfg_.validate();
    check_data_compatibility();
    init_optimizer_slots();
  }

  void check_data_compatibility() const {
    if (data_ == nullptr) throw ConfigError("trainer: dataset is required");
    if (data_->n_domains() != model_.config.n_domains) {
      throw ConfigError("trainer: dataset has " + std::to_string(data_->n_domains()) +
                        " domains but model expects " + std::to_string(model_.config.n_domains));
    }
    if (data_->image_size != model_.config.image_size ||
        data_->image_channels != model_.config.image_channels) {
      throw ConfigError("trainer: dataset image geometry does not match model config");
    }
    for (int d = 0; d < data_->n_domains(); ++d) {
      if (static_cast<int>(data_->train[static_cast<size_t>(d)].size()) < cfg_.batch_per_domain) {
        throw ConfigError("trainer: domain " + data_->domains[static_cast<size_t>(d)] +
                          " has fewer training images than batch_per_domain");
      }
    }
  }

  /// Tied twins share storage; keep only the first name so each physical
  /// parameter owns exactly one optimizer-moment slot.
  void init_optimizer_slots() {
    std::set<const Tensor*> seen;
    for (const NamedParam& p : named_params(model_)) {
      if (!seen.insert(p.tensor.get()).second) continue;
      unique_params_.push_back(p);
      moments_.emplace(p.key, AdamMoments::zeros_like(*p.tensor));
    }
  }

  static bool is_discriminator_key(const std::string& key) {
    return key.rfind("discriminator", 0) == 0;
  }

  static void require_distinct(const Batch& a, const Batch& b) {
    if (a.label.id == b.label.id) {
      throw ValueError("train_step: batches must come from two distinct domains");
    }
  }

  static Scalar scalar_of(const ad::Tape& t, ad::NodeId id) { return t.value(id)[0]; }

  void check_finite(const LossBreakdown& b) const {
    const std::pair<const char*, Scalar> terms[] = {
        {"gan_x", b.gan_x},       {"gan_y", b.gan_y},       {"rec", b.rec},
        {"lcl", b.lcl},           {"cls_real", b.cls_real}, {"cls_fake", b.cls_fake},
        {"cyc", b.cyc},           {"composite", b.composite}};
    for (const auto& [name, v] : terms) {
      if (!std::isfinite(v)) {
        throw ValueError(std::string("non-finite loss term '") + name + "' in " +
                         (b.phase == Phase::D ? "discriminator" : "encoder/generator") +
                         " phase at iteration " + std::to_string(iteration_ + 1));
      }
    }
  }

  void apply_updates(ad::Tape& t, Phase phase) {
    const int64_t step = (phase == Phase::D) ? ++step_d_ : ++step_eg_;
    for (const NamedParam& p : unique_params_) {
      if (is_discriminator_key(p.key) != (phase == Phase::D)) continue;
      const Tensor* grad = t.leaf_grad(p.tensor);
      if (grad == nullptr) continue;
      adam_update(*p.tensor, *grad, moments_.at(p.key), step, cfg_.learning_rate, cfg_.adam_beta1,
                  cfg_.adam_beta2);
    }
  }

  Model model_;
  TrainConfig cfg_;
  const MultiDomainDataset* data_;
  BatchSampler sampler_;
  Rng rng_;
  int iteration_ = 0;
  int64_t step_d_ = 0;
  int64_t step_eg_ = 0;
  std::vector<NamedParam> unique_params_;
  std::map<std::string, AdamMoments> moments_;
  std::vector<HistoryRow> history_;
};

/// Builds a fresh trainer and runs it to completion.
inline Trainer train(const TrainConfig& train_config, const MultiDomainDataset& data,
                     const ModelConfig& model_config, const std::string& out_dir = "") {
  Trainer t(model_config, train_config, &data);
  t.run(out_dir);
  return t;
}

}  // namespace cdgan
