#pragma once

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cdgan/trainer.hpp"

namespace cdgan {

/// Architecture and training recipe of the judge network used for
/// scoring: a small CNN (stride-2 conv blocks + linear head) trained on
/// real images only. The judge never shares parameters with the model it
/// scores.
struct JudgeConfig {
  int base_channels = 16;  // doubles per block
  int n_blocks = 3;
  Scalar leaky_slope = 0.2;
  Scalar learning_rate = 1e-3;
  Scalar adam_beta1 = 0.9;
  Scalar adam_beta2 = 0.999;
  int epochs = 15;
  int batch_size = 16;
  uint64_t seed = 0;
  Scalar accuracy_floor = 0.90;  // refuse to score below this real-test accuracy

  void validate() const {
    if (base_channels < 1 || n_blocks < 1 || epochs < 0 || batch_size < 1) {
      throw ConfigError("judge: channels, blocks, and batch size must be positive");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("judge: learning_rate must be positive");
    if (!(accuracy_floor >= 0.0 && accuracy_floor <= 1.0)) {
      throw ConfigError("judge: accuracy_floor must lie in [0, 1]");
    }
  }
};

/// Image -> domain-id classifier used as the scoring oracle.
class JudgeClassifier {
 public:
  JudgeClassifier(const JudgeConfig& cfg, int n_classes, int image_size, int image_channels)
      : cfg_(cfg), n_classes_(n_classes), image_size_(image_size), image_channels_(image_channels) {
    cfg_.validate();
    if (n_classes < 2) throw ValueError("judge: need at least 2 classes");
    if (image_size < (1 << cfg_.n_blocks)) {
      throw ConfigError("judge: image_size too small for " + std::to_string(cfg_.n_blocks) +
                        " stride-2 blocks");
    }
    Rng rng(cfg_.seed);
    int in_c = image_channels;
    for (int i = 0; i < cfg_.n_blocks; ++i) {
      const int out_c = cfg_.base_channels << i;
      auto w = std::make_shared<Tensor>(out_c, in_c, 3, 3);
      for (int64_t k = 0; k < w->numel(); ++k) (*w)[k] = rng.normal(0.0, 0.02);
      weights_.push_back(std::move(w));
      biases_.push_back(std::make_shared<Tensor>(1, out_c, 1, 1));
      in_c = out_c;
    }
    head_w_ = std::make_shared<Tensor>(n_classes, in_c, 1, 1);
    for (int64_t k = 0; k < head_w_->numel(); ++k) (*head_w_)[k] = rng.normal(0.0, 0.02);
    head_b_ = std::make_shared<Tensor>(1, n_classes, 1, 1);
  }

  ad::NodeId forward_logits(ad::Tape& t, ad::NodeId images, bool trainable) const {
    ad::NodeId h = images;
    for (size_t i = 0; i < weights_.size(); ++i) {
      h = ad::conv2d(t, h, t.leaf(weights_[i], trainable), t.leaf(biases_[i], trainable),
                     {3, 2, 1});
      h = ad::leaky_relu(t, h, cfg_.leaky_slope);
    }
    h = ad::global_avg_pool(t, h);
    return ad::conv2d(t, h, t.leaf(head_w_, trainable), t.leaf(head_b_, trainable), {1, 1, 0});
  }

  /// Argmax class per image; ties break toward the lowest class id.
  std::vector<int> predict(const Tensor& images) const {
    if (images.empty()) throw ValueError("judge: empty batch");
    ad::Tape t;
    const Tensor logits = t.value(forward_logits(t, t.constant(images), false));
    std::vector<int> out(static_cast<size_t>(logits.n()));
    for (int i = 0; i < logits.n(); ++i) {
      int best = 0;
      for (int c = 1; c < n_classes_; ++c) {
        if (logits.at(i, c, 0, 0) > logits.at(i, best, 0, 0)) best = c;
      }
      out[static_cast<size_t>(i)] = best;
    }
    return out;
  }

  const JudgeConfig& config() const { return cfg_; }
  int n_classes() const { return n_classes_; }
  int image_size() const { return image_size_; }
  Scalar real_test_accuracy() const { return real_test_accuracy_; }
  void record_real_test_accuracy(Scalar a) { real_test_accuracy_ = a; }
  bool usable() const { return real_test_accuracy_ >= cfg_.accuracy_floor; }

  std::vector<std::shared_ptr<Tensor>> parameters() const {
    std::vector<std::shared_ptr<Tensor>> out;
    for (size_t i = 0; i < weights_.size(); ++i) {
      out.push_back(weights_[i]);
      out.push_back(biases_[i]);
    }
    out.push_back(head_w_);
    out.push_back(head_b_);
    return out;
  }

 private:
  JudgeConfig cfg_;
  int n_classes_;
  int image_size_;
  int image_channels_;
  std::vector<std::shared_ptr<Tensor>> weights_;
  std::vector<std::shared_ptr<Tensor>> biases_;
  std::shared_ptr<Tensor> head_w_;
  std::shared_ptr<Tensor> head_b_;
  Scalar real_test_accuracy_ = 0.0;
};

namespace detail {

inline Tensor stack_images(const std::vector<const Tensor*>& images) {
  const Tensor& first = *images.front();
  Tensor out(static_cast<int>(images.size()), first.c(), first.h(), first.w());
  const int64_t stride = first.numel();
  for (size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i]->data(), images[i]->data() + stride,
              out.data() + static_cast<int64_t>(i) * stride);
  }
  return out;
}

}  // namespace detail

/// Trains the judge on the real train split and records its accuracy on
/// the real test split. A judge under the accuracy floor is still
/// returned, but flagged unusable for scoring.
inline JudgeClassifier train_judge(const MultiDomainDataset& data, const JudgeConfig& cfg) {
  if (data.n_domains() < 2) throw ValueError("train_judge: need at least 2 classes");
  data.check();
  JudgeClassifier judge(cfg, data.n_domains(), data.image_size, data.image_channels);

  std::vector<std::pair<const Tensor*, int>> pool;
  for (int d = 0; d < data.n_domains(); ++d) {
    for (const Tensor& t : data.train[static_cast<size_t>(d)]) pool.emplace_back(&t, d);
  }
  if (pool.empty()) throw ValueError("train_judge: empty train split");

  std::vector<AdamMoments> moments;
  const auto params = judge.parameters();
  for (const auto& p : params) moments.push_back(AdamMoments::zeros_like(*p));

  Rng rng(cfg.seed + 1);
  int64_t step = 0;
  const int batch = std::min(cfg.batch_size, static_cast<int>(pool.size()));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> perm = rng.permutation(static_cast<int>(pool.size()));
    for (size_t start = 0; start + static_cast<size_t>(batch) <= perm.size();
         start += static_cast<size_t>(batch)) {
      std::vector<const Tensor*> imgs;
      std::vector<int> labels;
      for (int i = 0; i < batch; ++i) {
        const auto& [img, label] = pool[static_cast<size_t>(perm[start + static_cast<size_t>(i)])];
        imgs.push_back(img);
        labels.push_back(label);
      }
      ad::Tape t;
      const ad::NodeId logits = judge.forward_logits(t, t.constant(detail::stack_images(imgs)), true);
      const ad::NodeId loss = ad::softmax_xent(t, logits, labels);
      t.backward(loss);
      ++step;
      for (size_t p = 0; p < params.size(); ++p) {
        const Tensor* g = t.leaf_grad(params[p]);
        if (g == nullptr) continue;
        adam_update(*params[p], *g, moments[p], step, cfg.learning_rate, cfg.adam_beta1,
                    cfg.adam_beta2);
      }
    }
  }

  int correct = 0, total = 0;
  for (int d = 0; d < data.n_domains(); ++d) {
    for (const Tensor& img : data.test[static_cast<size_t>(d)]) {
      if (judge.predict(img).front() == d) ++correct;
      ++total;
    }
  }
  judge.record_real_test_accuracy(total > 0 ? static_cast<Scalar>(correct) / total : 0.0);
  if (!judge.usable()) {
    logging::info("train_judge: real-test accuracy " + std::to_string(judge.real_test_accuracy()) +
                  " is below the floor " + std::to_string(cfg.accuracy_floor) +
                  "; judge flagged unusable");
  }
  return judge;
}

/// Fraction of images whose judge argmax equals the intended target label.
inline Scalar classification_accuracy(const JudgeClassifier& judge, const Tensor& images,
                                      const std::vector<DomainLabel>& intended) {
  if (images.empty() || intended.empty()) throw ValueError("classification_accuracy: empty batch");
  if (images.n() != static_cast<int>(intended.size())) {
    throw ShapeError("classification_accuracy: " + std::to_string(images.n()) + " images vs " +
                     std::to_string(intended.size()) + " labels");
  }
  if (!judge.usable()) {
    throw ValueError("classification_accuracy: judge real-test accuracy " +
                     std::to_string(judge.real_test_accuracy()) + " is below the floor; scoring refused");
  }
  const std::vector<int> preds = judge.predict(images);
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == intended[i].id) ++correct;
  }
  return static_cast<Scalar>(correct) / static_cast<Scalar>(preds.size());
}

/// Cross-domain translations of the test split with their generation
/// targets, for scoring. Every source test image is translated to every
/// other domain (up to per_domain_count source images per ordered pair;
/// <= 0 means all).
struct EvalSet {
  Tensor images;  // (M, C, S, S)
  std::vector<DomainLabel> intended;
  std::vector<int> source_domains;
};

inline EvalSet generate_eval_set(const Model& model, const MultiDomainDataset& data,
                                 int per_domain_count = 0) {
  if (data.n_domains() != model.config.n_domains) {
    throw ConfigError("generate_eval_set: dataset domains do not match model");
  }
  std::vector<Tensor> outputs;
  EvalSet es;
  for (int s = 0; s < data.n_domains(); ++s) {
    const auto& pool = data.test[static_cast<size_t>(s)];
    const int take = per_domain_count <= 0
                         ? static_cast<int>(pool.size())
                         : std::min(per_domain_count, static_cast<int>(pool.size()));
    for (int target = 0; target < data.n_domains(); ++target) {
      if (target == s) continue;
      const DomainLabel label = DomainLabel::make(target, data.n_domains());
      for (int i = 0; i < take; ++i) {
        outputs.push_back(
            generate(model, Tower::Y, encode(model, Tower::X, pool[static_cast<size_t>(i)]), label));
        es.intended.push_back(label);
        es.source_domains.push_back(s);
      }
    }
  }
  if (outputs.empty()) throw ValueError("generate_eval_set: test split is empty");
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(outputs.size());
  for (const Tensor& t : outputs) ptrs.push_back(&t);
  es.images = detail::stack_images(ptrs);
  return es;
}

/// One named experiment configuration; the run harness re-seeds its
/// TrainConfig per listed seed.
struct ExperimentCell {
  std::string name;
  ModelConfig model;
  TrainConfig train;
};

struct ExperimentMatrix {
  std::vector<ExperimentCell> cells;
  std::vector<uint64_t> seeds;

  void validate() const {
    if (seeds.empty()) throw ConfigError("experiment matrix: needs at least one seed");
    std::set<std::string> names;
    for (const ExperimentCell& c : cells) {
      if (c.name.empty()) throw ConfigError("experiment matrix: unnamed cell");
      if (!names.insert(c.name).second) {
        throw ConfigError("experiment matrix: duplicate cell name '" + c.name + "'");
      }
      c.model.validate();
      c.train.validate();
    }
  }
};

struct CellResult {
  std::string cell_name;
  uint64_t seed = 0;
  Scalar accuracy = 0.0;
  Scalar judge_real_accuracy = 0.0;
  int iterations = 0;
  Scalar wall_seconds = 0.0;
  bool failed = false;
  std::string error;
};

inline constexpr const char* kResultsHeader =
    "cell_name,seed,accuracy,judge_real_accuracy,iterations,wall_seconds";

struct MatrixResults {
  std::vector<CellResult> rows;

  struct Summary {
    std::string cell_name;
    Scalar mean_accuracy = 0.0;
    Scalar stddev_accuracy = 0.0;
    int n_seeds = 0;
  };

  /// Mean and sample stddev of accuracy per cell, over non-failed runs,
  /// in first-appearance order.
  std::vector<Summary> summaries() const {
    std::vector<Summary> out;
    std::vector<std::string> order;
    for (const CellResult& r : rows) {
      if (std::find(order.begin(), order.end(), r.cell_name) == order.end()) {
        order.push_back(r.cell_name);
      }
    }
    for (const std::string& name : order) {
      Summary s;
      s.cell_name = name;
      Scalar sum = 0.0;
      for (const CellResult& r : rows) {
        if (r.cell_name != name || r.failed) continue;
        sum += r.accuracy;
        ++s.n_seeds;
      }
      if (s.n_seeds > 0) s.mean_accuracy = sum / s.n_seeds;
      if (s.n_seeds > 1) {
        Scalar ss = 0.0;
        for (const CellResult& r : rows) {
          if (r.cell_name != name || r.failed) continue;
          ss += (r.accuracy - s.mean_accuracy) * (r.accuracy - s.mean_accuracy);
        }
        s.stddev_accuracy = std::sqrt(ss / (s.n_seeds - 1));
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  std::string rows_csv() const {
    auto fmt = [](Scalar v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string(buf);
    };
    std::string out = std::string(kResultsHeader) + "\n";
    for (const CellResult& r : rows) {
      out += r.cell_name + "," + std::to_string(r.seed) + "," +
             (r.failed ? "nan" : fmt(r.accuracy)) + "," + fmt(r.judge_real_accuracy) + "," +
             std::to_string(r.iterations) + "," + fmt(r.wall_seconds) + "\n";
    }
    return out;
  }

  std::string summary_csv() const {
    auto fmt = [](Scalar v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string(buf);
    };
    std::string out = "cell_name,mean_accuracy,stddev_accuracy,n_seeds\n";
    for (const Summary& s : summaries()) {
      out += s.cell_name + "," + fmt(s.mean_accuracy) + "," + fmt(s.stddev_accuracy) + "," +
             std::to_string(s.n_seeds) + "\n";
    }
    return out;
  }
};

/// Trains and scores every (cell, seed) combination. Per-cell failures are
/// recorded in the result row and the matrix continues.
inline MatrixResults run_experiment_matrix(const ExperimentMatrix& matrix,
                                           const MultiDomainDataset& data,
                                           const JudgeClassifier& judge,
                                           int per_domain_count = 0) {
  matrix.validate();
  MatrixResults results;
  for (const ExperimentCell& cell : matrix.cells) {
    for (uint64_t seed : matrix.seeds) {
      CellResult r;
      r.cell_name = cell.name;
      r.seed = seed;
      r.judge_real_accuracy = judge.real_test_accuracy();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainConfig tc = cell.train;
        tc.seed = seed;
        Trainer trainer(cell.model, tc, &data);
        trainer.run();
        const EvalSet es = generate_eval_set(trainer.model(), data, per_domain_count);
        r.accuracy = classification_accuracy(judge, es.images, es.intended);
        r.iterations = trainer.iteration();
      } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
        logging::error("experiment cell '" + cell.name + "' seed " + std::to_string(seed) +
                       " failed: " + r.error);
      }
      r.wall_seconds =
          std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t0).count();
      results.rows.push_back(std::move(r));
      logging::info("experiment " + cell.name + " seed " + std::to_string(seed) +
                    (results.rows.back().failed
                         ? " failed"
                         : " accuracy " + std::to_string(results.rows.back().accuracy)));
    }
  }
  return results;
}

/// Sweep over how many layers the encoder/generator pairs share: 0 layers
/// (independent towers) up to 3 from each end.
inline ExperimentMatrix shared_layer_matrix(const ModelConfig& base_model,
                                            const TrainConfig& base_train,
                                            std::vector<uint64_t> seeds) {
  ExperimentMatrix m;
  m.seeds = std::move(seeds);
  for (int k = 0; k <= 3; ++k) {
    ExperimentCell c;
    c.name = "shared_" + std::to_string(k);
    c.model = base_model;
    c.train = base_train;
    if (k == 0) {
      c.model.share_lowest = false;
      c.model.share_highest = false;
      c.model.n_shared_layers = 0;
    } else {
      c.model.share_lowest = true;
      c.model.share_highest = true;
      c.model.n_shared_layers = k;
    }
    m.cells.push_back(std::move(c));
  }
  return m;
}

/// All eight on/off combinations of the reconstruction (R), latent
/// consistency (LCL), and classification (C) terms on top of the
/// adversarial + cycle baseline.
inline ExperimentMatrix ablation_matrix(const ModelConfig& base_model, const TrainConfig& base_train,
                                        std::vector<uint64_t> seeds) {
  ExperimentMatrix m;
  m.seeds = std::move(seeds);
  const LossWeights on = base_train.weights;
  for (int mask = 0; mask < 8; ++mask) {
    const bool r = mask & 1, lcl = mask & 2, cls = mask & 4;
    ExperimentCell c;
    c.model = base_model;
    c.train = base_train;
    c.train.weights.alpha0 = r ? on.alpha0 : 0.0;
    c.train.weights.alpha1 = lcl ? on.alpha1 : 0.0;
    c.train.weights.alpha2 = cls ? on.alpha2 : 0.0;
    if (mask == 0) {
      c.name = "Baseline";
    } else if (mask == 7) {
      c.name = "Full";
    } else {
      c.name = "Baseline";
      if (r) c.name += "+R";
      if (lcl) c.name += "+LCL";
      if (cls) c.name += "+C";
    }
    m.cells.push_back(std::move(c));
  }
  return m;
}

/// Accuracy measured every eval_every iterations while training runs to
/// completion.
struct CurvePoint {
  int iteration = 0;
  Scalar accuracy = 0.0;
};

struct AccuracyCurve {
  std::string name;
  std::vector<CurvePoint> points;
};

inline AccuracyCurve measure_accuracy_curve(Trainer& trainer, const JudgeClassifier& judge,
                                            const MultiDomainDataset& data, int eval_every,
                                            int per_domain_count, const std::string& name) {
  if (eval_every < 1) throw ConfigError("measure_accuracy_curve: eval_every must be positive");
  AccuracyCurve curve;
  curve.name = name;
  auto score = [&]() {
    const EvalSet es = generate_eval_set(trainer.model(), data, per_domain_count);
    curve.points.push_back({trainer.iteration(), classification_accuracy(judge, es.images, es.intended)});
  };
  score();
  while (trainer.iteration() < trainer.config().max_iterations) {
    trainer.step_once();
    if (trainer.iteration() % eval_every == 0 ||
        trainer.iteration() == trainer.config().max_iterations) {
      score();
    }
  }
  return curve;
}

inline void write_curves_csv(const std::vector<AccuracyCurve>& curves, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_curves_csv: cannot open " + path);
  out << "curve,iteration,accuracy\n";
  char buf[32];
  for (const AccuracyCurve& c : curves) {
    for (const CurvePoint& p : c.points) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.accuracy);
      out << c.name << "," << p.iteration << "," << buf << "\n";
    }
  }
}

/// Renders accuracy-vs-iteration lines into a PNG: x axis iterations,
/// y axis accuracy in [0, 1], one colored polyline per curve plus legend.
inline void render_curves_chart(const std::vector<AccuracyCurve>& curves, const std::string& path,
                                int width = 800, int height = 600) {
  if (curves.empty()) throw ValueError("render_curves_chart: no curves");
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const int ml = 70, mr = 30, mt = 30, mb = 50;  // margins
  const cv::Rect plot(ml, mt, width - ml - mr, height - mt - mb);

  int max_iter = 1;
  for (const AccuracyCurve& c : curves) {
    for (const CurvePoint& p : c.points) max_iter = std::max(max_iter, p.iteration);
  }
  auto to_px = [&](const CurvePoint& p) {
    const double fx = static_cast<double>(p.iteration) / max_iter;
    const double fy = clamp(p.accuracy, 0.0, 1.0);
    return cv::Point(plot.x + static_cast<int>(fx * (plot.width - 1)),
                     plot.y + plot.height - 1 - static_cast<int>(fy * (plot.height - 1)));
  };

  const cv::Scalar axis(0, 0, 0);
  cv::rectangle(canvas, plot, axis, 1);
  for (int i = 0; i <= 5; ++i) {  // y ticks every 0.2
    const double acc = i / 5.0;
    const int y = plot.y + plot.height - 1 - static_cast<int>(acc * (plot.height - 1));
    cv::line(canvas, {plot.x - 5, y}, {plot.x, y}, axis, 1);
    char label[16];
    std::snprintf(label, sizeof(label), "%.1f", acc);
    cv::putText(canvas, label, {plot.x - 45, y + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1);
  }
  for (int i = 0; i <= 4; ++i) {  // x ticks
    const int it = max_iter * i / 4;
    const int x = plot.x + static_cast<int>(static_cast<double>(it) / max_iter * (plot.width - 1));
    cv::line(canvas, {x, plot.y + plot.height}, {x, plot.y + plot.height + 5}, axis, 1);
    cv::putText(canvas, std::to_string(it), {x - 15, plot.y + plot.height + 25},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1);
  }
  cv::putText(canvas, "iteration", {plot.x + plot.width / 2 - 35, height - 10},
              cv::FONT_HERSHEY_SIMPLEX, 0.5, axis, 1);
  cv::putText(canvas, "accuracy", {5, mt - 10}, cv::FONT_HERSHEY_SIMPLEX, 0.5, axis, 1);

  const cv::Scalar palette[8] = {{180, 60, 30},  {30, 90, 200}, {40, 160, 40}, {160, 40, 160},
                                 {20, 170, 220}, {120, 120, 0}, {70, 70, 70},  {0, 0, 0}};
  for (size_t ci = 0; ci < curves.size(); ++ci) {
    const cv::Scalar color = palette[ci % 8];
    const auto& pts = curves[ci].points;
    for (size_t i = 1; i < pts.size(); ++i) {
      cv::line(canvas, to_px(pts[i - 1]), to_px(pts[i]), color, 2);
    }
    const int ly = mt + 18 * (static_cast<int>(ci) + 1);
    cv::line(canvas, {plot.x + plot.width - 150, ly}, {plot.x + plot.width - 120, ly}, color, 2);
    cv::putText(canvas, curves[ci].name, {plot.x + plot.width - 112, ly + 5},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1);
  }
  if (!cv::imwrite(path, canvas)) throw IoError("render_curves_chart: cannot write " + path);
}

/// Renders per-cell mean accuracy as a bar chart with +-1 stddev whiskers.
inline void render_summary_chart(const std::vector<MatrixResults::Summary>& summaries,
                                 const std::string& path, int width = 800, int height = 600) {
  if (summaries.empty()) throw ValueError("render_summary_chart: no cells");
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const int ml = 70, mr = 30, mt = 30, mb = 110;
  const cv::Rect plot(ml, mt, width - ml - mr, height - mt - mb);
  const cv::Scalar axis(0, 0, 0);
  cv::rectangle(canvas, plot, axis, 1);
  for (int i = 0; i <= 5; ++i) {
    const double acc = i / 5.0;
    const int y = plot.y + plot.height - 1 - static_cast<int>(acc * (plot.height - 1));
    cv::line(canvas, {plot.x - 5, y}, {plot.x, y}, axis, 1);
    char label[16];
    std::snprintf(label, sizeof(label), "%.1f", acc);
    cv::putText(canvas, label, {plot.x - 45, y + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1);
  }
  cv::putText(canvas, "mean accuracy", {5, mt - 10}, cv::FONT_HERSHEY_SIMPLEX, 0.5, axis, 1);

  const int n = static_cast<int>(summaries.size());
  const int slot = plot.width / n;
  const int bar_w = std::max(4, slot * 3 / 5);
  const cv::Scalar bar_color(180, 110, 40);
  for (int i = 0; i < n; ++i) {
    const MatrixResults::Summary& s = summaries[static_cast<size_t>(i)];
    const double acc = clamp(s.mean_accuracy, 0.0, 1.0);
    const int cx = plot.x + slot * i + slot / 2;
    const int top = plot.y + plot.height - 1 - static_cast<int>(acc * (plot.height - 1));
    const int base = plot.y + plot.height - 1;
    cv::rectangle(canvas, {cx - bar_w / 2, top}, {cx + bar_w / 2, base}, bar_color, cv::FILLED);
    if (s.stddev_accuracy > 0.0) {
      const int lo = plot.y + plot.height - 1 -
                     static_cast<int>(clamp(acc - s.stddev_accuracy, 0.0, 1.0) * (plot.height - 1));
      const int hi = plot.y + plot.height - 1 -
                     static_cast<int>(clamp(acc + s.stddev_accuracy, 0.0, 1.0) * (plot.height - 1));
      cv::line(canvas, {cx, lo}, {cx, hi}, axis, 1);
      cv::line(canvas, {cx - 4, lo}, {cx + 4, lo}, axis, 1);
      cv::line(canvas, {cx - 4, hi}, {cx + 4, hi}, axis, 1);
    }
    // slanted cell name under the bar
    cv::putText(canvas, s.cell_name, {cx - slot / 2 + 4, base + 20 + (i % 2) * 16},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1);
  }
  if (!cv::imwrite(path, canvas)) throw IoError("render_summary_chart: cannot write " + path);
}

}  // namespace cdgan
