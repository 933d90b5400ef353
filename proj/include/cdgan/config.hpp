#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "cdgan/evaluation.hpp"

namespace cdgan {

inline void to_json(json& j, const JudgeConfig& c) {
  j = json{{"base_channels", c.base_channels},
           {"n_blocks", c.n_blocks},
           {"leaky_slope", c.leaky_slope},
           {"learning_rate", c.learning_rate},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"accuracy_floor", c.accuracy_floor}};
}

inline void from_json(const json& j, JudgeConfig& c) {
  c.base_channels = j.value("base_channels", c.base_channels);
  c.n_blocks = j.value("n_blocks", c.n_blocks);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.accuracy_floor = j.value("accuracy_floor", c.accuracy_floor);
}

/// Where training/evaluation images come from: a folder-per-domain
/// directory, or the built-in synthetic renderer.
struct DatasetSource {
  bool use_synthetic = true;
  SyntheticDomainSpec synthetic;
  std::string path;
  double train_fraction = 0.8;

  MultiDomainDataset load(int image_size) const {
    if (use_synthetic) return make_synthetic(synthetic);
    return load_dataset(path, image_size, train_fraction);
  }
};

inline void to_json(json& j, const DatasetSource& s) {
  if (s.use_synthetic) {
    j = json{{"synthetic", s.synthetic}};
  } else {
    j = json{{"path", s.path}, {"train_fraction", s.train_fraction}};
  }
}

inline void from_json(const json& j, DatasetSource& s) {
  if (j.contains("path")) {
    s.use_synthetic = false;
    s.path = j.at("path");
    s.train_fraction = j.value("train_fraction", s.train_fraction);
  }
  if (j.contains("synthetic")) {
    if (j.contains("path")) throw ConfigError("dataset: give either 'path' or 'synthetic', not both");
    s.use_synthetic = true;
    from_json(j.at("synthetic"), s.synthetic);
  }
}

/// Scoring and experiment-harness knobs.
struct EvalSettings {
  JudgeConfig judge;
  int per_domain_count = 0;  // <= 0: use every test image
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string matrix = "ablation";  // or "shared_layers"
  std::vector<std::string> cells;   // optional name filter; empty = all
};

inline void to_json(json& j, const EvalSettings& e) {
  j = json{{"judge", e.judge},
           {"per_domain_count", e.per_domain_count},
           {"seeds", e.seeds},
           {"matrix", e.matrix},
           {"cells", e.cells}};
}

inline void from_json(const json& j, EvalSettings& e) {
  if (j.contains("judge")) from_json(j.at("judge"), e.judge);
  e.per_domain_count = j.value("per_domain_count", e.per_domain_count);
  e.seeds = j.value("seeds", e.seeds);
  e.matrix = j.value("matrix", e.matrix);
  e.cells = j.value("cells", e.cells);
}

/// The complete description of one run: model, training recipe, data
/// source, evaluation settings, and output directory. Defaults describe a
/// small 32x32 configuration that runs in minutes on a single core.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DatasetSource dataset;
  EvalSettings eval;
  std::string out_dir = "out";

  RunConfig() {
    model.image_size = 32;
    model.base_channels = 8;
    model.n_residual_blocks = 1;
    model.n_conv_layers = 2;
    model.disc_depth = 3;
  }

  void validate() const {
    model.validate();
    train.validate();
    if (dataset.use_synthetic) {
      dataset.synthetic.validate();
      if (dataset.synthetic.n_domains != model.n_domains) {
        throw ConfigError("config: synthetic n_domains " +
                          std::to_string(dataset.synthetic.n_domains) +
                          " does not match model n_domains " + std::to_string(model.n_domains));
      }
      if (dataset.synthetic.image_size != model.image_size) {
        throw ConfigError("config: synthetic image_size " +
                          std::to_string(dataset.synthetic.image_size) +
                          " does not match model image_size " + std::to_string(model.image_size));
      }
    } else if (dataset.path.empty()) {
      throw ConfigError("config: dataset.path is empty");
    }
    if (eval.matrix != "ablation" && eval.matrix != "shared_layers") {
      throw ConfigError("config: evaluation.matrix must be 'ablation' or 'shared_layers'");
    }
    if (out_dir.empty()) throw ConfigError("config: out_dir is empty");
    eval.judge.validate();
  }

  MultiDomainDataset load_data() const { return dataset.load(model.image_size); }
};

inline void to_json(json& j, const RunConfig& r) {
  j = json{{"model", r.model},
           {"train", r.train},
           {"dataset", r.dataset},
           {"evaluation", r.eval},
           {"out_dir", r.out_dir}};
}

inline void from_json(const json& j, RunConfig& r) {
  if (j.contains("model")) from_json(j.at("model"), r.model);
  if (j.contains("train")) from_json(j.at("train"), r.train);
  if (j.contains("dataset")) from_json(j.at("dataset"), r.dataset);
  if (j.contains("evaluation")) from_json(j.at("evaluation"), r.eval);
  r.out_dir = j.value("out_dir", r.out_dir);
}

/// Applies one `key=value` override onto a config document. Keys use
/// dotted paths (train.learning_rate=0.0005); values are parsed as JSON
/// when possible and fall back to plain strings.
inline void apply_override(json& doc, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // unquoted strings like dataset.path=data/
  }
  json* node = &doc;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// Reads a run configuration: the file (when given) over built-in
/// defaults, then `--set` overrides in order. Keys absent from the
/// document keep their defaults.
inline RunConfig load_run_config(const std::string& path,
                                 const std::vector<std::string>& overrides = {}) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  }
  for (const std::string& s : overrides) apply_override(doc, s);
  RunConfig r;
  try {
    from_json(doc, r);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config document malformed: ") + e.what());
  }
  return r;
}

}  // namespace cdgan
