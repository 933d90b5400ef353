// Command-line driver: dataset synthesis, training, translation,
// evaluation, and experiment sweeps. Exit codes: 0 success, 1 runtime
// failure, 2 usage/config error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "cdgan/cdgan.hpp"

namespace fs = std::filesystem;
using namespace cdgan;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  int64_t seed = -1;
  std::vector<std::string> overrides;
};

RunConfig make_run_config(const GlobalArgs& g) {
  RunConfig run = load_run_config(g.config_path, g.overrides);
  if (!g.out_dir.empty()) run.out_dir = g.out_dir;
  if (g.seed >= 0) {
    run.train.seed = static_cast<uint64_t>(g.seed);
    run.eval.judge.seed = static_cast<uint64_t>(g.seed);
  }
  return run;
}

int cmd_synth(int domains, int per_domain, int size, int64_t seed, double train_fraction,
              const std::string& out) {
  if (domains < 2) {
    std::cerr << "error: need >= 2 domains\n";
    return 2;
  }
  if (out.empty()) {
    std::cerr << "error: --out directory is required\n";
    return 2;
  }
  SyntheticDomainSpec spec;
  spec.n_domains = domains;
  spec.images_per_domain = per_domain;
  spec.image_size = size;
  spec.seed = seed >= 0 ? static_cast<uint64_t>(seed) : 0;
  spec.train_fraction = train_fraction;
  spec.validate();
  const MultiDomainDataset ds = make_synthetic(spec);
  export_dataset(ds, out);
  int total = 0;
  for (int d = 0; d < ds.n_domains(); ++d) {
    total += static_cast<int>(ds.train[static_cast<size_t>(d)].size() +
                              ds.test[static_cast<size_t>(d)].size());
  }
  std::cout << "wrote " << total << " images across " << ds.n_domains() << " domains under " << out
            << "\n";
  return 0;
}

int cmd_train(const GlobalArgs& g) {
  const RunConfig run = make_run_config(g);
  run.validate();
  const MultiDomainDataset data = run.load_data();
  Trainer trainer(run.model, run.train, &data);
  trainer.run(run.out_dir);
  trainer.save(run.out_dir + "/checkpoint_final.cdgn");
  const Scalar last_eg =
      trainer.history().empty() ? std::nan("") : trainer.history().back().eg.composite;
  std::printf("final_iter=%d composite_eg=%.17g\n", trainer.iteration(), last_eg);
  return 0;
}

std::vector<std::string> checkpoint_domains(const ContainerReader& r, int n_domains) {
  if (r.header().contains("domains")) {
    return r.header().at("domains").get<std::vector<std::string>>();
  }
  std::vector<std::string> names;
  for (int d = 0; d < n_domains; ++d) names.push_back("domain_" + std::to_string(d));
  return names;
}

int cmd_translate(const std::string& checkpoint, const std::vector<std::string>& inputs,
                  const std::string& target, const std::string& out) {
  if (inputs.empty()) {
    std::cerr << "error: no input images given\n";
    return 2;
  }
  if (out.empty()) {
    std::cerr << "error: --out directory is required\n";
    return 2;
  }
  ContainerReader r(checkpoint);
  if (r.kind() != "model" && r.kind() != "trainer") {
    throw IoError("checkpoint " + checkpoint + " holds kind '" + r.kind() + "', expected a model");
  }
  const Model model = load_model_from(r);
  const std::vector<std::string> domains = checkpoint_domains(r, model.config.n_domains);

  int target_id = -1;
  for (size_t d = 0; d < domains.size(); ++d) {
    if (domains[d] == target) target_id = static_cast<int>(d);
  }
  if (target_id < 0) {
    try {
      size_t pos = 0;
      const int as_int = std::stoi(target, &pos);
      if (pos == target.size() && as_int >= 0 && as_int < model.config.n_domains) {
        target_id = as_int;
      }
    } catch (const std::exception&) {
    }
  }
  if (target_id < 0) {
    std::cerr << "error: unknown domain '" << target << "'; valid domains:";
    for (const std::string& d : domains) std::cerr << " " << d;
    std::cerr << "\n";
    return 2;
  }
  const DomainLabel label = DomainLabel::make(target_id, model.config.n_domains);

  fs::create_directories(out);
  for (const std::string& input : inputs) {
    const cv::Mat src = cv::imread(input, cv::IMREAD_COLOR);
    if (src.empty()) throw IoError("cannot decode input image " + input);
    const Tensor in_t = detail::tensor_from_mat(src, model.config.image_size);
    const Tensor out_t = generate(model, Tower::Y, encode(model, Tower::X, in_t), label);
    cv::Mat rendered = detail::mat_from_tensor(out_t);
    cv::Mat restored;
    cv::resize(rendered, restored, src.size(), 0, 0, cv::INTER_LINEAR);
    const std::string name =
        fs::path(input).stem().string() + "__to_" + domains[static_cast<size_t>(target_id)] + ".png";
    const std::string dest = (fs::path(out) / name).string();
    if (!cv::imwrite(dest, restored)) throw IoError("cannot write " + dest);
    std::cout << dest << "\n";
  }
  return 0;
}

int cmd_evaluate(const GlobalArgs& g, const std::string& checkpoint) {
  const RunConfig run = make_run_config(g);
  run.validate();
  const MultiDomainDataset data = run.load_data();
  const Model model = load_model(checkpoint);
  const JudgeClassifier judge = train_judge(data, run.eval.judge);
  if (!judge.usable()) {
    std::cerr << "error: judge real-test accuracy " << judge.real_test_accuracy()
              << " is below the floor " << run.eval.judge.accuracy_floor << "\n";
    return 1;
  }
  const EvalSet es = generate_eval_set(model, data, run.eval.per_domain_count);
  const Scalar accuracy = classification_accuracy(judge, es.images, es.intended);
  fs::create_directories(run.out_dir);
  std::ofstream csv(run.out_dir + "/accuracy.csv");
  csv << "accuracy,judge_real_accuracy,images\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", accuracy, judge.real_test_accuracy(),
                es.images.n());
  csv << buf;
  std::printf("accuracy=%.17g judge_real_accuracy=%.17g images=%d\n", accuracy,
              judge.real_test_accuracy(), es.images.n());
  return 0;
}

int cmd_ablate(const GlobalArgs& g) {
  const RunConfig run = make_run_config(g);
  run.validate();
  const MultiDomainDataset data = run.load_data();
  const JudgeClassifier judge = train_judge(data, run.eval.judge);
  if (!judge.usable()) {
    std::cerr << "error: judge real-test accuracy " << judge.real_test_accuracy()
              << " is below the floor " << run.eval.judge.accuracy_floor << "\n";
    return 1;
  }
  ExperimentMatrix matrix = run.eval.matrix == "shared_layers"
                                ? shared_layer_matrix(run.model, run.train, run.eval.seeds)
                                : ablation_matrix(run.model, run.train, run.eval.seeds);
  if (!run.eval.cells.empty()) {
    std::vector<ExperimentCell> keep;
    for (const std::string& want : run.eval.cells) {
      bool found = false;
      for (const ExperimentCell& c : matrix.cells) {
        if (c.name == want) {
          keep.push_back(c);
          found = true;
        }
      }
      if (!found) {
        throw ConfigError("config: no cell named '" + want + "' in the " + run.eval.matrix +
                          " matrix");
      }
    }
    matrix.cells = std::move(keep);
  }
  const MatrixResults results = run_experiment_matrix(matrix, data, judge, run.eval.per_domain_count);
  fs::create_directories(run.out_dir);
  {
    std::ofstream rows(run.out_dir + "/results.csv");
    rows << results.rows_csv();
    std::ofstream summary(run.out_dir + "/summary.csv");
    summary << results.summary_csv();
  }
  if (!results.rows.empty()) {
    render_summary_chart(results.summaries(), run.out_dir + "/comparison.png");
  }
  std::cout << "wrote " << run.out_dir << "/results.csv (" << results.rows.size() << " rows), "
            << run.out_dir << "/summary.csv, " << run.out_dir << "/comparison.png\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-domain image-to-image translation toolkit"};
  app.require_subcommand(1);
  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON run configuration file")->expected(1);
  app.add_option("--seed", g.seed, "override the training/judge seed");
  app.add_option("--out", g.out_dir, "output directory (overrides config out_dir)");
  app.add_option("--set", g.overrides, "config override key=value (dotted keys, repeatable)");

  auto* synth = app.add_subcommand("synth", "render the deterministic synthetic dataset to disk");
  int domains = 4, per_domain = 200, size = 32;
  double train_fraction = 0.8;
  synth->add_option("--domains", domains, "number of domains (2-8)");
  synth->add_option("--per-domain", per_domain, "images per domain");
  synth->add_option("--size", size, "square image size in pixels");
  synth->add_option("--train-fraction", train_fraction, "fraction assigned to the train split");
  synth->fallthrough();

  auto* train = app.add_subcommand("train", "train a model per the run configuration");
  train->fallthrough();

  auto* translate = app.add_subcommand("translate", "translate images with a trained checkpoint");
  std::string ckpt, target;
  std::vector<std::string> inputs;
  translate->add_option("--checkpoint", ckpt, "model or trainer checkpoint")->required();
  translate->add_option("--target", target, "target domain name or id")->required();
  translate->add_option("inputs", inputs, "input image files");
  translate->fallthrough();

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint with a freshly trained judge");
  std::string eval_ckpt;
  evaluate->add_option("--checkpoint", eval_ckpt, "model or trainer checkpoint")->required();
  evaluate->fallthrough();

  auto* ablate = app.add_subcommand("ablate", "run the configured experiment matrix");
  ablate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(synth)) {
      return cmd_synth(domains, per_domain, size, g.seed, train_fraction, g.out_dir);
    }
    if (app.got_subcommand(train)) return cmd_train(g);
    if (app.got_subcommand(translate)) return cmd_translate(ckpt, inputs, target, g.out_dir);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(g, eval_ckpt);
    if (app.got_subcommand(ablate)) return cmd_ablate(g);
    std::cerr << "error: no command\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
