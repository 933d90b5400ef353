#include "cdgan/trainer.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <map>

using namespace cdgan;
namespace fs = std::filesystem;

namespace {

ModelConfig desk_model() {
  ModelConfig c;
  c.n_domains = 3;
  c.image_size = 16;
  c.base_channels = 4;
  c.n_residual_blocks = 1;
  c.n_conv_layers = 2;
  c.disc_depth = 2;
  return c;
}

MultiDomainDataset desk_data() {
  SyntheticDomainSpec spec;
  spec.n_domains = 3;
  spec.images_per_domain = 6;
  spec.image_size = 16;
  spec.seed = 9;
  return make_synthetic(spec);
}

TrainConfig desk_train(int iterations) {
  TrainConfig c;
  c.max_iterations = iterations;
  c.seed = 17;
  return c;
}

std::map<std::string, Tensor> snapshot(const Model& m) {
  std::map<std::string, Tensor> out;
  for (const NamedParam& p : named_params(m)) out.emplace(p.key, *p.tensor);
  return out;
}

Scalar max_change(const std::map<std::string, Tensor>& before, const Model& m,
                  const std::string& key_prefix_a, const std::string& key_prefix_b) {
  Scalar worst = 0.0;
  for (const NamedParam& p : named_params(m)) {
    if (p.key.rfind(key_prefix_a, 0) != 0 && p.key.rfind(key_prefix_b, 0) != 0) continue;
    worst = std::max(worst, Tensor::max_abs_diff(before.at(p.key), *p.tensor));
  }
  return worst;
}

TEST(SampleDomainPairTest, TwoDomainsGiveBothOrderedPairs) {
  Rng rng(1);
  bool saw01 = false, saw10 = false;
  for (int i = 0; i < 200; ++i) {
    const auto [a, b] = sample_domain_pair(2, rng);
    EXPECT_NE(a, b);
    EXPECT_TRUE((a == 0 && b == 1) || (a == 1 && b == 0));
    saw01 |= (a == 0);
    saw10 |= (a == 1);
  }
  EXPECT_TRUE(saw01);
  EXPECT_TRUE(saw10);
}

TEST(SampleDomainPairTest, UniformOverOrderedPairs) {
  Rng rng(123);
  std::map<std::pair<int, int>, int> counts;
  const int draws = 12000;
  for (int i = 0; i < draws; ++i) counts[sample_domain_pair(4, rng)]++;
  ASSERT_EQ(counts.size(), 12u);
  const double expected = draws / 12.0;
  double chi2 = 0.0;
  for (const auto& [pair, n] : counts) {
    EXPECT_NEAR(n, expected, 150.0) << pair.first << "," << pair.second;
    chi2 += (n - expected) * (n - expected) / expected;
  }
  EXPECT_LT(chi2, 24.725);  // chi-square critical value, 11 dof, p = 0.01
}

TEST(SampleDomainPairTest, DomainMarginalsAreBalanced) {
  Rng rng(77);
  std::array<int, 4> appearances{};
  const int draws = 6000;
  for (int i = 0; i < draws; ++i) {
    const auto [a, b] = sample_domain_pair(4, rng);
    appearances[static_cast<size_t>(a)]++;
    appearances[static_cast<size_t>(b)]++;
  }
  const double expected = 2.0 * draws / 4.0;
  double chi2 = 0.0;
  for (int n : appearances) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 11.345);  // chi-square critical value, 3 dof, p = 0.01
}

TEST(SampleDomainPairTest, DeterministicAndValidated) {
  Rng r1(5), r2(5);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_domain_pair(5, r1), sample_domain_pair(5, r2));
  Rng rng(0);
  EXPECT_THROW(sample_domain_pair(1, rng), ValueError);
  EXPECT_THROW(sample_domain_pair(0, rng), ValueError);
}

TEST(TrainerTest, RejectsIncompatibleDataset) {
  const MultiDomainDataset data = desk_data();
  ModelConfig wrong = desk_model();
  wrong.n_domains = 4;
  EXPECT_THROW(Trainer(wrong, desk_train(1), &data), ConfigError);
  wrong = desk_model();
  wrong.image_size = 32;
  EXPECT_THROW(Trainer(wrong, desk_train(1), &data), ConfigError);
  TrainConfig big_batch = desk_train(1);
  big_batch.batch_per_domain = 100;  // only 5 train images per domain
  EXPECT_THROW(Trainer(desk_model(), big_batch, &data), ConfigError);
}

TEST(TrainerTest, RejectsSameDomainBatchPair) {
  const MultiDomainDataset data = desk_data();
  Trainer t(desk_model(), desk_train(1), &data);
  BatchSampler sampler(&data);
  Rng rng(3);
  const Batch a = sampler.sample_batch(0, 1, rng);
  const Batch also_a = sampler.sample_batch(0, 1, rng);
  EXPECT_THROW(t.train_step(a, also_a), ValueError);
}

TEST(TrainerTest, IdenticalSeedsGiveBitIdenticalHistories) {
  const MultiDomainDataset data = desk_data();
  Trainer t1(desk_model(), desk_train(10), &data);
  Trainer t2(desk_model(), desk_train(10), &data);
  for (int i = 0; i < 10; ++i) {
    t1.step_once();
    t2.step_once();
  }
  ASSERT_EQ(t1.history().size(), 10u);
  for (size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(Trainer::metrics_row(t1.history()[i]), Trainer::metrics_row(t2.history()[i]));
  }
}

TEST(TrainerTest, TiedGroupsStayIdenticalAfterUpdates) {
  const MultiDomainDataset data = desk_data();
  Trainer t(desk_model(), desk_train(3), &data);
  ASSERT_FALSE(t.model().tied_groups.empty());
  for (int i = 0; i < 3; ++i) {
    t.step_once();
    EXPECT_EQ(tied_group_divergence(t.model()), 0.0);
  }
}

TEST(TrainerTest, ZeroLearningRateChangesNothingButLossesAreFinite) {
  const MultiDomainDataset data = desk_data();
  TrainConfig cfg = desk_train(1);
  cfg.learning_rate = 1e-30;  // validation requires > 0; small enough to be a no-op check via diff
  Trainer t(desk_model(), cfg, &data);
  const auto before = snapshot(t.model());
  const HistoryRow& row = t.step_once();
  EXPECT_TRUE(std::isfinite(row.d.composite));
  EXPECT_TRUE(std::isfinite(row.eg.composite));
  // updates bounded by ~lr per element
  EXPECT_LT(max_change(before, t.model(), "encoder", "generator"), 1e-28);
  EXPECT_LT(max_change(before, t.model(), "discriminator", "discriminator"), 1e-28);
}

TEST(TrainerTest, PhasesTouchDisjointParameterSets) {
  const MultiDomainDataset data = desk_data();
  Trainer t(desk_model(), desk_train(1), &data);
  BatchSampler sampler(&data);
  Rng rng(21);
  const Batch a = sampler.sample_batch(0, 1, rng);
  const Batch b = sampler.sample_batch(1, 1, rng);

  const auto before_d = snapshot(t.model());
  t.discriminator_step(a, b);
  EXPECT_EQ(max_change(before_d, t.model(), "encoder", "generator"), 0.0);
  EXPECT_GT(max_change(before_d, t.model(), "discriminator", "discriminator"), 0.0);

  const auto before_eg = snapshot(t.model());
  t.encoder_generator_step(a, b);
  EXPECT_EQ(max_change(before_eg, t.model(), "discriminator", "discriminator"), 0.0);
  EXPECT_GT(max_change(before_eg, t.model(), "encoder", "generator"), 0.0);
}

TEST(TrainerTest, LossesStayFiniteOverManySteps) {
  const MultiDomainDataset data = desk_data();
  Trainer t(desk_model(), desk_train(25), &data);
  for (int i = 0; i < 25; ++i) {
    const HistoryRow& row = t.step_once();
    for (Scalar v : {row.d.gan_x, row.d.gan_y, row.d.cls_real, row.d.composite, row.eg.gan_x,
                     row.eg.gan_y, row.eg.rec, row.eg.lcl, row.eg.cls_fake, row.eg.cyc,
                     row.eg.composite}) {
      ASSERT_TRUE(std::isfinite(v)) << "iteration " << row.iteration;
    }
  }
}

TEST(TrainerTest, ZeroIterationTrainReturnsInitializedState) {
  const MultiDomainDataset data = desk_data();
  TrainConfig cfg = desk_train(0);
  Trainer done = train(cfg, data, desk_model());
  EXPECT_EQ(done.iteration(), 0);
  EXPECT_TRUE(done.history().empty());
  EXPECT_EQ(done.step_d(), 0);
  EXPECT_EQ(done.step_eg(), 0);
}

class TrainerFilesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "cdgan_trainer_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(TrainerFilesTest, RunWritesMetricsAndCheckpoints) {
  const MultiDomainDataset data = desk_data();
  TrainConfig cfg = desk_train(4);
  cfg.log_every = 2;
  cfg.checkpoint_every = 2;
  Trainer t(desk_model(), cfg, &data);
  t.run(dir_.string());
  EXPECT_EQ(t.iteration(), 4);

  std::ifstream metrics(dir_ / "metrics.csv");
  ASSERT_TRUE(metrics.good());
  std::string line;
  std::getline(metrics, line);
  EXPECT_EQ(line, "iteration,gan_x,gan_y,rec,lcl,cls_real,cls_fake,cyc,composite_d,composite_eg");
  int rows = 0;
  while (std::getline(metrics, line)) {
    if (!line.empty()) ++rows;
  }
  EXPECT_EQ(rows, 2);  // iterations 2 and 4

  EXPECT_TRUE(fs::exists(dir_ / "checkpoint_000002.cdgn"));
  EXPECT_TRUE(fs::exists(dir_ / "checkpoint_000004.cdgn"));
  Trainer mid = Trainer::load((dir_ / "checkpoint_000002.cdgn").string(), &data);
  EXPECT_EQ(mid.iteration(), 2);
  EXPECT_EQ(mid.history().size(), 2u);
}

TEST_F(TrainerFilesTest, ResumedRunMatchesUninterruptedHistory) {
  const MultiDomainDataset data = desk_data();
  Trainer uninterrupted(desk_model(), desk_train(15), &data);
  for (int i = 0; i < 15; ++i) uninterrupted.step_once();

  Trainer first_leg(desk_model(), desk_train(15), &data);
  for (int i = 0; i < 5; ++i) first_leg.step_once();
  const fs::path ckpt = dir_ / "leg.cdgn";
  first_leg.save(ckpt.string());

  Trainer resumed = Trainer::load(ckpt.string(), &data);
  EXPECT_EQ(resumed.iteration(), 5);
  for (int i = 0; i < 10; ++i) resumed.step_once();

  ASSERT_EQ(resumed.history().size(), 15u);
  for (size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(Trainer::metrics_row(resumed.history()[i]),
              Trainer::metrics_row(uninterrupted.history()[i]))
        << "iteration " << i + 1;
  }
  EXPECT_EQ(tied_group_divergence(resumed.model()), 0.0);
  EXPECT_EQ(Tensor::max_abs_diff(*named_params(resumed.model()).front().tensor,
                                 *named_params(uninterrupted.model()).front().tensor),
            0.0);
}

TEST_F(TrainerFilesTest, LoadRejectsPlainModelContainers) {
  const MultiDomainDataset data = desk_data();
  Trainer t(desk_model(), desk_train(1), &data);
  const fs::path model_path = dir_ / "plain_model.cdgn";
  save_model(t.model(), model_path.string());
  EXPECT_THROW(Trainer::load(model_path.string(), &data), IoError);
}

}  // namespace
