#include "cdgan/checkpoint.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"

namespace cdgan {
namespace {

namespace fs = std::filesystem;

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "cdgan_ckpt_test";
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

ModelConfig small_config() {
  ModelConfig c;
  c.n_domains = 2;
  c.image_size = 8;
  c.base_channels = 4;
  c.n_residual_blocks = 1;
  c.n_conv_layers = 2;
  c.disc_depth = 2;
  return c;
}

TEST_F(CheckpointTest, ContainerRoundTripsTensorsAndMeta) {
  Rng rng(60);
  auto a = testutil::random_param(rng, 2, 3, 4, 5);
  auto b = testutil::random_param(rng, 1, 1, 1, 7);
  ContainerWriter w("model");
  w.add("first", a.get());
  w.add("second", b.get());
  w.add("alias_of_first", a.get());
  w.set_meta("note", json{{"answer", 42}});
  w.write(path("c.bin"));

  ContainerReader r(path("c.bin"));
  EXPECT_EQ(r.kind(), "model");
  EXPECT_EQ(r.header().at("note").at("answer").get<int>(), 42);
  EXPECT_TRUE(r.has("first"));
  EXPECT_FALSE(r.has("third"));
  EXPECT_EQ(Tensor::max_abs_diff(r.read("first"), *a), 0.0);
  EXPECT_EQ(Tensor::max_abs_diff(r.read("second"), *b), 0.0);
  // aliased keys point at one payload block
  EXPECT_EQ(r.offset_of("first"), r.offset_of("alias_of_first"));
  EXPECT_NE(r.offset_of("first"), r.offset_of("second"));

  Tensor wrong(1, 1, 1, 3);
  EXPECT_THROW(r.read_into("second", wrong), ShapeError);
  EXPECT_THROW(r.read("missing"), IoError);
}

TEST_F(CheckpointTest, RejectsDuplicateKeys) {
  Tensor t(1, 1, 1, 1);
  ContainerWriter w("model");
  w.add("k", &t);
  EXPECT_THROW(w.add("k", &t), ValueError);
}

TEST_F(CheckpointTest, ModelRoundTripIsExact) {
  Model m = build_model(small_config(), 123);
  // make the state distinguishable from a fresh build
  m.encoder_x.layers[1].params.at("weight")->fill(0.75);
  save_model(m, path("model.bin"));

  Model loaded = load_model(path("model.bin"));
  EXPECT_EQ(loaded.config, m.config);
  const auto pa = named_params(m), pb = named_params(loaded);
  ASSERT_EQ(pa.size(), pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].key, pb[i].key);
    EXPECT_EQ(Tensor::max_abs_diff(*pa[i].tensor, *pb[i].tensor), 0.0) << pa[i].key;
  }
  EXPECT_EQ(tied_group_divergence(loaded), 0.0);
  // loaded twins remain aliased, not merely equal
  EXPECT_EQ(loaded.encoder_x.layers[0].params.at("weight"),
            loaded.encoder_y.layers[0].params.at("weight"));

  Rng rng(61);
  Tensor x(1, 3, 8, 8);
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.0, 1.0);
  EXPECT_EQ(Tensor::max_abs_diff(encode(m, Tower::X, x), encode(loaded, Tower::X, x)), 0.0);
}

TEST_F(CheckpointTest, RejectsForeignAndCorruptFiles) {
  {
    std::ofstream os(path("not.bin"), std::ios::binary);
    os << "definitely not a checkpoint";
  }
  EXPECT_THROW(ContainerReader r(path("not.bin")), IoError);
  EXPECT_THROW(load_model(path("absent.bin")), IoError);

  Model m = build_model(small_config(), 1);
  save_model(m, path("model.bin"));
  // corrupt the version field
  {
    std::fstream f(path("model.bin"), std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    const uint32_t bad = 999;
    f.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
  }
  EXPECT_THROW(ContainerReader r(path("model.bin")), IoError);
}

TEST_F(CheckpointTest, LoadRejectsContainersWithoutModelPayload) {
  Tensor t(1, 1, 1, 1);
  ContainerWriter w("model");
  w.add("stray", &t);
  w.write(path("empty.bin"));
  EXPECT_THROW(load_model(path("empty.bin")), IoError);

  ContainerWriter w2("model");
  w2.set_meta("model_config", json(small_config()));
  w2.write(path("no_tensors.bin"));
  EXPECT_THROW(load_model(path("no_tensors.bin")), IoError);
}

TEST_F(CheckpointTest, LoadDetectsDivergentTwins) {
  Model m = build_model(small_config(), 5);
  // write a container whose twin keys deliberately carry different data
  ContainerWriter w("model");
  w.set_meta("model_config", json(m.config));
  w.set_meta("tied_groups", json(m.tied_groups));
  std::map<std::string, Tensor> copies;
  for (const NamedParam& p : named_params(m)) {
    Tensor c = *p.tensor;
    if (p.key == "encoder_y/0/weight") c[0] += 1.0;  // breaks the tie with encoder_x/0/weight
    copies.emplace(p.key, std::move(c));
  }
  for (auto& [key, tensor] : copies) w.add(key, &tensor);
  w.write(path("diverged.bin"));
  EXPECT_THROW(load_model(path("diverged.bin")), IoError);
}

}  // namespace
}  // namespace cdgan
