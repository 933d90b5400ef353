#include "cdgan/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

namespace cdgan {
namespace {

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
  Rng c(42), d(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(c.uniform(), d.uniform());
    ASSERT_EQ(c.normal(), d.normal());
    ASSERT_EQ(c.uniform_int(17), d.uniform_int(17));
  }
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  EXPECT_EQ(same, 0);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const Scalar u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, UniformRange) {
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const Scalar u = r.uniform(-3.0, 5.0);
    ASSERT_GE(u, -3.0);
    ASSERT_LT(u, 5.0);
  }
}

TEST(Rng, UniformIntBoundsAndChiSquare) {
  Rng r(123);
  constexpr int kBins = 10;
  constexpr int kDraws = 100000;
  int counts[kBins] = {};
  for (int i = 0; i < kDraws; ++i) {
    const int64_t v = r.uniform_int(kBins);
    ASSERT_GE(v, 0);
    ASSERT_LT(v, kBins);
    ++counts[v];
  }
  const Scalar expected = static_cast<Scalar>(kDraws) / kBins;
  Scalar chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square critical value, 9 dof at the 0.01 level
  EXPECT_LT(chi2, 21.666);
}

TEST(Rng, UniformIntRejectsNonPositive) {
  Rng r(1);
  EXPECT_THROW(r.uniform_int(0), ValueError);
  EXPECT_THROW(r.uniform_int(-5), ValueError);
}

TEST(Rng, NormalMomentsRoughlyStandard) {
  Rng r(99);
  constexpr int kDraws = 100000;
  Scalar sum = 0, sumsq = 0;
  for (int i = 0; i < kDraws; ++i) {
    const Scalar x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  const Scalar mean = sum / kDraws;
  const Scalar var = sumsq / kDraws - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Rng, NormalAffine) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_DOUBLE_EQ(a.normal(2.0, 3.0), 2.0 + 3.0 * b.normal());
  }
}

TEST(Rng, SerializeRoundTripMidStream) {
  Rng r(2024);
  for (int i = 0; i < 37; ++i) r.uniform();
  r.normal();  // leave a Box-Muller spare cached
  const std::string state = r.serialize();
  Rng restored = Rng::deserialize(state);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(r.normal(), restored.normal());
    ASSERT_EQ(r.uniform(), restored.uniform());
    ASSERT_EQ(r.next_u64(), restored.next_u64());
  }
}

TEST(Rng, DeserializeRejectsGarbage) {
  EXPECT_THROW(Rng::deserialize("not a state"), IoError);
}

TEST(Rng, PermutationIsValidAndDeterministic) {
  Rng a(11), b(11);
  const std::vector<int> p = a.permutation(50);
  EXPECT_EQ(p, b.permutation(50));
  std::set<int> seen(p.begin(), p.end());
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), 49);
}

TEST(Rng, ShuffleKeepsElements) {
  Rng r(3);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> sorted = v;
  r.shuffle(v);
  std::vector<int> after = v;
  std::sort(after.begin(), after.end());
  EXPECT_EQ(after, sorted);
}

}  // namespace
}  // namespace cdgan
