#include <doctest.h>

#include <algorithm>
#include <set>

#include "minusface/perturb.hpp"
#include "test_helpers.hpp"

using namespace minusface;
using testutil::random_rep;

TEST_CASE("permutation_from_seed is deterministic") {
  const auto p1 = perturb::permutation_from_seed({0xDEADBEEF}, 192);
  const auto p2 = perturb::permutation_from_seed({0xDEADBEEF}, 192);
  CHECK(p1.mapping == p2.mapping);
}

TEST_CASE("permutation_from_seed with one channel is the identity") {
  const auto p = perturb::permutation_from_seed({123}, 1);
  REQUIRE(p.mapping.size() == 1);
  CHECK(p.mapping[0] == 0);
  CHECK(p.is_identity());
}

TEST_CASE("permutations are bijections for random seeds and sizes") {
  SplitMix64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const int channels = 1 + static_cast<int>(rng.next_below(200));
    const auto p = perturb::permutation_from_seed({rng.next()}, channels);
    CHECK(p.is_valid());
  }
}

TEST_CASE("uniformity: fraction of permutations fixing channel 0 is about 1/192") {
  int fixed = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto p = perturb::permutation_from_seed({static_cast<uint64_t>(t) * 7919 + 13}, 192);
    if (p.mapping[0] == 0) ++fixed;
  }
  const double frac = static_cast<double>(fixed) / trials;
  CHECK(std::abs(frac - 1.0 / 192.0) <= 0.01);
}

TEST_CASE("distinct seeds give distinct permutations (no collisions in 10k draws)") {
  std::set<std::vector<uint32_t>> seen;
  for (int t = 0; t < 10000; ++t) {
    const auto p = perturb::permutation_from_seed({static_cast<uint64_t>(t)}, 192);
    seen.insert(p.mapping);
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("shuffle_channels: identity leaves the rep unchanged") {
  const auto rep = random_rep(16, 4, 4, 7);
  ChannelPermutation id;
  id.mapping.resize(16);
  for (uint32_t i = 0; i < 16; ++i) id.mapping[i] = i;
  const auto out = perturb::shuffle_channels(rep, id);
  CHECK(out.data == rep.data);
}

TEST_CASE("shuffle then inverse shuffle restores the rep") {
  const auto rep = random_rep(192, 4, 4, 8);
  const auto perm = perturb::permutation_from_seed({555}, 192);
  const auto back = perturb::shuffle_channels(perturb::shuffle_channels(rep, perm),
                                              perm.inverse());
  CHECK(back.data == rep.data);
}

TEST_CASE("shuffle conserves the channel multiset and the L1 norm") {
  const auto rep = random_rep(192, 5, 5, 9, -2, 2);
  const auto perm = perturb::permutation_from_seed({777}, 192);
  const auto out = perturb::shuffle_channels(rep, perm);

  auto channel_l1s = [](const HighDimRep& r) {
    std::vector<double> l1(r.channels, 0.0);
    for (int c = 0; c < r.channels; ++c) {
      for (size_t i = 0; i < r.plane_size(); ++i) l1[c] += std::abs(r.channel(c)[i]);
    }
    return l1;
  };
  auto a = channel_l1s(rep), b = channel_l1s(out);
  double total_a = 0, total_b = 0;
  for (double v : a) total_a += v;
  for (double v : b) total_b += v;
  CHECK(std::abs(total_a - total_b) <= 1e-9);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);  // per-channel sums are permuted, never altered
}

TEST_CASE("delta r = r - s(r) is nonzero for any non-identity permutation") {
  const auto rep = random_rep(32, 4, 4, 10);
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const auto perm = perturb::permutation_from_seed({seed}, 32);
    if (perm.is_identity()) continue;
    const auto out = perturb::shuffle_channels(rep, perm);
    double diff = 0;
    for (size_t i = 0; i < rep.data.size(); ++i) {
      diff += std::abs(static_cast<double>(rep.data[i]) - out.data[i]);
    }
    CHECK(diff > 0.0);
  }
}

TEST_CASE("shuffle_channels rejects length mismatch") {
  const auto rep = random_rep(16, 4, 4, 11);
  const auto perm = perturb::permutation_from_seed({1}, 8);
  CHECK_THROWS_AS((void)perturb::shuffle_channels(rep, perm), std::invalid_argument);
}

TEST_CASE("mask_channels: ratio 0 is a no-op, ratio 1 zeroes everything") {
  const auto rep = random_rep(192, 4, 4, 12);
  CHECK(perturb::mask_channels(rep, {3}, 0.0).data == rep.data);
  const auto all = perturb::mask_channels(rep, {3}, 1.0);
  for (float v : all.data) CHECK(v == 0.0f);
}

TEST_CASE("mask_channels: ratio 0.25 on 192 channels zeroes exactly 48, repeatably") {
  const auto rep = random_rep(192, 4, 4, 13, 0.5, 2.0);  // strictly nonzero values
  const auto m1 = perturb::mask_channels(rep, {0xBEEF}, 0.25);
  const auto m2 = perturb::mask_channels(rep, {0xBEEF}, 0.25);
  CHECK(m1.data == m2.data);
  int zeroed = 0;
  for (int c = 0; c < 192; ++c) {
    bool all_zero = true;
    for (size_t i = 0; i < m1.plane_size(); ++i) all_zero &= m1.channel(c)[i] == 0.0f;
    zeroed += all_zero;
  }
  CHECK(zeroed == 48);
  const auto idx = perturb::mask_indices({0xBEEF}, 192, 0.25);
  CHECK(idx.size() == 48);
}

TEST_CASE("mask_channels rejects ratios outside [0,1]") {
  const auto rep = random_rep(16, 4, 4, 14);
  CHECK_THROWS_AS((void)perturb::mask_channels(rep, {1}, -0.1), std::invalid_argument);
  CHECK_THROWS_AS((void)perturb::mask_channels(rep, {1}, 1.1), std::invalid_argument);
}
