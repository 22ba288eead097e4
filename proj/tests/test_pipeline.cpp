#include <doctest.h>

#include <cmath>

#include "minusface/pipeline.hpp"
#include "test_helpers.hpp"

using namespace minusface;
using testutil::max_abs_diff;
using testutil::random_image;
using testutil::random_rep;

namespace {

double l1_mean(const std::vector<float>& a) {
  double s = 0;
  for (float v : a) s += std::abs(v);
  return s / a.size();
}

// Minimal stand-in generators with exact behavior.
class IdentityModel : public nn::Model {
 public:
  explicit IdentityModel(int c) : Model(nn::Topology::EncoderDecoderSkip), c_(c) {}
  int input_channels() const override { return c_; }
  nn::TensorPtr forward(const nn::TensorPtr& input) override {
    return nn::Tensor::from_data(input->shape, input->value);
  }

 private:
  int c_;
};

class ZeroModel : public nn::Model {
 public:
  explicit ZeroModel(int c) : Model(nn::Topology::EncoderDecoderSkip), c_(c) {}
  int input_channels() const override { return c_; }
  nn::TensorPtr forward(const nn::TensorPtr& input) override {
    return nn::Tensor::zeros(input->shape);
  }

 private:
  int c_;
};

}  // namespace

TEST_CASE("residue: x = x' gives zero; x' = 0 gives x; mismatch throws") {
  const auto x = random_rep(12, 4, 4, 70);
  const auto zero_res = pipeline::residue(x, x);
  for (float v : zero_res.data) CHECK(v == 0.0f);

  const HighDimRep zero(12, 4, 4);
  CHECK(pipeline::residue(x, zero).data == x.data);

  const auto other = random_rep(12, 5, 4, 71);
  CHECK_THROWS_AS((void)pipeline::residue(x, other), std::invalid_argument);
}

TEST_CASE("decode(residue(x,x')) = decode(x) - decode(x') within 1e-5") {
  for (auto spec : {MappingSpec::dct8(), MappingSpec::haar2()}) {
    const auto x = random_rep(spec.channels(), 6, 6, 72, -2, 2);
    const auto xp = random_rep(spec.channels(), 6, 6, 73, -2, 2);
    const auto lhs = codec::decode(pipeline::residue(x, xp), spec);
    const auto dx = codec::decode(x, spec);
    const auto dxp = codec::decode(xp, spec);
    for (size_t i = 0; i < lhs.data.size(); ++i) {
      CHECK(std::abs(lhs.data[i] - (dx.data[i] - dxp.data[i])) <= 1e-5);
    }
  }
}

TEST_CASE("regenerate with an identity generator reproduces X within 1e-5") {
  const auto spec = MappingSpec::haar2();
  IdentityModel g(spec.channels());
  const auto img = random_image(8, 8, 74);
  const auto reg = pipeline::regenerate(img, g, spec);
  CHECK(max_abs_diff(reg.image_prime.data, img.data) <= 1e-5);
  CHECK(max_abs_diff(reg.x.data, reg.x_prime.data) <= 1e-9);
}

TEST_CASE("regenerate with a zero generator gives X' = 0 and r = x") {
  const auto spec = MappingSpec::haar2();
  ZeroModel g(spec.channels());
  const auto img = random_image(8, 8, 75);
  const auto reg = pipeline::regenerate(img, g, spec);
  for (float v : reg.image_prime.data) CHECK(v == 0.0f);
  const auto r = pipeline::residue(reg.x, reg.x_prime);
  CHECK(r.data == reg.x.data);
}

TEST_CASE("protect with perturbation NONE equals X - X' within 1e-5") {
  for (auto spec : {MappingSpec::dct8(), MappingSpec::haar2()}) {
    auto g = nn::build_generator(spec.channels(), 8, 7);  // untrained, arbitrary
    const auto img = random_image(16, 16, 76);
    pipeline::ProtectorConfig cfg;
    cfg.mapping = spec;
    cfg.perturbation = pipeline::Perturbation::None;
    const auto xp = pipeline::protect(img, *g, {0}, cfg);
    const auto reg = pipeline::regenerate(img, *g, spec);
    for (size_t i = 0; i < xp.data.size(); ++i) {
      CHECK(std::abs(xp.data[i] - (img.data[i] - reg.image_prime.data[i])) <= 1e-5);
    }
  }
}

TEST_CASE("protect: distinct seeds give distinct outputs, same seed is bitwise stable") {
  const auto spec = MappingSpec::dct8();
  auto g = nn::build_generator(spec.channels(), 8, 8);
  const auto img = random_image(16, 16, 77);
  pipeline::ProtectorConfig cfg;
  cfg.mapping = spec;
  const auto a = pipeline::protect(img, *g, {111}, cfg);
  const auto b = pipeline::protect(img, *g, {222}, cfg);
  const auto a2 = pipeline::protect(img, *g, {111}, cfg);
  CHECK(a.data == a2.data);
  CHECK(std::abs(l1_mean(a.data) - l1_mean(b.data)) > 0.0);
  double diff = 0;
  for (size_t i = 0; i < a.data.size(); ++i) diff += std::abs(a.data[i] - b.data[i]);
  CHECK(diff > 1e-3);
}

TEST_CASE("protect_from_residue matches decode(shuffle(r)) exactly") {
  const auto spec = MappingSpec::dct8();
  const auto r = random_rep(spec.channels(), 8, 8, 78, -2, 2);
  pipeline::ProtectorConfig cfg;
  cfg.mapping = spec;
  const ShuffleSeed seed{314159};
  const auto fused = pipeline::protect_from_residue(r, seed, cfg);
  const auto perm = perturb::permutation_from_seed(seed, spec.channels());
  const auto composed = codec::decode(perturb::shuffle_channels(r, perm), spec);
  CHECK(fused.data == composed.data);
}

TEST_CASE("protect with mask perturbation zeroes the configured share") {
  const auto spec = MappingSpec::dct8();
  const auto r = random_rep(spec.channels(), 8, 8, 79, 0.5, 1.5);
  pipeline::ProtectorConfig cfg;
  cfg.mapping = spec;
  cfg.perturbation = pipeline::Perturbation::Mask;
  cfg.mask_ratio = 0.25f;
  const auto a = pipeline::protect_from_residue(r, {5}, cfg);
  const auto b = pipeline::protect_from_residue(r, {5}, cfg);
  CHECK(a.data == b.data);
  const auto masked = perturb::mask_channels(r, {5}, 0.25);
  CHECK(a.data == codec::decode(masked, spec).data);
}

TEST_CASE("combined_loss: alpha=0 and beta=0 degenerate correctly; 5/1 default") {
  const auto images = nn::Tensor::from_data({1, 3, 4, 4}, std::vector<float>(48, 0.25f));
  const auto images_p = nn::Tensor::from_data({1, 3, 4, 4}, std::vector<float>(48, 0.75f));
  auto head = nn::make_arcface_head(3, 8, 16.0f, 0.3f, 80);
  const auto emb = nn::Tensor::from_data({1, 8}, std::vector<float>(8, 0.3f));

  pipeline::ProtectorConfig cfg;
  CHECK(cfg.alpha == 5.0f);
  CHECK(cfg.beta == 1.0f);

  cfg.alpha = 0.0f;
  cfg.beta = 1.0f;
  auto only_fr = pipeline::combined_loss(images, images_p, emb, {1}, head, cfg);
  CHECK(only_fr.total->value[0] == doctest::Approx(only_fr.l_fr->value[0]));

  cfg.alpha = 2.0f;
  cfg.beta = 0.0f;
  auto only_gen = pipeline::combined_loss(images, images_p, emb, {1}, head, cfg);
  CHECK(only_gen.total->value[0] == doctest::Approx(2.0f * only_gen.l_gen->value[0]));
  CHECK(only_gen.l_gen->value[0] == doctest::Approx(0.5f));
}

TEST_CASE("Eq.7 chain: |l1(X, X') - l1(d(r), 0)| <= 1e-5 for an arbitrary generator") {
  for (auto spec : {MappingSpec::dct8(), MappingSpec::haar2()}) {
    auto g = nn::build_generator(spec.channels(), 8, 9);
    for (uint64_t t = 0; t < 5; ++t) {
      const auto img = random_image(16, 16, 90 + t);
      const auto reg = pipeline::regenerate(img, *g, spec);
      const auto r = pipeline::residue(reg.x, reg.x_prime);
      const auto rprime = codec::decode(r, spec);

      double l1_img = 0;
      for (size_t i = 0; i < img.data.size(); ++i) {
        l1_img += std::abs(static_cast<double>(img.data[i]) - reg.image_prime.data[i]);
      }
      l1_img /= img.data.size();
      CHECK(std::abs(l1_img - l1_mean(rprime.data)) <= 1e-5);
    }
  }
}

TEST_CASE("Eq.8 algebra: decode(r + dr) = decode(r) + decode(dr) with dr = r - s(r)") {
  const auto spec = MappingSpec::dct8();
  const auto r = random_rep(spec.channels(), 8, 8, 95, -1, 1);
  const auto perm = perturb::permutation_from_seed({40}, spec.channels());
  const auto shuffled = perturb::shuffle_channels(r, perm);
  const auto dr = pipeline::residue(r, shuffled);  // r - s(r)

  HighDimRep r_plus_dr(r.channels, r.height, r.width);
  for (size_t i = 0; i < r.data.size(); ++i) r_plus_dr.data[i] = r.data[i] + dr.data[i];
  const auto lhs = codec::decode(r_plus_dr, spec);
  const auto d_r = codec::decode(r, spec);
  const auto d_dr = codec::decode(dr, spec);
  for (size_t i = 0; i < lhs.data.size(); ++i) {
    CHECK(std::abs(lhs.data[i] - (d_r.data[i] + d_dr.data[i])) <= 1e-5);
  }
}

TEST_CASE("clamped01 visualization copies stay within range; recognition path is unclamped") {
  const auto spec = MappingSpec::dct8();
  auto g = nn::build_generator(spec.channels(), 8, 10);
  const auto img = random_image(16, 16, 96);
  pipeline::ProtectorConfig cfg;
  cfg.mapping = spec;
  const auto xp = pipeline::protect(img, *g, {7}, cfg);
  bool out_of_range = false;
  for (float v : xp.data) out_of_range |= v < 0.0f || v > 1.0f;
  CHECK(out_of_range);  // untrained g produces energetic residues
  const auto vis = xp.clamped01();
  for (float v : vis.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}
