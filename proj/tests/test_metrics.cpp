#include <doctest.h>

#include <algorithm>

#include "minusface/metrics.hpp"
#include "test_helpers.hpp"

using namespace minusface;
using testutil::random_image;

namespace {

// Brute-force oracle for tpr_at_fpr over every candidate threshold, including
// the reject-everything sentinel.
double oracle_tpr_at_fpr(const std::vector<double>& scores, const std::vector<bool>& same,
                         double target) {
  long n_pos = 0, n_neg = 0;
  for (bool s : same) (s ? n_pos : n_neg)++;
  std::vector<double> cands = scores;
  std::sort(cands.begin(), cands.end());
  double best_t = 1e300;  // reject everything: FPR 0, TPR 0
  for (double t : cands) {
    long fp = 0;
    for (size_t i = 0; i < scores.size(); ++i) fp += !same[i] && scores[i] >= t;
    if (static_cast<double>(fp) / n_neg <= target) best_t = std::min(best_t, t);
  }
  long tp = 0;
  for (size_t i = 0; i < scores.size(); ++i) tp += same[i] && scores[i] >= best_t;
  return n_pos ? static_cast<double>(tp) / n_pos : 0.0;
}

SpatialImage toy_face_like(int size, uint64_t seed) {
  // a smooth blob over a flat background, enough texture for SSIM
  SpatialImage img(size, size, 0.35f);
  SplitMix64 rng(seed);
  const double cx = size / 2.0 + rng.uniform(-2, 2), cy = size / 2.0 + rng.uniform(-2, 2);
  for (int k = 0; k < 3; ++k) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        img.at(k, y, x) += static_cast<float>(0.5 * std::exp(-d2 / (size * 1.5)));
      }
    }
  }
  return img;
}

}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
  const auto a = random_image(32, 32, 1);
  CHECK(metrics::ssim(a, a) == 1.0);
}

TEST_CASE("ssim is symmetric") {
  const auto a = random_image(24, 30, 2);
  const auto b = random_image(24, 30, 3);
  CHECK(std::abs(metrics::ssim(a, b) - metrics::ssim(b, a)) <= 1e-9);
}

TEST_CASE("ssim of a random binary image against its negative is strongly negative") {
  SpatialImage a(32, 32);
  SplitMix64 rng(4);
  for (float& v : a.data) v = rng.next_below(2) ? 1.0f : 0.0f;
  SpatialImage b = a;
  for (float& v : b.data) v = 1.0f - v;
  CHECK(metrics::ssim(a, b) < 0.0);
}

TEST_CASE("a +0.1 luminance shift lowers ssim below 1 but keeps it above 0.5") {
  const auto a = toy_face_like(32, 5);
  SpatialImage b = a;
  for (float& v : b.data) v = std::min(1.0f, v + 0.1f);
  const double s = metrics::ssim(a, b);
  CHECK(s < 1.0);
  CHECK(s > 0.5);
}

TEST_CASE("ssim rejects mismatched shapes and tiny images") {
  const auto a = random_image(32, 32, 6);
  const auto b = random_image(16, 32, 7);
  CHECK_THROWS_AS(metrics::ssim(a, b), std::invalid_argument);
  const auto tiny = random_image(8, 8, 8);
  CHECK_THROWS_AS(metrics::ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("psnr: identical images cap at 100 dB") {
  const auto a = random_image(16, 16, 9);
  CHECK(metrics::psnr(a, a) == 100.0);
}

TEST_CASE("psnr formula: MSE 0.01 -> 20 dB, MSE 1e-4 -> 40 dB") {
  const auto a = random_image(16, 16, 10);
  SpatialImage b = a;
  for (float& v : b.data) v += 0.1f;
  CHECK(metrics::psnr(a, b) == doctest::Approx(20.0).epsilon(1e-4));
  SpatialImage c = a;
  for (float& v : c.data) v += 0.01f;
  CHECK(metrics::psnr(a, c) == doctest::Approx(40.0).epsilon(1e-4));
}

TEST_CASE("psnr strictly decreases in MSE") {
  const auto a = random_image(16, 16, 11);
  double prev = 1e9;
  for (float eps : {0.01f, 0.02f, 0.05f, 0.1f, 0.2f}) {
    SpatialImage b = a;
    for (float& v : b.data) v += eps;
    const double p = metrics::psnr(a, b);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("verify_pairs: perfectly separated scores give accuracy 1") {
  std::vector<std::vector<float>> ea, eb;
  std::vector<bool> same;
  SplitMix64 rng(12);
  for (int i = 0; i < 40; ++i) {
    const bool s = i % 2 == 0;
    // same pairs aligned, different pairs anti-aligned
    std::vector<float> v{1.0f, 0.0f};
    ea.push_back(v);
    eb.push_back(s ? v : std::vector<float>{-1.0f, 0.0f});
    same.push_back(s);
  }
  const auto res = metrics::verify_pairs(ea, eb, same);
  CHECK(res.accuracy == 1.0);
}

TEST_CASE("verify_pairs: random labels and scores stay near chance for n=200") {
  SplitMix64 rng(13);
  std::vector<double> scores;
  std::vector<bool> same;
  for (int i = 0; i < 200; ++i) {
    scores.push_back(rng.uniform(-1, 1));
    same.push_back(rng.next_below(2) == 1);
  }
  const auto res = metrics::verify_scores(scores, same);
  // best-threshold accuracy is optimistically biased, so allow the high side
  CHECK(res.accuracy >= 0.45);
  CHECK(res.accuracy <= 0.65);
}

TEST_CASE("verify_pairs: a single pair lands on the correct side of some threshold") {
  const auto res = metrics::verify_pairs({{0.5f, 0.5f}}, {{0.5f, 0.5f}}, {true});
  CHECK(res.accuracy == 1.0);
}

TEST_CASE("verify_pairs rejects empty input") {
  CHECK_THROWS_AS(metrics::verify_pairs({}, {}, {}), std::invalid_argument);
}

TEST_CASE("verify accuracy is invariant under strictly monotone score transforms") {
  SplitMix64 rng(14);
  std::vector<double> scores;
  std::vector<bool> same;
  for (int i = 0; i < 100; ++i) {
    scores.push_back(rng.uniform(-1, 1));
    same.push_back(rng.next_double() < 0.5);
  }
  const auto base = metrics::verify_scores(scores, same);
  std::vector<double> warped = scores;
  for (double& s : warped) s = std::tanh(3 * s) * 10 + 2;  // strictly increasing
  const auto after = metrics::verify_scores(warped, same);
  CHECK(base.accuracy == after.accuracy);
}

TEST_CASE("tpr_at_fpr: perfect separation gives 1 at any target") {
  std::vector<double> scores;
  std::vector<bool> same;
  for (int i = 0; i < 50; ++i) {
    scores.push_back(i < 25 ? 0.9 + i * 1e-3 : -0.9 + i * 1e-3);
    same.push_back(i < 25);
  }
  CHECK(metrics::tpr_at_fpr(scores, same, 0.01) == 1.0);
  CHECK(metrics::tpr_at_fpr(scores, same, 0.5) == 1.0);
}

TEST_CASE("tpr_at_fpr: all-identical scores give 0 below fpr 1") {
  std::vector<double> scores(20, 0.3);
  std::vector<bool> same(20);
  for (int i = 0; i < 10; ++i) same[i] = true;
  CHECK(metrics::tpr_at_fpr(scores, same, 0.01) == 0.0);
}

TEST_CASE("tpr_at_fpr matches the brute-force oracle") {
  // hand-built 10-score case
  const std::vector<double> hand = {0.9, 0.8, 0.75, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  const std::vector<bool> hand_same = {true, true, false, true, true,
                                       false, true, false, false, false};
  for (double target : {0.05, 0.2, 0.26, 0.5}) {
    CHECK(metrics::tpr_at_fpr(hand, hand_same, target) ==
          oracle_tpr_at_fpr(hand, hand_same, target));
  }
  SplitMix64 rng(15);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> scores;
    std::vector<bool> same;
    for (int i = 0; i < 30; ++i) {
      scores.push_back(rng.uniform(-1, 1));
      same.push_back(rng.next_below(2) == 1);
    }
    if (std::count(same.begin(), same.end(), false) == 0) continue;
    for (double target : {0.1, 0.33, 0.5}) {
      CHECK(metrics::tpr_at_fpr(scores, same, target) == oracle_tpr_at_fpr(scores, same, target));
    }
  }
}

TEST_CASE("tpr_at_fpr input validation") {
  CHECK_THROWS_AS(metrics::tpr_at_fpr({}, {}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(metrics::tpr_at_fpr({1.0}, {true}, 0.1), std::invalid_argument);  // no negatives
  CHECK_THROWS_AS(metrics::tpr_at_fpr({1.0, 0.0}, {true, false}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(metrics::tpr_at_fpr({1.0, 0.0}, {true, false}, 1.0), std::invalid_argument);
}
