#include "minusface/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace minusface::metrics {
namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_window() {
  static const std::vector<double> w = [] {
    std::vector<double> g(kWin * kWin);
    double sum = 0.0;
    for (int y = 0; y < kWin; ++y) {
      for (int x = 0; x < kWin; ++x) {
        const double dy = y - (kWin - 1) / 2.0;
        const double dx = x - (kWin - 1) / 2.0;
        g[y * kWin + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        sum += g[y * kWin + x];
      }
    }
    for (double& v : g) v /= sum;
    return g;
  }();
  return w;
}

void check_same_shape(const SpatialImage& a, const SpatialImage& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument(std::string(what) + ": image shapes differ");
  }
}

}  // namespace

double ssim(const SpatialImage& a, const SpatialImage& b) {
  check_same_shape(a, b, "ssim");
  if (a.height < kWin || a.width < kWin) {
    throw std::invalid_argument("ssim: images must be at least 11x11");
  }
  const auto& w = gaussian_window();
  const int h = a.height, wd = a.width;
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < SpatialImage::kChannels; ++c) {
    const float* pa = a.channel(c);
    const float* pb = b.channel(c);
    for (int y = 0; y + kWin <= h; ++y) {
      for (int x = 0; x + kWin <= wd; ++x) {
        double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
        for (int wy = 0; wy < kWin; ++wy) {
          const float* ra = pa + (y + wy) * wd + x;
          const float* rb = pb + (y + wy) * wd + x;
          const double* rw = w.data() + wy * kWin;
          for (int wx = 0; wx < kWin; ++wx) {
            const double va = ra[wx], vb = rb[wx], g = rw[wx];
            mu_a += g * va;
            mu_b += g * vb;
            aa += g * va * va;
            bb += g * vb * vb;
            ab += g * va * vb;
          }
        }
        const double var_a = aa - mu_a * mu_a;
        const double var_b = bb - mu_b * mu_b;
        const double cov = ab - mu_a * mu_b;
        total += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                 ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

double psnr(const SpatialImage& a, const SpatialImage& b) {
  check_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0 ? dot / denom : 0.0;
}

double accuracy_at_threshold(const std::vector<double>& scores, const std::vector<bool>& same,
                             double threshold) {
  int correct = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool decide_same = scores[i] >= threshold;
    if (decide_same == same[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

VerificationResult verify_pairs(const std::vector<std::vector<float>>& embeddings_a,
                                const std::vector<std::vector<float>>& embeddings_b,
                                const std::vector<bool>& same_labels) {
  const size_t n = embeddings_a.size();
  if (n == 0 || embeddings_b.size() != n || same_labels.size() != n) {
    throw std::invalid_argument("verify_pairs: empty or mismatched inputs");
  }
  std::vector<double> scores(n);
  for (size_t i = 0; i < n; ++i) {
    scores[i] = cosine_similarity(embeddings_a[i], embeddings_b[i]);
  }
  return verify_scores(scores, same_labels);
}

VerificationResult verify_scores(const std::vector<double>& scores,
                                 const std::vector<bool>& same_labels) {
  const size_t n = scores.size();
  if (n == 0 || same_labels.size() != n) {
    throw std::invalid_argument("verify_scores: empty or mismatched inputs");
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);  // everything decided "same"
  for (size_t i = 0; i + 1 < n; ++i) {
    if (sorted[i] < sorted[i + 1]) candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
  }
  candidates.push_back(sorted.back() + 1.0);  // everything decided "different"

  VerificationResult best;
  best.accuracy = -1.0;
  for (double t : candidates) {
    const double acc = accuracy_at_threshold(scores, same_labels, t);
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.threshold = t;
    }
  }
  return best;
}

double tpr_at_fpr(const std::vector<double>& scores, const std::vector<bool>& same,
                  double target_fpr) {
  if (scores.size() != same.size() || scores.empty()) {
    throw std::invalid_argument("tpr_at_fpr: empty or mismatched inputs");
  }
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
    throw std::invalid_argument("tpr_at_fpr: target_fpr must be in (0, 1)");
  }
  long n_pos = 0, n_neg = 0;
  for (bool s : same) (s ? n_pos : n_neg)++;
  if (n_neg == 0) throw std::invalid_argument("tpr_at_fpr: needs at least one negative pair");

  // Candidate thresholds are the observed scores; smaller thresholds admit
  // more pairs, so walk candidates ascending and keep the smallest feasible.
  std::vector<double> candidates(scores.begin(), scores.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_tpr = 0.0;  // threshold above max score: FPR 0, TPR 0
  for (double t : candidates) {
    long fp = 0, tp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (same[i] ? tp : fp)++;
    }
    if (static_cast<double>(fp) / static_cast<double>(n_neg) <= target_fpr) {
      best_tpr = n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0;
      break;  // ascending order: the first feasible candidate is the smallest
    }
  }
  return best_tpr;
}

}  // namespace minusface::metrics
