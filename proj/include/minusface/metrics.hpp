#pragma once

#include <vector>

#include "minusface/image.hpp"

namespace minusface::metrics {

// Single-scale SSIM for unit dynamic range: 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2, averaged over channels and valid (no padding)
// window positions. Inputs are expected in [0,1].
double ssim(const SpatialImage& a, const SpatialImage& b);

// 10 * log10(1 / MSE) for unit dynamic range, capped at 100 dB.
double psnr(const SpatialImage& a, const SpatialImage& b);
constexpr double kPsnrCap = 100.0;

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

struct VerificationResult {
  double accuracy = 0.0;
  double threshold = 0.0;  // decision: same iff score >= threshold
};

// Cosine similarity per pair, exhaustive threshold sweep over midpoints of
// sorted scores; returns the best accuracy and its threshold.
VerificationResult verify_pairs(const std::vector<std::vector<float>>& embeddings_a,
                                const std::vector<std::vector<float>>& embeddings_b,
                                const std::vector<bool>& same_labels);

// Threshold sweep on precomputed scores (what verify_pairs runs on cosines).
VerificationResult verify_scores(const std::vector<double>& scores,
                                 const std::vector<bool>& same_labels);

// Accuracy of a fixed threshold on given scores.
double accuracy_at_threshold(const std::vector<double>& scores, const std::vector<bool>& same,
                             double threshold);

// TPR at the smallest threshold whose empirical FPR is <= target_fpr.
double tpr_at_fpr(const std::vector<double>& scores, const std::vector<bool>& same,
                  double target_fpr);

}  // namespace minusface::metrics
