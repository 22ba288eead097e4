#pragma once

#include <string>
#include <vector>

#include "minusface/metrics.hpp"
#include "minusface/nn.hpp"
#include "minusface/pipeline.hpp"
#include "minusface/train.hpp"

namespace minusface::attack {

// Single forward pass of the recovery model; output clamped to [0,1] for
// metric computation.
SpatialImage recover(nn::Model& f_inv, const SpatialImage& x_p);
std::vector<SpatialImage> recover_batch(nn::Model& f_inv, const std::vector<SpatialImage>& x_p,
                                        int batch_size = 32);

// r' = e(X_p): the attacker's attempted inversion of r by re-encoding.
HighDimRep reencode_inversion(const SpatialImage& x_p, const MappingSpec& spec);

struct RecoveryStats {
  double ssim_mean = 0, ssim_std = 0;
  double psnr_mean = 0, psnr_std = 0;
  int count = 0;
  std::vector<double> per_image_ssim, per_image_psnr;
};

RecoveryStats evaluate_recovery(const std::vector<SpatialImage>& recovered,
                                const std::vector<SpatialImage>& originals);

// SSIM/PSNR of a constant image at the given originals' mean intensity;
// reported as the floor reference next to every recovery result.
RecoveryStats constant_mean_floor(const std::vector<SpatialImage>& originals, float mean_value);
float mean_intensity(const std::vector<SpatialImage>& images);

// Protect every cached sample under seeds drawn from `seed_stream` (or under
// the single `fixed_theta` for all samples when given).
std::vector<SpatialImage> protect_set(const train::ResidueCache& cache,
                                      const pipeline::ProtectorConfig& cfg, uint64_t seed_stream,
                                      const uint64_t* fixed_theta = nullptr);

struct FixedSeedReport {
  uint64_t theta = 0, theta_prime = 0;
  RecoveryStats same_theta;  // X_p generated under the attacker's theta
  RecoveryStats diff_theta;  // X_p generated under theta_prime != theta
  bool same_beats_diff() const { return same_theta.ssim_mean > diff_theta.ssim_mean; }
};

// Evaluates a fixed-theta-trained f^-1 on test images protected under the
// training theta and under a different theta_prime.
FixedSeedReport fixed_seed_experiment(nn::Model& f_inv_fixed, const train::ResidueCache& cache,
                                      const pipeline::ProtectorConfig& cfg, uint64_t theta,
                                      uint64_t theta_prime);

void write_report(std::ostream& out, const std::string& title, const RecoveryStats& stats);
void write_csv(std::ostream& out, const RecoveryStats& stats);

}  // namespace minusface::attack
