#include "minusface/attack.hpp"

#include <cmath>
#include <ostream>

namespace minusface::attack {

SpatialImage recover(nn::Model& f_inv, const SpatialImage& x_p) {
  return recover_batch(f_inv, {x_p}, 1).front();
}

std::vector<SpatialImage> recover_batch(nn::Model& f_inv, const std::vector<SpatialImage>& x_p,
                                        int batch_size) {
  if (x_p.empty()) throw std::invalid_argument("recover_batch: empty input");
  nn::NoGradGuard no_grad;
  std::vector<SpatialImage> out;
  out.reserve(x_p.size());
  for (size_t start = 0; start < x_p.size(); start += batch_size) {
    const size_t bsz = std::min(static_cast<size_t>(batch_size), x_p.size() - start);
    std::vector<const SpatialImage*> ptrs;
    for (size_t i = 0; i < bsz; ++i) ptrs.push_back(&x_p[start + i]);
    nn::TensorPtr rec = f_inv.forward(pipeline::images_to_tensor(ptrs));
    for (size_t i = 0; i < bsz; ++i) {
      out.push_back(pipeline::image_from_tensor(*rec, static_cast<int>(i)).clamped01());
    }
  }
  return out;
}

HighDimRep reencode_inversion(const SpatialImage& x_p, const MappingSpec& spec) {
  return codec::encode(x_p, spec);
}

namespace {

void fill_stats(RecoveryStats& st) {
  const auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(v.size()));
  };
  moments(st.per_image_ssim, st.ssim_mean, st.ssim_std);
  moments(st.per_image_psnr, st.psnr_mean, st.psnr_std);
  st.count = static_cast<int>(st.per_image_ssim.size());
}

}  // namespace

RecoveryStats evaluate_recovery(const std::vector<SpatialImage>& recovered,
                                const std::vector<SpatialImage>& originals) {
  if (recovered.empty() || recovered.size() != originals.size()) {
    throw std::invalid_argument("evaluate_recovery: sets must be paired and non-empty");
  }
  RecoveryStats st;
  for (size_t i = 0; i < recovered.size(); ++i) {
    st.per_image_ssim.push_back(metrics::ssim(recovered[i], originals[i]));
    st.per_image_psnr.push_back(metrics::psnr(recovered[i], originals[i]));
  }
  fill_stats(st);
  return st;
}

float mean_intensity(const std::vector<SpatialImage>& images) {
  double sum = 0;
  size_t n = 0;
  for (const auto& im : images) {
    for (float v : im.data) sum += v;
    n += im.data.size();
  }
  return n ? static_cast<float>(sum / static_cast<double>(n)) : 0.0f;
}

RecoveryStats constant_mean_floor(const std::vector<SpatialImage>& originals, float mean_value) {
  if (originals.empty()) throw std::invalid_argument("constant_mean_floor: empty set");
  std::vector<SpatialImage> constant;
  constant.reserve(originals.size());
  for (const auto& im : originals) {
    constant.emplace_back(im.height, im.width, mean_value);
  }
  return evaluate_recovery(constant, originals);
}

std::vector<SpatialImage> protect_set(const train::ResidueCache& cache,
                                      const pipeline::ProtectorConfig& cfg, uint64_t seed_stream,
                                      const uint64_t* fixed_theta) {
  std::vector<SpatialImage> out;
  out.reserve(cache.count());
  for (int i = 0; i < cache.count(); ++i) {
    const ShuffleSeed seed{fixed_theta ? *fixed_theta : mix_seed(seed_stream, 0x5E7, i)};
    out.push_back(pipeline::protect_from_residue(cache.residue(i), seed, cfg));
  }
  return out;
}

FixedSeedReport fixed_seed_experiment(nn::Model& f_inv_fixed, const train::ResidueCache& cache,
                                      const pipeline::ProtectorConfig& cfg, uint64_t theta,
                                      uint64_t theta_prime) {
  if (theta == theta_prime) {
    throw std::invalid_argument("fixed_seed_experiment: theta_prime must differ from theta");
  }
  std::vector<SpatialImage> originals;
  for (int i = 0; i < cache.count(); ++i) originals.push_back(cache.original(i));

  FixedSeedReport rep;
  rep.theta = theta;
  rep.theta_prime = theta_prime;
  const auto same = protect_set(cache, cfg, 0, &theta);
  const auto diff = protect_set(cache, cfg, 0, &theta_prime);
  rep.same_theta = evaluate_recovery(recover_batch(f_inv_fixed, same), originals);
  rep.diff_theta = evaluate_recovery(recover_batch(f_inv_fixed, diff), originals);
  return rep;
}

void write_report(std::ostream& out, const std::string& title, const RecoveryStats& stats) {
  out << "report=" << title << "\n"
      << "count=" << stats.count << "\n"
      << "ssim_mean=" << stats.ssim_mean << "\n"
      << "ssim_std=" << stats.ssim_std << "\n"
      << "psnr_mean=" << stats.psnr_mean << "\n"
      << "psnr_std=" << stats.psnr_std << "\n";
}

void write_csv(std::ostream& out, const RecoveryStats& stats) {
  out << "index,ssim,psnr\n";
  for (int i = 0; i < stats.count; ++i) {
    out << i << "," << stats.per_image_ssim[i] << "," << stats.per_image_psnr[i] << "\n";
  }
}

}  // namespace minusface::attack
