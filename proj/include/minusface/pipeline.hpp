#pragma once

#include <vector>

#include "minusface/codec.hpp"
#include "minusface/image.hpp"
#include "minusface/nn.hpp"
#include "minusface/perturb.hpp"

namespace minusface::pipeline {

enum class Perturbation { Shuffle, Mask, None };

const char* perturbation_name(Perturbation p);
Perturbation perturbation_from_name(const std::string& name);

struct ProtectorConfig {
  MappingSpec mapping = MappingSpec::dct8();
  float alpha = 5.0f;  // weight on the regeneration L1 term
  float beta = 1.0f;   // weight on the recognition term
  Perturbation perturbation = Perturbation::Shuffle;
  float mask_ratio = 0.25f;

  void validate() const;
};

// r = x - x'
HighDimRep residue(const HighDimRep& x, const HighDimRep& x_prime);

struct Regeneration {
  HighDimRep x;        // e(X)
  HighDimRep x_prime;  // g(e(X))
  SpatialImage image_prime;  // d(g(e(X)))
};

// x = e(X), x' = g(x), X' = d(x'). Runs g without recording gradients.
Regeneration regenerate(const SpatialImage& image, nn::Model& g, const MappingSpec& spec);

// d(perturb(r; seed)) for the configured perturbation. The NONE mode skips
// the perturbation entirely (ablation only) and callers must flag it in any
// persisted output.
SpatialImage protect_from_residue(const HighDimRep& r, ShuffleSeed seed,
                                  const ProtectorConfig& cfg);

// Full transformation F = d(s(r; theta)) with r = e(X) - g(e(X)).
// Deterministic given (image, g, seed, cfg). Output is unclamped; use
// SpatialImage::clamped01 for visualization copies.
SpatialImage protect(const SpatialImage& image, nn::Model& g, ShuffleSeed seed,
                     const ProtectorConfig& cfg);

struct CombinedLoss {
  nn::TensorPtr total;  // alpha * l_gen + beta * l_fr
  nn::TensorPtr l_gen;
  nn::TensorPtr l_fr;
};

CombinedLoss combined_loss(const nn::TensorPtr& images, const nn::TensorPtr& images_prime,
                           const nn::TensorPtr& embeddings, const std::vector<int>& labels,
                           const nn::ArcFaceHead& head, const ProtectorConfig& cfg);

// ---- tensor bridging -------------------------------------------------------
nn::TensorPtr images_to_tensor(const std::vector<const SpatialImage*>& images);
nn::TensorPtr reps_to_tensor(const std::vector<const HighDimRep*>& reps);
SpatialImage image_from_tensor(const nn::Tensor& t, int batch_index);
HighDimRep rep_from_tensor(const nn::Tensor& t, int batch_index);

}  // namespace minusface::pipeline
