#include "minusface/pipeline.hpp"

#include <cstring>

namespace minusface::pipeline {

const char* perturbation_name(Perturbation p) {
  switch (p) {
    case Perturbation::Shuffle: return "shuffle";
    case Perturbation::Mask: return "mask";
    case Perturbation::None: return "none";
  }
  return "?";
}

Perturbation perturbation_from_name(const std::string& name) {
  if (name == "shuffle") return Perturbation::Shuffle;
  if (name == "mask") return Perturbation::Mask;
  if (name == "none") return Perturbation::None;
  throw std::invalid_argument("unknown perturbation '" + name +
                              "' (expected shuffle, mask or none)");
}

void ProtectorConfig::validate() const {
  if (alpha < 0.0f || beta < 0.0f) {
    throw std::invalid_argument("ProtectorConfig: alpha and beta must be >= 0");
  }
  if (perturbation == Perturbation::Mask && !(mask_ratio >= 0.0f && mask_ratio <= 1.0f)) {
    throw std::invalid_argument("ProtectorConfig: mask_ratio must be in [0, 1]");
  }
}

HighDimRep residue(const HighDimRep& x, const HighDimRep& x_prime) {
  if (x.channels != x_prime.channels || x.height != x_prime.height || x.width != x_prime.width) {
    throw std::invalid_argument("residue: shapes differ");
  }
  HighDimRep r(x.channels, x.height, x.width);
  for (size_t i = 0; i < x.data.size(); ++i) r.data[i] = x.data[i] - x_prime.data[i];
  return r;
}

Regeneration regenerate(const SpatialImage& image, nn::Model& g, const MappingSpec& spec) {
  if (g.input_channels() != spec.channels()) {
    throw std::invalid_argument("regenerate: generator channels do not match mapping");
  }
  Regeneration out;
  out.x = codec::encode(image, spec);
  nn::NoGradGuard no_grad;
  nn::TensorPtr xt = reps_to_tensor({&out.x});
  nn::TensorPtr yt = g.forward(xt);
  out.x_prime = rep_from_tensor(*yt, 0);
  out.image_prime = codec::decode(out.x_prime, spec);
  return out;
}

SpatialImage protect_from_residue(const HighDimRep& r, ShuffleSeed seed,
                                  const ProtectorConfig& cfg) {
  cfg.validate();
  if (r.channels != cfg.mapping.channels()) {
    throw std::invalid_argument("protect_from_residue: channel count does not match mapping");
  }
  switch (cfg.perturbation) {
    case Perturbation::Shuffle: {
      // decode(shuffle(r, perm)) with the channel gather fused in, avoiding
      // the intermediate copy; identical arithmetic order to the composition.
      const ChannelPermutation perm = perturb::permutation_from_seed(seed, r.channels);
      const int bc = cfg.mapping.block_channels();
      const std::vector<float> wts = codec::decode_weights(cfg.mapping);
      const size_t plane = r.plane_size();
      SpatialImage out(r.height, r.width);
      for (int k = 0; k < SpatialImage::kChannels; ++k) {
        float* dst = out.channel(k);
        for (int b = 0; b < bc; ++b) {
          const float wt = wts[b];
          const float* src = r.channel(perm.mapping[k * bc + b]);
          for (size_t i = 0; i < plane; ++i) dst[i] += wt * src[i];
        }
      }
      return out;
    }
    case Perturbation::Mask:
      return codec::decode(perturb::mask_channels(r, seed, cfg.mask_ratio), cfg.mapping);
    case Perturbation::None:
      return codec::decode(r, cfg.mapping);
  }
  throw std::logic_error("protect_from_residue: unreachable");
}

SpatialImage protect(const SpatialImage& image, nn::Model& g, ShuffleSeed seed,
                     const ProtectorConfig& cfg) {
  Regeneration reg = regenerate(image, g, cfg.mapping);
  const HighDimRep r = residue(reg.x, reg.x_prime);
  return protect_from_residue(r, seed, cfg);
}

CombinedLoss combined_loss(const nn::TensorPtr& images, const nn::TensorPtr& images_prime,
                           const nn::TensorPtr& embeddings, const std::vector<int>& labels,
                           const nn::ArcFaceHead& head, const ProtectorConfig& cfg) {
  cfg.validate();
  CombinedLoss out;
  out.l_gen = nn::l1_loss(images, images_prime);
  out.l_fr = nn::arcface_loss(embeddings, labels, head);
  out.total = nn::add(nn::scale(out.l_gen, cfg.alpha), nn::scale(out.l_fr, cfg.beta));
  return out;
}

nn::TensorPtr images_to_tensor(const std::vector<const SpatialImage*>& images) {
  if (images.empty()) throw std::invalid_argument("images_to_tensor: empty batch");
  const int h = images[0]->height, w = images[0]->width;
  const int b = static_cast<int>(images.size());
  nn::TensorPtr t = nn::Tensor::zeros({b, SpatialImage::kChannels, h, w});
  const size_t stride = images[0]->data.size();
  for (int i = 0; i < b; ++i) {
    if (images[i]->height != h || images[i]->width != w) {
      throw std::invalid_argument("images_to_tensor: mixed image sizes");
    }
    std::memcpy(t->value.data() + static_cast<size_t>(i) * stride, images[i]->data.data(),
                stride * sizeof(float));
  }
  return t;
}

nn::TensorPtr reps_to_tensor(const std::vector<const HighDimRep*>& reps) {
  if (reps.empty()) throw std::invalid_argument("reps_to_tensor: empty batch");
  const int c = reps[0]->channels, h = reps[0]->height, w = reps[0]->width;
  const int b = static_cast<int>(reps.size());
  nn::TensorPtr t = nn::Tensor::zeros({b, c, h, w});
  const size_t stride = reps[0]->data.size();
  for (int i = 0; i < b; ++i) {
    if (reps[i]->channels != c || reps[i]->height != h || reps[i]->width != w) {
      throw std::invalid_argument("reps_to_tensor: mixed rep shapes");
    }
    std::memcpy(t->value.data() + static_cast<size_t>(i) * stride, reps[i]->data.data(),
                stride * sizeof(float));
  }
  return t;
}

SpatialImage image_from_tensor(const nn::Tensor& t, int batch_index) {
  if (t.shape.size() != 4 || t.shape[1] != SpatialImage::kChannels) {
    throw std::invalid_argument("image_from_tensor: tensor is not (B,3,H,W)");
  }
  SpatialImage img(t.shape[2], t.shape[3]);
  const size_t stride = img.data.size();
  std::memcpy(img.data.data(), t.value.data() + static_cast<size_t>(batch_index) * stride,
              stride * sizeof(float));
  return img;
}

HighDimRep rep_from_tensor(const nn::Tensor& t, int batch_index) {
  if (t.shape.size() != 4) throw std::invalid_argument("rep_from_tensor: tensor is not 4-dim");
  HighDimRep rep(t.shape[1], t.shape[2], t.shape[3]);
  const size_t stride = rep.data.size();
  std::memcpy(rep.data.data(), t.value.data() + static_cast<size_t>(batch_index) * stride,
              stride * sizeof(float));
  return rep;
}

}  // namespace minusface::pipeline
