#include "minusface/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace minusface {

bool ChannelPermutation::is_identity() const {
  for (uint32_t i = 0; i < mapping.size(); ++i) {
    if (mapping[i] != i) return false;
  }
  return true;
}

bool ChannelPermutation::is_valid() const {
  std::vector<uint32_t> sorted = mapping;
  std::sort(sorted.begin(), sorted.end());
  for (uint32_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != i) return false;
  }
  return true;
}

ChannelPermutation ChannelPermutation::inverse() const {
  ChannelPermutation inv;
  inv.mapping.resize(mapping.size());
  for (uint32_t i = 0; i < mapping.size(); ++i) inv.mapping[mapping[i]] = i;
  return inv;
}

namespace perturb {

ChannelPermutation permutation_from_seed(ShuffleSeed seed, int channels) {
  if (channels < 1) throw std::invalid_argument("permutation_from_seed: channels must be >= 1");
  ChannelPermutation perm;
  perm.mapping.resize(channels);
  std::iota(perm.mapping.begin(), perm.mapping.end(), 0u);
  SplitMix64 rng(seed.value);
  for (int i = channels - 1; i > 0; --i) {
    const uint64_t j = rng.next_below(static_cast<uint64_t>(i) + 1);
    std::swap(perm.mapping[i], perm.mapping[j]);
  }
  return perm;
}

HighDimRep shuffle_channels(const HighDimRep& rep, const ChannelPermutation& perm) {
  if (perm.mapping.size() != static_cast<size_t>(rep.channels)) {
    throw std::invalid_argument("shuffle_channels: permutation length " +
                                std::to_string(perm.mapping.size()) + " != channel count " +
                                std::to_string(rep.channels));
  }
  HighDimRep out(rep.channels, rep.height, rep.width);
  const size_t plane = rep.plane_size();
  for (int i = 0; i < rep.channels; ++i) {
    std::memcpy(out.channel(i), rep.channel(perm.mapping[i]), plane * sizeof(float));
  }
  return out;
}

std::vector<uint32_t> mask_indices(ShuffleSeed seed, int channels, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("mask ratio must be in [0, 1]");
  }
  const int k = static_cast<int>(std::lround(ratio * channels));
  ChannelPermutation perm = permutation_from_seed(seed, channels);
  std::vector<uint32_t> idx(perm.mapping.begin(), perm.mapping.begin() + k);
  return idx;
}

HighDimRep mask_channels(const HighDimRep& rep, ShuffleSeed seed, double ratio) {
  const auto idx = mask_indices(seed, rep.channels, ratio);
  HighDimRep out = rep;
  const size_t plane = rep.plane_size();
  for (uint32_t c : idx) {
    std::memset(out.channel(c), 0, plane * sizeof(float));
  }
  return out;
}

}  // namespace perturb
}  // namespace minusface
