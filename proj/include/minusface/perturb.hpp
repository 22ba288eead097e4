#pragma once

#include <cstdint>
#include <vector>

#include "minusface/common.hpp"
#include "minusface/image.hpp"

namespace minusface {

// Sample-wise seed driving a channel perturbation. Any 64-bit value is valid.
struct ShuffleSeed {
  uint64_t value = 0;
};

// Bijection on channel indices: output channel i takes input channel
// mapping[i].
struct ChannelPermutation {
  std::vector<uint32_t> mapping;

  bool is_identity() const;
  // Sorted-equals-range check.
  bool is_valid() const;
  ChannelPermutation inverse() const;
};

namespace perturb {

// Deterministic Fisher-Yates permutation driven by SplitMix64 (constants in
// common.hpp), uniform over all channels! permutations. Platform-independent.
ChannelPermutation permutation_from_seed(ShuffleSeed seed, int channels);

// s(r; theta): output channel i is input channel perm.mapping[i].
HighDimRep shuffle_channels(const HighDimRep& rep, const ChannelPermutation& perm);

// The round(ratio * C) channel indices a seeded partial shuffle selects;
// exposed so tests can pin the selection.
std::vector<uint32_t> mask_indices(ShuffleSeed seed, int channels, double ratio);

// m(r; theta): zero the selected channels, leave the rest untouched.
HighDimRep mask_channels(const HighDimRep& rep, ShuffleSeed seed, double ratio);

}  // namespace perturb
}  // namespace minusface
