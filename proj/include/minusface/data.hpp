#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "minusface/image.hpp"

namespace minusface::data {

enum class Split { DefenderTrain, DefenderTest, Attacker };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ToySample {
  SpatialImage image;
  int label = 0;
  Split split = Split::DefenderTrain;
};

// Synthetic identity dataset. Identities are split half defender / half
// attacker; defender images are split 80/20 into train/test. Attacker and
// defender-test therefore share no identities.
struct ToyDataset {
  int identities = 0;
  int images_per_identity = 0;
  int size = 0;  // H == W
  std::vector<ToySample> samples;

  std::vector<int> indices(Split split) const;
  int class_count(Split split) const;  // distinct labels within a split
};

// Each identity is a seeded parametric face: background shade, face ellipse
// geometry, eye/nose/mouth positions and intensities. Per image nuisances:
// position jitter <= 2 px, brightness jitter <= 0.1, additive noise with
// sigma 0.02, random horizontal flip. Deterministic from seed.
ToyDataset generate_toy_dataset(int n_ids, int per_id, int size, uint64_t seed);

// 8-bit PNG or binary PPM (P6) by content (load) / extension (save). Values
// scale to [0,1]; save clamps and quantizes.
SpatialImage load_image(const std::string& path);
void save_image(const SpatialImage& image, const std::string& path);

SpatialImage hflip(const SpatialImage& image);

struct VerificationPair {
  int index_a = 0;
  int index_b = 0;
  bool same = false;
};

// Seeded, balanced 50/50 same/different pairs drawn from one split, without
// repeats when capacity allows.
std::vector<VerificationPair> make_pairs(const ToyDataset& ds, int n_pairs, uint64_t seed,
                                         Split split = Split::DefenderTest);

// Directory per identity, zero-padded image filenames, plus a manifest of
// "path<TAB>label<TAB>split" lines.
void save_dataset(const ToyDataset& ds, const std::string& dir);
ToyDataset load_dataset(const std::string& dir);

}  // namespace minusface::data
