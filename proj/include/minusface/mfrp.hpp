#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "minusface/image.hpp"

namespace minusface::mfrp {

// MFRP tensor container, 19-byte header followed by C*H*W IEEE-754 f32
// little-endian values in channel-major row-major order:
//   offset 0  magic   "MFRP" (0x4D 0x46 0x52 0x50)
//   offset 4  version 0x01
//   offset 5  kind    0 = DCT8 rep, 1 = HAAR2 rep, 2 = spatial image
//   offset 6  flags   bit 0: unperturbed (ablation output), bit 1: clamped
//   offset 7  C, H, W as unsigned 32-bit little-endian
constexpr size_t kHeaderSize = 19;
constexpr uint8_t kVersion = 0x01;

enum Kind : uint8_t { kKindDct8 = 0, kKindHaar2 = 1, kKindSpatial = 2 };
enum Flags : uint8_t { kFlagUnperturbed = 0x01, kFlagClamped = 0x02 };

void save_rep(const std::string& path, const HighDimRep& rep, MappingKind kind);
HighDimRep load_rep(const std::string& path, MappingKind* kind_out = nullptr);

void save_spatial(const std::string& path, const SpatialImage& image, uint8_t flags = 0);
SpatialImage load_spatial(const std::string& path, uint8_t* flags_out = nullptr);

// Exact on-disk size of a tensor with the given element count.
inline size_t file_size(size_t elements) { return kHeaderSize + elements * 4; }

}  // namespace minusface::mfrp

namespace minusface::mfck {

// MFCK checkpoint, MFRP-style: magic "MFCK", version 0x01, u32le entry count,
// then per parameter: u32le name length, name bytes, u32le rank, u32le dims,
// f32le data. Loading validates names and shapes against the destination.
void save(const std::string& path,
          const std::vector<std::pair<std::string, std::pair<std::vector<int>,
                                                             const std::vector<float>*>>>& params);
// Returns (name -> (shape, data)) in file order.
std::vector<std::pair<std::string, std::pair<std::vector<int>, std::vector<float>>>> load(
    const std::string& path);

}  // namespace minusface::mfck
