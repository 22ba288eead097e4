#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace minusface {

// A 3-channel spatial image, channel-major row-major float storage. Pixel
// values are nominally in [0,1] but residues and decoded representations may
// leave that range; nothing here clamps.
struct SpatialImage {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> data;  // kChannels * height * width

  SpatialImage() = default;
  SpatialImage(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<size_t>(kChannels) * h * w, fill) {
    if (h < 1 || w < 1) throw std::invalid_argument("SpatialImage: dims must be >= 1");
  }

  float& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float* channel(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
  const float* channel(int c) const {
    return data.data() + static_cast<size_t>(c) * height * width;
  }
  size_t size() const { return data.size(); }

  SpatialImage clamped01() const {
    SpatialImage out = *this;
    for (float& v : out.data) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return out;
  }
};

// A (C, H, W) channel stack, same storage convention as SpatialImage. Holds
// the high-dimensional representations x, x', r, s(r;theta).
struct HighDimRep {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  HighDimRep() = default;
  HighDimRep(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {
    if (c < 1 || h < 1 || w < 1) throw std::invalid_argument("HighDimRep: dims must be >= 1");
  }

  float& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float* channel(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
  const float* channel(int c) const {
    return data.data() + static_cast<size_t>(c) * height * width;
  }
  size_t plane_size() const { return static_cast<size_t>(height) * width; }
  size_t size() const { return data.size(); }
};

enum class MappingKind : uint8_t { Dct8 = 0, Haar2 = 1 };

// Which encode/decode pair is active plus its geometry.
//
// Channel layout:
//   DCT8:  c = color*64 + u*8 + v for frequency (u,v) in [0,8)^2 (row-major)
//   HAAR2: c = color*4 + b with subbands b in {LL, LH, HL, HH} in that order
struct MappingSpec {
  MappingKind kind = MappingKind::Dct8;

  int upsample_factor() const { return kind == MappingKind::Dct8 ? 8 : 2; }
  int block_channels() const {  // coefficients per color
    const int f = upsample_factor();
    return f * f;
  }
  int channels() const { return SpatialImage::kChannels * block_channels(); }
  const char* name() const { return kind == MappingKind::Dct8 ? "dct8" : "haar2"; }

  static MappingSpec dct8() { return MappingSpec{MappingKind::Dct8}; }
  static MappingSpec haar2() { return MappingSpec{MappingKind::Haar2}; }
  static MappingSpec from_name(const std::string& name);
};

}  // namespace minusface
