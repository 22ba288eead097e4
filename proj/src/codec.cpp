#include "minusface/codec.hpp"

#include <array>
#include <cmath>

namespace minusface {

MappingSpec MappingSpec::from_name(const std::string& name) {
  if (name == "dct8") return dct8();
  if (name == "haar2") return haar2();
  throw std::invalid_argument("unknown mapping '" + name + "' (expected dct8 or haar2)");
}

namespace codec {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Orthonormal DCT-II basis, A[u][x] = alpha(u) * cos((2x+1) u pi / 16).
const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> a{};
    for (int u = 0; u < 8; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        a[u][x] = alpha * std::cos((2 * x + 1) * u * kPi / 16.0);
      }
    }
    return a;
  }();
  return basis;
}

// Separable transform: out = A * in * A^T (forward) or A^T * in * A (inverse).
void transform8(const float* in, float* out, bool inverse) {
  const auto& a = dct_basis();
  double tmp[8][8];
  for (int u = 0; u < 8; ++u) {
    for (int y = 0; y < 8; ++y) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) {
        s += (inverse ? a[x][u] : a[u][x]) * in[x * 8 + y];
      }
      tmp[u][y] = s;
    }
  }
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) {
        s += tmp[u][y] * (inverse ? a[y][v] : a[v][y]);
      }
      out[u * 8 + v] = static_cast<float>(s);
    }
  }
}

void check_block(const std::vector<float>& b, const char* what) {
  if (b.size() != 64) {
    throw std::invalid_argument(std::string(what) + ": expected an 8x8 block (64 values), got " +
                                std::to_string(b.size()));
  }
}

// Orthonormal single-level 2x2 Haar, block [[a,b],[c,d]] -> (LL, LH, HL, HH).
void haar2_forward(const float* in, float* out) {
  const double a = in[0], b = in[1], c = in[2], d = in[3];
  out[0] = static_cast<float>((a + b + c + d) * 0.5);  // LL
  out[1] = static_cast<float>((a - b + c - d) * 0.5);  // LH
  out[2] = static_cast<float>((a + b - c - d) * 0.5);  // HL
  out[3] = static_cast<float>((a - b - c + d) * 0.5);  // HH
}

void haar2_inverse(const float* in, float* out) {
  const double ll = in[0], lh = in[1], hl = in[2], hh = in[3];
  out[0] = static_cast<float>((ll + lh + hl + hh) * 0.5);  // a
  out[1] = static_cast<float>((ll - lh + hl - hh) * 0.5);  // b
  out[2] = static_cast<float>((ll + lh - hl - hh) * 0.5);  // c
  out[3] = static_cast<float>((ll - lh - hl + hh) * 0.5);  // d
}

void block_forward(const MappingSpec& spec, const float* in, float* out) {
  if (spec.kind == MappingKind::Dct8) {
    transform8(in, out, false);
  } else {
    haar2_forward(in, out);
  }
}

void block_inverse(const MappingSpec& spec, const float* in, float* out) {
  if (spec.kind == MappingKind::Dct8) {
    transform8(in, out, true);
  } else {
    haar2_inverse(in, out);
  }
}

}  // namespace

void dct8_forward_raw(const float* in, float* out) { transform8(in, out, false); }
void dct8_inverse_raw(const float* in, float* out) { transform8(in, out, true); }

std::vector<float> dct8_forward(const std::vector<float>& block) {
  check_block(block, "dct8_forward");
  std::vector<float> out(64);
  dct8_forward_raw(block.data(), out.data());
  return out;
}

std::vector<float> dct8_inverse(const std::vector<float>& coeffs) {
  check_block(coeffs, "dct8_inverse");
  std::vector<float> out(64);
  dct8_inverse_raw(coeffs.data(), out.data());
  return out;
}

HighDimRep encode(const SpatialImage& image, const MappingSpec& spec) {
  if (image.height < 1 || image.width < 1 ||
      image.data.size() !=
          static_cast<size_t>(SpatialImage::kChannels) * image.height * image.width) {
    throw std::invalid_argument("encode: image must be a well-formed 3-channel SpatialImage");
  }
  const int h = image.height, w = image.width;
  const int bc = spec.block_channels();
  const int f = spec.upsample_factor();
  HighDimRep rep(spec.channels(), h, w);
  std::vector<float> block(bc), coeffs(bc);
  for (int k = 0; k < SpatialImage::kChannels; ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        // Replication makes the f x f block covering source pixel (i, j)
        // constant, so the block is filled with that single value.
        const float v = image.at(k, i, j);
        for (int t = 0; t < f * f; ++t) block[t] = v;
        block_forward(spec, block.data(), coeffs.data());
        for (int b = 0; b < bc; ++b) rep.at(k * bc + b, i, j) = coeffs[b];
      }
    }
  }
  return rep;
}

SpatialImage decode(const HighDimRep& rep, const MappingSpec& spec) {
  if (rep.channels != spec.channels()) {
    throw std::invalid_argument("decode: rep has " + std::to_string(rep.channels) +
                                " channels, mapping " + spec.name() + " expects " +
                                std::to_string(spec.channels()));
  }
  const int h = rep.height, w = rep.width;
  const int bc = spec.block_channels();
  const std::vector<float> wts = decode_weights(spec);
  const size_t plane = rep.plane_size();
  SpatialImage out(h, w);
  // Inverse-transform each block and decimate at its first sample, the exact
  // inverse of replication. Per pixel that collapses to a fixed dot product
  // across the block's coefficient channels, which is what runs here.
  for (int k = 0; k < SpatialImage::kChannels; ++k) {
    float* dst = out.channel(k);
    for (int b = 0; b < bc; ++b) {
      const float wt = wts[b];
      const float* src = rep.channel(k * bc + b);
      for (size_t i = 0; i < plane; ++i) dst[i] += wt * src[i];
    }
  }
  return out;
}

std::vector<float> decode_weights(const MappingSpec& spec) {
  auto compute = [](const MappingSpec& s) {
    const int bc = s.block_channels();
    std::vector<float> w(bc);
    std::vector<float> unit(bc, 0.0f), block(bc);
    for (int b = 0; b < bc; ++b) {
      unit[b] = 1.0f;
      block_inverse(s, unit.data(), block.data());
      unit[b] = 0.0f;
      w[b] = block[0];
    }
    return w;
  };
  static const std::vector<float> dct = compute(MappingSpec::dct8());
  static const std::vector<float> haar = compute(MappingSpec::haar2());
  return spec.kind == MappingKind::Dct8 ? dct : haar;
}

}  // namespace codec
}  // namespace minusface
