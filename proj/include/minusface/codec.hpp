#pragma once

#include <vector>

#include "minusface/image.hpp"

namespace minusface::codec {

// Orthonormal 2-D DCT-II on an 8x8 block (row-major, 64 values).
// alpha(0) = sqrt(1/8), alpha(u>0) = sqrt(2/8) per axis, so the inverse is the
// transpose and a forward/inverse roundtrip is exact to rounding.
std::vector<float> dct8_forward(const std::vector<float>& block);
std::vector<float> dct8_inverse(const std::vector<float>& coeffs);

// Raw-pointer versions, no size checks; in and out may not alias.
void dct8_forward_raw(const float* in, float* out);
void dct8_inverse_raw(const float* in, float* out);

// e: replicate-upsample each pixel into an fxf block (f = 8 for DCT8, 2 for
// HAAR2), transform every block of every color channel, and regroup equal
// coefficient indices across blocks into (H, W) channels.
HighDimRep encode(const SpatialImage& image, const MappingSpec& spec);

// d: scatter channels back into per-block coefficient matrices, inverse
// transform each block, then undo the replication by decimating each block at
// its first sample. Linear; decode(encode(X)) == X to rounding.
SpatialImage decode(const HighDimRep& rep, const MappingSpec& spec);

// decode collapses, per color and pixel, to a fixed dot product across the
// block_channels() coefficient channels:
//   decode(rep)[k,i,j] = sum_b decode_weights(spec)[b] * rep[k*B + b, i, j]
// Used by the training graph; agreement with decode() is unit-tested.
std::vector<float> decode_weights(const MappingSpec& spec);

}  // namespace minusface::codec
