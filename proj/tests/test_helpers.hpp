#pragma once

#include <cmath>
#include <vector>

#include "minusface/common.hpp"
#include "minusface/image.hpp"

namespace testutil {

using minusface::HighDimRep;
using minusface::SpatialImage;
using minusface::SplitMix64;

inline SpatialImage random_image(int h, int w, uint64_t seed) {
  SpatialImage img(h, w);
  SplitMix64 rng(seed);
  for (float& v : img.data) v = static_cast<float>(rng.next_double());
  return img;
}

inline HighDimRep random_rep(int c, int h, int w, uint64_t seed, double lo = -1.0,
                             double hi = 1.0) {
  HighDimRep rep(c, h, w);
  SplitMix64 rng(seed);
  for (float& v : rep.data) v = static_cast<float>(rng.uniform(lo, hi));
  return rep;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  return m;
}

// Independent oracle: direct O(64^2) orthonormal DCT-II / inverse evaluation
// of the textbook double sums, double precision throughout.
inline void oracle_dct8(const float in[64], double out[64], bool inverse) {
  constexpr double kPi = 3.14159265358979323846;
  auto alpha = [](int u) { return u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0); };
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) {
        for (int y = 0; y < 8; ++y) {
          const double c1 = std::cos((2 * (inverse ? a : x) + 1) * (inverse ? x : a) * kPi / 16.0);
          const double c2 = std::cos((2 * (inverse ? b : y) + 1) * (inverse ? y : b) * kPi / 16.0);
          const double coef = inverse ? alpha(x) * alpha(y) : alpha(a) * alpha(b);
          s += coef * in[x * 8 + y] * c1 * c2;
        }
      }
      out[a * 8 + b] = s;
    }
  }
}

}  // namespace testutil
