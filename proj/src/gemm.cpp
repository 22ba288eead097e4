#include "gemm.hpp"

#include <algorithm>
#include <cstring>

namespace minusface::detail {

namespace {
constexpr int kMR = 4;   // rows per register tile
constexpr int kNR = 64;  // columns per register tile (nn kernel)
constexpr int kVL = 16;  // simd accumulation width (nt kernel)
}  // namespace

void gemm_nn(const float* A, const float* B, float* C, int M, int K, int N) {
  for (int m0 = 0; m0 < M; m0 += kMR) {
    const int mr = std::min(kMR, M - m0);
    for (int n0 = 0; n0 < N; n0 += kNR) {
      const int nr = std::min(kNR, N - n0);
      float acc[kMR][kNR];
      for (int i = 0; i < mr; ++i) std::memset(acc[i], 0, sizeof(float) * nr);
      if (mr == kMR && nr == kNR) {
        for (int k = 0; k < K; ++k) {
          const float* b = B + static_cast<size_t>(k) * N + n0;
          const float a0 = A[static_cast<size_t>(m0 + 0) * K + k];
          const float a1 = A[static_cast<size_t>(m0 + 1) * K + k];
          const float a2 = A[static_cast<size_t>(m0 + 2) * K + k];
          const float a3 = A[static_cast<size_t>(m0 + 3) * K + k];
          for (int j = 0; j < kNR; ++j) {
            const float bj = b[j];
            acc[0][j] += a0 * bj;
            acc[1][j] += a1 * bj;
            acc[2][j] += a2 * bj;
            acc[3][j] += a3 * bj;
          }
        }
      } else {
        for (int k = 0; k < K; ++k) {
          const float* b = B + static_cast<size_t>(k) * N + n0;
          for (int i = 0; i < mr; ++i) {
            const float a = A[static_cast<size_t>(m0 + i) * K + k];
            for (int j = 0; j < nr; ++j) acc[i][j] += a * b[j];
          }
        }
      }
      for (int i = 0; i < mr; ++i) {
        float* c = C + static_cast<size_t>(m0 + i) * N + n0;
        for (int j = 0; j < nr; ++j) c[j] += acc[i][j];
      }
    }
  }
}

void gemm_nt(const float* A, const float* B, float* C, int M, int N, int P) {
  constexpr int kPR = 4;
  for (int m0 = 0; m0 < M; m0 += kMR) {
    const int mr = std::min(kMR, M - m0);
    for (int p0 = 0; p0 < P; p0 += kPR) {
      const int pr = std::min(kPR, P - p0);
      if (mr == kMR && pr == kPR) {
        // lane-wise accumulators, horizontally reduced at the end
        float acc[kMR][kPR][kVL] = {};
        int n = 0;
        for (; n + kVL <= N; n += kVL) {
          const float* a0 = A + static_cast<size_t>(m0 + 0) * N + n;
          const float* a1 = A + static_cast<size_t>(m0 + 1) * N + n;
          const float* a2 = A + static_cast<size_t>(m0 + 2) * N + n;
          const float* a3 = A + static_cast<size_t>(m0 + 3) * N + n;
          for (int p = 0; p < kPR; ++p) {
            const float* b = B + static_cast<size_t>(p0 + p) * N + n;
            for (int v = 0; v < kVL; ++v) {
              const float bv = b[v];
              acc[0][p][v] += a0[v] * bv;
              acc[1][p][v] += a1[v] * bv;
              acc[2][p][v] += a2[v] * bv;
              acc[3][p][v] += a3[v] * bv;
            }
          }
        }
        float tail[kMR][kPR] = {};
        for (; n < N; ++n) {
          for (int i = 0; i < kMR; ++i) {
            const float a = A[static_cast<size_t>(m0 + i) * N + n];
            for (int p = 0; p < kPR; ++p) {
              tail[i][p] += a * B[static_cast<size_t>(p0 + p) * N + n];
            }
          }
        }
        for (int i = 0; i < kMR; ++i) {
          for (int p = 0; p < kPR; ++p) {
            float s = tail[i][p];
            for (int v = 0; v < kVL; ++v) s += acc[i][p][v];
            C[static_cast<size_t>(m0 + i) * P + p0 + p] += s;
          }
        }
      } else {
        for (int i = 0; i < mr; ++i) {
          for (int p = 0; p < pr; ++p) {
            const float* a = A + static_cast<size_t>(m0 + i) * N;
            const float* b = B + static_cast<size_t>(p0 + p) * N;
            float s = 0.0f;
            for (int n = 0; n < N; ++n) s += a[n] * b[n];
            C[static_cast<size_t>(m0 + i) * P + p0 + p] += s;
          }
        }
      }
    }
  }
}

}  // namespace minusface::detail
