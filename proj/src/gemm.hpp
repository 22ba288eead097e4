#pragma once

// Register-tiled f32 matrix kernels used by the conv and linear layers. All
// matrices are row-major and the contraction loop order is fixed, so results
// are bit-identical regardless of threading.

namespace minusface::detail {

// C (M x N) += A (M x K) * B (K x N)
void gemm_nn(const float* A, const float* B, float* C, int M, int K, int N);

// C (M x P) += A (M x N) * B (P x N)^T
void gemm_nt(const float* A, const float* B, float* C, int M, int N, int P);

}  // namespace minusface::detail
