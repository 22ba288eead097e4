#include "minusface/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "gemm.hpp"
#include "minusface/codec.hpp"
#include "minusface/common.hpp"

namespace minusface::nn {

namespace {

thread_local bool g_grad_enabled = true;

void check_4d(const TensorPtr& t, const char* what) {
  if (t->shape.size() != 4) {
    throw std::invalid_argument(std::string(what) + ": expected a 4-dim (B,C,H,W) tensor");
  }
}

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* what) {
  if (a->shape != b->shape) {
    throw std::invalid_argument(std::string(what) + ": shapes differ");
  }
}

bool want_grad(std::initializer_list<const TensorPtr*> inputs) {
  if (!g_grad_enabled) return false;
  for (const TensorPtr* t : inputs) {
    if ((*t)->requires_grad) return true;
  }
  return false;
}

TensorPtr make_node(std::vector<int> shape, bool rec, std::vector<TensorPtr> parents) {
  TensorPtr out = Tensor::zeros(std::move(shape));
  out->requires_grad = rec;
  if (rec) out->parents = std::move(parents);
  return out;
}

// ---- conv plumbing -------------------------------------------------------

int conv_out_dim(int in, int stride) { return (in - 1) / stride + 1; }

void im2col(const float* x, int cin, int h, int w, int stride, int ho, int wo, float* col) {
  for (int ci = 0; ci < cin; ++ci) {
    const float* xc = x + static_cast<size_t>(ci) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        float* row = col + static_cast<size_t>(ci * 9 + ky * 3 + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          float* dst = row + static_cast<size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::memset(dst, 0, sizeof(float) * wo);
            continue;
          }
          const float* src = xc + static_cast<size_t>(iy) * w;
          if (stride == 1) {
            const int ox0 = std::max(0, 1 - kx);
            const int ox1 = std::min(wo, w + 1 - kx);
            for (int ox = 0; ox < ox0; ++ox) dst[ox] = 0.0f;
            if (ox1 > ox0) {
              std::memcpy(dst + ox0, src + ox0 + kx - 1,
                          sizeof(float) * static_cast<size_t>(ox1 - ox0));
            }
            for (int ox = ox1; ox < wo; ++ox) dst[ox] = 0.0f;
          } else {
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - 1;
              dst[ox] = (ix < 0 || ix >= w) ? 0.0f : src[ix];
            }
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, int cin, int h, int w, int stride, int ho, int wo, float* gx) {
  for (int ci = 0; ci < cin; ++ci) {
    float* gc = gx + static_cast<size_t>(ci) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const float* row = col + static_cast<size_t>(ci * 9 + ky * 3 + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const float* src = row + static_cast<size_t>(oy) * wo;
          float* dst = gc + static_cast<size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value.assign(static_cast<size_t>(t->numel()), 0.0f);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::from_data(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  if (static_cast<int64_t>(data.size()) != t->numel()) {
    throw std::invalid_argument("Tensor::from_data: shape does not match data length");
  }
  t->value = std::move(data);
  t->requires_grad = requires_grad;
  return t;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

// ---- conv2d ---------------------------------------------------------------

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride) {
  check_4d(x, "conv2d");
  if (w->shape.size() != 4 || w->dim(2) != 3 || w->dim(3) != 3) {
    throw std::invalid_argument("conv2d: weight must be (Cout, Cin, 3, 3)");
  }
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv2d: stride must be 1 or 2");
  const int B = x->dim(0), cin = x->dim(1), h = x->dim(2), wd = x->dim(3);
  const int cout = w->dim(0);
  if (w->dim(1) != cin) throw std::invalid_argument("conv2d: input channel mismatch");
  if (b->shape != std::vector<int>{cout}) throw std::invalid_argument("conv2d: bad bias shape");
  const int ho = conv_out_dim(h, stride), wo = conv_out_dim(wd, stride);
  const int K = cin * 9;
  const size_t N = static_cast<size_t>(ho) * wo;

  const bool rec = want_grad({&x, &w, &b});
  TensorPtr out = make_node({B, cout, ho, wo}, rec, {x, w, b});

  // When recording, the im2col matrices are kept for the weight gradient.
  auto col_cache = rec ? std::make_shared<std::vector<float>>(static_cast<size_t>(B) * K * N)
                       : nullptr;

  parallel_for(B, [&](int bi) {
    static thread_local std::vector<float> scratch;
    float* col;
    if (col_cache) {
      col = col_cache->data() + static_cast<size_t>(bi) * K * N;
    } else {
      scratch.resize(static_cast<size_t>(K) * N);
      col = scratch.data();
    }
    im2col(x->value.data() + static_cast<size_t>(bi) * cin * h * wd, cin, h, wd, stride, ho, wo,
           col);
    float* ob = out->value.data() + static_cast<size_t>(bi) * cout * N;
    for (int co = 0; co < cout; ++co) {
      std::fill(ob + co * N, ob + (co + 1) * N, b->value[co]);
    }
    detail::gemm_nn(w->value.data(), col, ob, cout, K, static_cast<int>(N));
  });

  if (rec) {
    out->backward_fn = [x, w, b, col_cache, B, cin, h, wd, cout, ho, wo, K, N,
                        stride](Tensor& self) {
      const float* go = self.grad.data();
      if (b->requires_grad) {
        b->ensure_grad();
        for (int bi = 0; bi < B; ++bi) {
          const float* g = go + static_cast<size_t>(bi) * cout * N;
          for (int co = 0; co < cout; ++co) {
            double s = 0.0;
            for (size_t n = 0; n < N; ++n) s += g[co * N + n];
            b->grad[co] += static_cast<float>(s);
          }
        }
      }
      if (w->requires_grad) {
        w->ensure_grad();
        // Row chunks of the weight gradient; each chunk owns its rows and
        // walks the batch in order, so the result is thread-count independent.
        constexpr int kRows = 8;
        const int chunks = (cout + kRows - 1) / kRows;
        parallel_for(chunks, [&](int ci) {
          const int r0 = ci * kRows;
          const int rows = std::min(kRows, cout - r0);
          for (int bi = 0; bi < B; ++bi) {
            const float* g = go + static_cast<size_t>(bi) * cout * N + static_cast<size_t>(r0) * N;
            const float* col = col_cache->data() + static_cast<size_t>(bi) * K * N;
            detail::gemm_nt(g, col, w->grad.data() + static_cast<size_t>(r0) * K, rows,
                            static_cast<int>(N), K);
          }
        });
      }
      if (x->requires_grad) {
        x->ensure_grad();
        // W^T once, then per-image grad_col = W^T * go, scattered back.
        std::vector<float> wt(static_cast<size_t>(K) * cout);
        for (int co = 0; co < cout; ++co) {
          for (int k = 0; k < K; ++k) {
            wt[static_cast<size_t>(k) * cout + co] = w->value[static_cast<size_t>(co) * K + k];
          }
        }
        parallel_for(B, [&](int bi) {
          static thread_local std::vector<float> gcol;
          gcol.assign(static_cast<size_t>(K) * N, 0.0f);
          detail::gemm_nn(wt.data(), go + static_cast<size_t>(bi) * cout * N, gcol.data(), K,
                          cout, static_cast<int>(N));
          col2im_add(gcol.data(), cin, h, wd, stride, ho, wo,
                     x->grad.data() + static_cast<size_t>(bi) * cin * h * wd);
        });
      }
    };
  }
  return out;
}

// ---- elementwise and shape ops ---------------------------------------------

TensorPtr relu(const TensorPtr& x) {
  const bool rec = want_grad({&x});
  TensorPtr out = make_node(x->shape, rec, {x});
  const size_t n = x->value.size();
  for (size_t i = 0; i < n; ++i) out->value[i] = x->value[i] > 0.0f ? x->value[i] : 0.0f;
  if (rec) {
    out->backward_fn = [x](Tensor& self) {
      x->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        if (x->value[i] > 0.0f) x->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr upsample_nearest2x(const TensorPtr& x) {
  check_4d(x, "upsample_nearest2x");
  const int B = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const bool rec = want_grad({&x});
  TensorPtr out = make_node({B, c, 2 * h, 2 * w}, rec, {x});
  for (int p = 0; p < B * c; ++p) {
    const float* src = x->value.data() + static_cast<size_t>(p) * h * w;
    float* dst = out->value.data() + static_cast<size_t>(p) * 4 * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const float v = src[y * w + xx];
        float* d = dst + (2 * y) * (2 * w) + 2 * xx;
        d[0] = v;
        d[1] = v;
        d[2 * w] = v;
        d[2 * w + 1] = v;
      }
    }
  }
  if (rec) {
    out->backward_fn = [x, B, c, h, w](Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (int p = 0; p < B * c; ++p) {
        const float* g = self.grad.data() + static_cast<size_t>(p) * 4 * h * w;
        float* gx = x->grad.data() + static_cast<size_t>(p) * h * w;
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            const float* s = g + (2 * y) * (2 * w) + 2 * xx;
            gx[y * w + xx] += s[0] + s[1] + s[2 * w] + s[2 * w + 1];
          }
        }
      }
    };
  }
  return out;
}

TensorPtr avg_pool2(const TensorPtr& x) {
  check_4d(x, "avg_pool2");
  const int B = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw std::invalid_argument("avg_pool2: spatial dims must be even");
  }
  const int ho = h / 2, wo = w / 2;
  const bool rec = want_grad({&x});
  TensorPtr out = make_node({B, c, ho, wo}, rec, {x});
  for (int p = 0; p < B * c; ++p) {
    const float* src = x->value.data() + static_cast<size_t>(p) * h * w;
    float* dst = out->value.data() + static_cast<size_t>(p) * ho * wo;
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx) {
        const float* s = src + (2 * y) * w + 2 * xx;
        dst[y * wo + xx] = 0.25f * (s[0] + s[1] + s[w] + s[w + 1]);
      }
    }
  }
  if (rec) {
    out->backward_fn = [x, B, c, h, w, ho, wo](Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (int p = 0; p < B * c; ++p) {
        const float* g = self.grad.data() + static_cast<size_t>(p) * ho * wo;
        float* gx = x->grad.data() + static_cast<size_t>(p) * h * w;
        for (int y = 0; y < ho; ++y) {
          for (int xx = 0; xx < wo; ++xx) {
            const float gv = 0.25f * g[y * wo + xx];
            float* d = gx + (2 * y) * w + 2 * xx;
            d[0] += gv;
            d[1] += gv;
            d[w] += gv;
            d[w + 1] += gv;
          }
        }
      }
    };
  }
  return out;
}

TensorPtr global_avg_pool(const TensorPtr& x) {
  check_4d(x, "global_avg_pool");
  const int B = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const float inv = 1.0f / static_cast<float>(h * w);
  const bool rec = want_grad({&x});
  TensorPtr out = make_node({B, c}, rec, {x});
  for (int p = 0; p < B * c; ++p) {
    const float* src = x->value.data() + static_cast<size_t>(p) * h * w;
    double s = 0.0;
    for (int i = 0; i < h * w; ++i) s += src[i];
    out->value[p] = static_cast<float>(s) * inv;
  }
  if (rec) {
    out->backward_fn = [x, B, c, h, w, inv](Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (int p = 0; p < B * c; ++p) {
        const float gv = self.grad[p] * inv;
        float* gx = x->grad.data() + static_cast<size_t>(p) * h * w;
        for (int i = 0; i < h * w; ++i) gx[i] += gv;
      }
    };
  }
  return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  if (x->shape.size() != 2 || w->shape.size() != 2) {
    throw std::invalid_argument("linear: expects (B,D) input and (E,D) weight");
  }
  const int B = x->dim(0), d = x->dim(1), e = w->dim(0);
  if (w->dim(1) != d || b->shape != std::vector<int>{e}) {
    throw std::invalid_argument("linear: dimension mismatch");
  }
  const bool rec = want_grad({&x, &w, &b});
  TensorPtr out = make_node({B, e}, rec, {x, w, b});
  for (int i = 0; i < B; ++i) {
    std::memcpy(out->value.data() + static_cast<size_t>(i) * e, b->value.data(),
                sizeof(float) * e);
  }
  detail::gemm_nt(x->value.data(), w->value.data(), out->value.data(), B, d, e);
  if (rec) {
    out->backward_fn = [x, w, b, B, d, e](Tensor& self) {
      const float* go = self.grad.data();
      if (b->requires_grad) {
        b->ensure_grad();
        for (int i = 0; i < B; ++i) {
          for (int j = 0; j < e; ++j) b->grad[j] += go[static_cast<size_t>(i) * e + j];
        }
      }
      if (w->requires_grad) {
        w->ensure_grad();
        std::vector<float> got(static_cast<size_t>(e) * B);
        for (int i = 0; i < B; ++i) {
          for (int j = 0; j < e; ++j) got[static_cast<size_t>(j) * B + i] = go[i * e + j];
        }
        detail::gemm_nn(got.data(), x->value.data(), w->grad.data(), e, B, d);
      }
      if (x->requires_grad) {
        x->ensure_grad();
        detail::gemm_nn(go, w->value.data(), x->grad.data(), B, e, d);
      }
    };
  }
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "add");
  const bool rec = want_grad({&a, &b});
  TensorPtr out = make_node(a->shape, rec, {a, b});
  for (size_t i = 0; i < a->value.size(); ++i) out->value[i] = a->value[i] + b->value[i];
  if (rec) {
    out->backward_fn = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "sub");
  const bool rec = want_grad({&a, &b});
  TensorPtr out = make_node(a->shape, rec, {a, b});
  for (size_t i = 0; i < a->value.size(); ++i) out->value[i] = a->value[i] - b->value[i];
  if (rec) {
    out->backward_fn = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] -= self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr scale(const TensorPtr& x, float s) {
  const bool rec = want_grad({&x});
  TensorPtr out = make_node(x->shape, rec, {x});
  for (size_t i = 0; i < x->value.size(); ++i) out->value[i] = s * x->value[i];
  if (rec) {
    out->backward_fn = [x, s](Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += s * self.grad[i];
    };
  }
  return out;
}

TensorPtr decode_channels(const TensorPtr& x, const MappingSpec& spec) {
  check_4d(x, "decode_channels");
  const int B = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  if (c != spec.channels()) {
    throw std::invalid_argument("decode_channels: channel count does not match mapping");
  }
  const int bc = spec.block_channels();
  const std::vector<float> wts = codec::decode_weights(spec);
  const size_t plane = static_cast<size_t>(h) * w;
  const bool rec = want_grad({&x});
  TensorPtr out = make_node({B, SpatialImage::kChannels, h, w}, rec, {x});
  for (int bi = 0; bi < B; ++bi) {
    for (int k = 0; k < SpatialImage::kChannels; ++k) {
      float* dst = out->value.data() + (static_cast<size_t>(bi) * 3 + k) * plane;
      for (int b = 0; b < bc; ++b) {
        const float wt = wts[b];
        const float* src =
            x->value.data() + (static_cast<size_t>(bi) * c + k * bc + b) * plane;
        for (size_t i = 0; i < plane; ++i) dst[i] += wt * src[i];
      }
    }
  }
  if (rec) {
    out->backward_fn = [x, wts, B, c, bc, plane](Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (int bi = 0; bi < B; ++bi) {
        for (int k = 0; k < SpatialImage::kChannels; ++k) {
          const float* g = self.grad.data() + (static_cast<size_t>(bi) * 3 + k) * plane;
          for (int b = 0; b < bc; ++b) {
            const float wt = wts[b];
            float* gx = x->grad.data() + (static_cast<size_t>(bi) * c + k * bc + b) * plane;
            for (size_t i = 0; i < plane; ++i) gx[i] += wt * g[i];
          }
        }
      }
    };
  }
  return out;
}

TensorPtr l1_loss(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "l1_loss");
  const bool rec = want_grad({&a, &b});
  TensorPtr out = make_node({1}, rec, {a, b});
  const size_t n = a->value.size();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::abs(static_cast<double>(a->value[i]) - b->value[i]);
  out->value[0] = static_cast<float>(s / static_cast<double>(n));
  if (rec) {
    out->backward_fn = [a, b, n](Tensor& self) {
      const float coef = self.grad[0] / static_cast<float>(n);
      if (a->requires_grad) a->ensure_grad();
      if (b->requires_grad) b->ensure_grad();
      for (size_t i = 0; i < n; ++i) {
        const float d = a->value[i] - b->value[i];
        const float g = d > 0.0f ? coef : (d < 0.0f ? -coef : 0.0f);
        if (a->requires_grad) a->grad[i] += g;
        if (b->requires_grad) b->grad[i] -= g;
      }
    };
  }
  return out;
}

// ---- ArcFace ---------------------------------------------------------------

ArcFaceHead make_arcface_head(int class_count, int embedding_dim, float scale, float margin,
                              uint64_t init_seed) {
  if (class_count < 1 || embedding_dim < 1) {
    throw std::invalid_argument("make_arcface_head: bad dimensions");
  }
  if (!(margin >= 0.0f && margin < 1.57079632f)) {
    throw std::invalid_argument("make_arcface_head: margin must be in [0, pi/2)");
  }
  ArcFaceHead head;
  head.scale = scale;
  head.margin = margin;
  head.weight = Tensor::zeros({class_count, embedding_dim}, true);
  SplitMix64 rng(init_seed);
  const float bound = std::sqrt(6.0f / static_cast<float>(embedding_dim));
  for (float& v : head.weight->value) {
    v = static_cast<float>(rng.uniform(-bound, bound));
  }
  return head;
}

namespace {

// Normalized rows of (rows x d) into out; returns the norms.
std::vector<float> normalize_rows(const float* src, int rows, int d, float* out) {
  std::vector<float> norms(rows);
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    const float* r = src + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) s += static_cast<double>(r[j]) * r[j];
    const float norm = static_cast<float>(std::sqrt(s + 1e-24));
    norms[i] = norm;
    float* o = out + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) o[j] = r[j] / norm;
  }
  return norms;
}

}  // namespace

TensorPtr arcface_loss(const TensorPtr& embeddings, const std::vector<int>& labels,
                       const ArcFaceHead& head) {
  if (embeddings->shape.size() != 2) {
    throw std::invalid_argument("arcface_loss: embeddings must be (B, D)");
  }
  const int B = embeddings->dim(0), d = embeddings->dim(1);
  const int n = head.class_count();
  if (d != head.embedding_dim()) {
    throw std::invalid_argument("arcface_loss: embedding dim does not match head");
  }
  if (static_cast<int>(labels.size()) != B) {
    throw std::invalid_argument("arcface_loss: label count does not match batch");
  }
  for (int y : labels) {
    if (y < 0 || y >= n) throw std::invalid_argument("arcface_loss: label out of range");
  }

  const TensorPtr weight = head.weight;
  const float s = head.scale;
  const float cos_m = std::cos(head.margin), sin_m = std::sin(head.margin);

  auto ehat = std::make_shared<std::vector<float>>(static_cast<size_t>(B) * d);
  auto what = std::make_shared<std::vector<float>>(static_cast<size_t>(n) * d);
  auto enorm = std::make_shared<std::vector<float>>(
      normalize_rows(embeddings->value.data(), B, d, ehat->data()));
  auto wnorm = std::make_shared<std::vector<float>>(
      normalize_rows(weight->value.data(), n, d, what->data()));

  // cosine logits, clamped to [-1, 1]
  auto cosm = std::make_shared<std::vector<float>>(static_cast<size_t>(B) * n, 0.0f);
  detail::gemm_nt(ehat->data(), what->data(), cosm->data(), B, d, n);
  for (float& v : *cosm) v = std::min(1.0f, std::max(-1.0f, v));

  // softmax over scaled logits with the target angle margined
  auto probs = std::make_shared<std::vector<float>>(static_cast<size_t>(B) * n);
  double loss = 0.0;
  for (int i = 0; i < B; ++i) {
    const float* ci = cosm->data() + static_cast<size_t>(i) * n;
    float* pi = probs->data() + static_cast<size_t>(i) * n;
    const int y = labels[i];
    double zmax = -1e30;
    for (int j = 0; j < n; ++j) {
      const double c = ci[j];
      double z;
      if (j == y) {
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - c * c));
        z = s * (c * cos_m - sin_t * sin_m);
      } else {
        z = s * c;
      }
      pi[j] = static_cast<float>(z);  // reuse as logit store
      zmax = std::max(zmax, z);
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) denom += std::exp(static_cast<double>(pi[j]) - zmax);
    const double lse = zmax + std::log(denom);
    loss += lse - pi[y];
    for (int j = 0; j < n; ++j) {
      pi[j] = static_cast<float>(std::exp(static_cast<double>(pi[j]) - lse));
    }
  }

  const bool rec = want_grad({&embeddings, &weight});
  TensorPtr out = make_node({1}, rec, {embeddings, weight});
  out->value[0] = static_cast<float>(loss / B);

  if (rec) {
    auto labels_copy = labels;
    out->backward_fn = [embeddings, weight, ehat, what, enorm, wnorm, cosm, probs, labels_copy, B,
                        d, n, s, cos_m, sin_m](Tensor& self) {
      const float gl = self.grad[0] / static_cast<float>(B);
      std::vector<float> dcos(static_cast<size_t>(B) * n);
      for (int i = 0; i < B; ++i) {
        const int y = labels_copy[i];
        for (int j = 0; j < n; ++j) {
          const float p = (*probs)[static_cast<size_t>(i) * n + j];
          float g = gl * (p - (j == y ? 1.0f : 0.0f)) * s;
          if (j == y) {
            const float c = (*cosm)[static_cast<size_t>(i) * n + j];
            const float sin_t =
                std::sqrt(std::max(1e-8f, 1.0f - c * c));  // guarded near the poles
            g *= cos_m + sin_m * c / sin_t;
          }
          dcos[static_cast<size_t>(i) * n + j] = g;
        }
      }
      if (embeddings->requires_grad) {
        embeddings->ensure_grad();
        for (int i = 0; i < B; ++i) {
          std::vector<double> acc(d, 0.0);
          for (int j = 0; j < n; ++j) {
            const float g = dcos[static_cast<size_t>(i) * n + j];
            if (g == 0.0f) continue;
            const float* wj = what->data() + static_cast<size_t>(j) * d;
            for (int k = 0; k < d; ++k) acc[k] += static_cast<double>(g) * wj[k];
          }
          // through the normalization: g_e = (acc - (acc . ehat) ehat) / |e|
          const float* ei = ehat->data() + static_cast<size_t>(i) * d;
          double dot = 0.0;
          for (int k = 0; k < d; ++k) dot += acc[k] * ei[k];
          const float inv = 1.0f / (*enorm)[i];
          float* ge = embeddings->grad.data() + static_cast<size_t>(i) * d;
          for (int k = 0; k < d; ++k) {
            ge[k] += static_cast<float>((acc[k] - dot * ei[k]) * inv);
          }
        }
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        for (int j = 0; j < n; ++j) {
          std::vector<double> acc(d, 0.0);
          for (int i = 0; i < B; ++i) {
            const float g = dcos[static_cast<size_t>(i) * n + j];
            if (g == 0.0f) continue;
            const float* ei = ehat->data() + static_cast<size_t>(i) * d;
            for (int k = 0; k < d; ++k) acc[k] += static_cast<double>(g) * ei[k];
          }
          const float* wj = what->data() + static_cast<size_t>(j) * d;
          double dot = 0.0;
          for (int k = 0; k < d; ++k) dot += acc[k] * wj[k];
          const float inv = 1.0f / (*wnorm)[j];
          float* gw = weight->grad.data() + static_cast<size_t>(j) * d;
          for (int k = 0; k < d; ++k) {
            gw[k] += static_cast<float>((acc[k] - dot * wj[k]) * inv);
          }
        }
      }
    };
  }
  return out;
}

std::vector<float> cosine_scores(const Tensor& embeddings, const ArcFaceHead& head) {
  const int B = embeddings.shape[0], d = embeddings.shape[1];
  const int n = head.class_count();
  std::vector<float> ehat(static_cast<size_t>(B) * d), what(static_cast<size_t>(n) * d);
  normalize_rows(embeddings.value.data(), B, d, ehat.data());
  normalize_rows(head.weight->value.data(), n, d, what.data());
  std::vector<float> cosm(static_cast<size_t>(B) * n, 0.0f);
  detail::gemm_nt(ehat.data(), what.data(), cosm.data(), B, d, n);
  return cosm;
}

std::vector<int> predict_classes(const Tensor& embeddings, const ArcFaceHead& head) {
  const int B = embeddings.shape[0];
  const int n = head.class_count();
  const auto scores = cosine_scores(embeddings, head);
  std::vector<int> pred(B);
  for (int i = 0; i < B; ++i) {
    const float* row = scores.data() + static_cast<size_t>(i) * n;
    pred[i] = static_cast<int>(std::max_element(row, row + n) - row);
  }
  return pred;
}

// ---- backward and SGD -------------------------------------------------------

void backward(const TensorPtr& loss) {
  if (loss->numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
  if (!loss->backward_fn) {
    throw std::logic_error("backward: no recorded forward graph (was grad mode off?)");
  }
  // iterative DFS post-order: parents first, node last
  std::vector<Tensor*> topo;
  std::unordered_set<Tensor*> visited;
  struct Frame {
    Tensor* node;
    size_t next_parent;
  };
  std::vector<Frame> stack{{loss.get(), 0}};
  visited.insert(loss.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Tensor* p = f.node->parents[f.next_parent++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }
  loss->ensure_grad();
  loss->grad[0] = 1.0f;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Tensor* t = *it;
    if (t->backward_fn && !t->grad.empty()) t->backward_fn(*t);
  }
}

void sgd_step(const std::vector<TensorPtr>& params, float lr, float momentum,
              float weight_decay) {
  for (const TensorPtr& p : params) {
    if (p->grad.empty()) {
      throw std::logic_error("sgd_step: parameter has no gradient; run backward first");
    }
  }
  for (const TensorPtr& p : params) {
    if (p->velocity.empty()) p->velocity.assign(p->value.size(), 0.0f);
    for (size_t i = 0; i < p->value.size(); ++i) {
      const float v = momentum * p->velocity[i] + p->grad[i] + weight_decay * p->value[i];
      p->velocity[i] = v;
      p->value[i] -= lr * v;
    }
    p->grad.clear();
  }
}

}  // namespace minusface::nn
