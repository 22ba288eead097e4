#pragma once

// Finite-difference gradient checks shared by the unit suite and the
// acceptance suite: central differences, eps = 1e-3, relative tolerance 1e-2,
// on randomized small tensors. The closures rebuild the forward pass from
// scratch, so the difference quotient is an oracle fully independent of the
// backward implementation.
//
// The loss surfaces are float32, so a central difference at eps = 1e-3
// carries an absolute noise floor of ulp(loss)/(2*eps), about 1e-4 here. The
// tolerance therefore takes the usual atol + rtol*|g| form with atol = 2e-3;
// a wrong derivative produces errors proportional to the gradient itself and
// still trips the relative term.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "minusface/codec.hpp"
#include "minusface/common.hpp"
#include "minusface/nn.hpp"

namespace gradcheck {

using minusface::MappingSpec;
using minusface::SplitMix64;
using minusface::nn::Tensor;
using minusface::nn::TensorPtr;

struct Result {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

inline TensorPtr rand_tensor(std::vector<int> shape, uint64_t seed, double lo, double hi,
                             bool requires_grad) {
  TensorPtr t = Tensor::zeros(std::move(shape), requires_grad);
  SplitMix64 rng(seed);
  for (float& v : t->value) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Checks d loss / d t for every element of every tensor in `params`.
// Pass condition per element: |fd - analytic| <= atol + rel_tol*max(|fd|,|an|),
// reported as a single score that is <= rel_tol exactly when it holds.
inline Result check(const std::string& name, const std::function<TensorPtr()>& loss_fn,
                    const std::vector<TensorPtr>& params, double eps = 1e-3,
                    double rel_tol = 1e-2, double atol = 2e-3) {
  Result res;
  res.name = name;

  TensorPtr loss = loss_fn();
  minusface::nn::backward(loss);
  std::vector<std::vector<float>> analytic;
  for (const auto& p : params) {
    analytic.push_back(p->grad.empty() ? std::vector<float>(p->value.size(), 0.0f) : p->grad);
    p->grad.clear();
  }

  minusface::nn::NoGradGuard no_grad;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (size_t i = 0; i < p->value.size(); ++i) {
      const float old = p->value[i];
      p->value[i] = old + static_cast<float>(eps);
      const double up = loss_fn()->value[0];
      p->value[i] = old - static_cast<float>(eps);
      const double down = loss_fn()->value[0];
      p->value[i] = old;
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[pi][i];
      const double score =
          std::abs(fd - an) / (atol / rel_tol + std::max(std::abs(fd), std::abs(an)));
      res.max_rel_err = std::max(res.max_rel_err, score);
      if (score > rel_tol) res.pass = false;
    }
  }
  return res;
}

// Classifier-shaped composite: conv (stride 1 and 2), relu, 2x2 and global
// average pooling, linear, arcface. Inputs, conv weights, and biases are
// strictly positive so no pre-activation sits near the relu kink, where a
// central difference would measure the wrong one-sided slope.
inline Result check_classifier_chain() {
  auto x = rand_tensor({2, 2, 8, 8}, 101, 0.2, 0.8, true);
  auto w1 = rand_tensor({3, 2, 3, 3}, 102, 0.05, 0.4, true);
  auto b1 = rand_tensor({3}, 103, 0.1, 0.3, true);
  auto w2 = rand_tensor({4, 3, 3, 3}, 104, 0.05, 0.4, true);
  auto b2 = rand_tensor({4}, 105, 0.1, 0.3, true);
  auto wl = rand_tensor({5, 4}, 106, -0.7, 0.7, true);
  auto bl = rand_tensor({5}, 107, -0.2, 0.2, true);
  auto head = minusface::nn::make_arcface_head(3, 5, 4.0f, 0.2f, 108);
  const std::vector<int> labels = {0, 2};

  auto loss_fn = [=]() {
    using namespace minusface::nn;
    auto c1 = relu(conv2d(x, w1, b1, 1));
    auto c2 = relu(conv2d(c1, w2, b2, 2));
    auto gp = global_avg_pool(avg_pool2(c2));
    auto emb = linear(gp, wl, bl);
    return arcface_loss(emb, labels, head);
  };
  return check("conv/relu/pool/linear/arcface", loss_fn, {x, w1, b1, w2, b2, wl, bl, head.weight});
}

// Pipeline-shaped composite: upsample, pooling, sub, add, scale, the decode
// projection, and the L1 loss.
inline Result check_pipeline_chain() {
  const MappingSpec spec = MappingSpec::haar2();
  auto x = rand_tensor({1, 12, 4, 4}, 201, -1.0, 1.0, true);
  auto target = rand_tensor({1, 3, 4, 4}, 202, -4.0, -3.0, false);  // keeps |diff| off zero

  auto loss_fn = [=]() {
    using namespace minusface::nn;
    auto smooth = scale(upsample_nearest2x(avg_pool2(x)), 0.9f);
    auto r = sub(x, smooth);
    auto mixed = add(r, scale(x, 0.25f));
    auto dec = decode_channels(mixed, spec);
    return l1_loss(dec, target);
  };
  return check("upsample/pool/sub/add/scale/decode/l1", loss_fn, {x});
}

// Plain L1 between two free tensors, diffs bounded away from zero.
inline Result check_l1_pair() {
  auto a = rand_tensor({3, 5}, 301, 1.0, 2.0, true);
  auto b = rand_tensor({3, 5}, 302, -2.0, -1.0, true);
  auto loss_fn = [=]() { return minusface::nn::l1_loss(a, b); };
  return check("l1_loss", loss_fn, {a, b});
}

// ArcFace alone, gradients in both the embeddings and the head weight.
inline Result check_arcface() {
  auto emb = rand_tensor({4, 6}, 401, -1.0, 1.0, true);
  auto head = minusface::nn::make_arcface_head(5, 6, 8.0f, 0.35f, 402);
  const std::vector<int> labels = {1, 0, 4, 2};
  auto loss_fn = [=]() { return minusface::nn::arcface_loss(emb, labels, head); };
  return check("arcface_loss", loss_fn, {emb, head.weight});
}

inline std::vector<Result> run_all() {
  return {check_classifier_chain(), check_pipeline_chain(), check_l1_pair(), check_arcface()};
}

}  // namespace gradcheck
