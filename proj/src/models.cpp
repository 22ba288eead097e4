#include <algorithm>
#include <cmath>

#include "minusface/common.hpp"
#include "minusface/mfrp.hpp"
#include "minusface/nn.hpp"

namespace minusface::nn {

std::vector<TensorPtr> Model::parameters() const {
  std::vector<TensorPtr> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

int64_t Model::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t->numel();
  return n;
}

void Model::set_trainable(bool trainable) {
  for (auto& [name, t] : params_) t->requires_grad = trainable;
}

bool Model::trainable() const {
  for (const auto& [name, t] : params_) {
    if (t->requires_grad) return true;
  }
  return false;
}

TensorPtr Model::register_param(const std::string& name, std::vector<int> shape) {
  TensorPtr t = Tensor::zeros(std::move(shape), true);
  params_.emplace_back(name, t);
  return t;
}

void Model::save(const std::string& path) const { save_checkpoint(path, *this, nullptr); }
void Model::load(const std::string& path) { load_checkpoint(path, *this, nullptr); }

namespace {

// Kaiming-uniform fan-in init for every weight (bound sqrt(6/fan_in)), zero
// biases, drawn in registration order from one seeded stream.
void init_params(const std::vector<std::pair<std::string, TensorPtr>>& params, uint64_t seed) {
  SplitMix64 rng(seed);
  for (const auto& [name, t] : params) {
    const auto& s = t->shape;
    if (s.size() == 1) {
      std::fill(t->value.begin(), t->value.end(), 0.0f);  // bias
      continue;
    }
    int64_t fan_in = 1;
    for (size_t i = 1; i < s.size(); ++i) fan_in *= s[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (float& v : t->value) v = static_cast<float>(rng.uniform(-bound, bound));
  }
}

struct ConvParam {
  TensorPtr w, b;
};

class UNet : public Model {
 public:
  UNet(int in_channels, int out_channels, std::vector<int> widths, bool input_skip,
       uint64_t init_seed)
      : Model(Topology::EncoderDecoderSkip),
        in_ch_(in_channels),
        out_ch_(out_channels),
        widths_(std::move(widths)),
        input_skip_(input_skip) {
    const int levels = static_cast<int>(widths_.size()) - 1;
    stem_ = make_conv("stem", in_ch_, widths_[0]);
    for (int l = 1; l <= levels; ++l) {
      down_a_.push_back(make_conv("down" + std::to_string(l) + "a", widths_[l - 1], widths_[l]));
      down_b_.push_back(make_conv("down" + std::to_string(l) + "b", widths_[l], widths_[l]));
    }
    for (int l = levels - 1; l >= 0; --l) {
      up_a_.push_back(make_conv("up" + std::to_string(l) + "a", widths_[l + 1], widths_[l]));
      up_b_.push_back(make_conv("up" + std::to_string(l) + "b", widths_[l], widths_[l]));
    }
    head_ = make_conv("head", widths_[0], out_ch_);
    init_params(params_, init_seed);
  }

  int input_channels() const override { return in_ch_; }

  TensorPtr forward(const TensorPtr& input) override {
    if (input->shape.size() != 4 || input->dim(1) != in_ch_) {
      throw std::invalid_argument("UNet: input must be (B, " + std::to_string(in_ch_) +
                                  ", H, W)");
    }
    const int levels = static_cast<int>(widths_.size()) - 1;
    const int div = 1 << levels;
    if (input->dim(2) % div != 0 || input->dim(3) % div != 0 || input->dim(2) < div ||
        input->dim(3) < div) {
      throw std::invalid_argument("UNet: spatial dims must be divisible by " +
                                  std::to_string(div));
    }
    std::vector<TensorPtr> skips;
    TensorPtr cur = relu(conv2d(input, stem_.w, stem_.b, 1));
    skips.push_back(cur);
    for (int l = 0; l < levels; ++l) {
      cur = relu(conv2d(cur, down_a_[l].w, down_a_[l].b, 2));
      cur = relu(conv2d(cur, down_b_[l].w, down_b_[l].b, 1));
      skips.push_back(cur);
    }
    for (int l = 0; l < levels; ++l) {
      cur = upsample_nearest2x(cur);
      cur = relu(conv2d(cur, up_a_[l].w, up_a_[l].b, 1));
      cur = add(cur, skips[levels - 1 - l]);
      cur = relu(conv2d(cur, up_b_[l].w, up_b_[l].b, 1));
    }
    cur = conv2d(cur, head_.w, head_.b, 1);
    if (input_skip_) cur = add(cur, input);
    return cur;
  }

 private:
  ConvParam make_conv(const std::string& name, int cin, int cout) {
    ConvParam p;
    p.w = register_param(name + ".w", {cout, cin, 3, 3});
    p.b = register_param(name + ".b", {cout});
    return p;
  }

  int in_ch_, out_ch_;
  std::vector<int> widths_;
  bool input_skip_;
  ConvParam stem_, head_;
  std::vector<ConvParam> down_a_, down_b_, up_a_, up_b_;
};

class ConvClassifier : public Model {
 public:
  ConvClassifier(int in_channels, int embedding_dim, uint64_t init_seed)
      : Model(Topology::ConvClassifier), in_ch_(in_channels), emb_dim_(embedding_dim) {
    const std::vector<int> widths = {24, 48, 96, 128};
    int cin = in_ch_;
    for (size_t i = 0; i < widths.size(); ++i) {
      stages_.push_back(make_conv("stage" + std::to_string(i), cin, widths[i]));
      cin = widths[i];
    }
    fc_w_ = register_param("embed.w", {emb_dim_, cin});
    fc_b_ = register_param("embed.b", {emb_dim_});
    init_params(params_, init_seed);
  }

  int input_channels() const override { return in_ch_; }

  TensorPtr forward(const TensorPtr& input) override {
    if (input->shape.size() != 4 || input->dim(1) != in_ch_) {
      throw std::invalid_argument("ConvClassifier: input must be (B, " + std::to_string(in_ch_) +
                                  ", H, W)");
    }
    const int div = 1 << static_cast<int>(stages_.size());
    if (input->dim(2) % div != 0 || input->dim(3) % div != 0) {
      throw std::invalid_argument("ConvClassifier: spatial dims must be divisible by " +
                                  std::to_string(div));
    }
    TensorPtr cur = input;
    for (const auto& st : stages_) {
      cur = avg_pool2(relu(conv2d(cur, st.w, st.b, 1)));
    }
    cur = global_avg_pool(cur);
    return linear(cur, fc_w_, fc_b_);
  }

 private:
  ConvParam make_conv(const std::string& name, int cin, int cout) {
    ConvParam p;
    p.w = register_param(name + ".w", {cout, cin, 3, 3});
    p.b = register_param(name + ".b", {cout});
    return p;
  }

  int in_ch_, emb_dim_;
  std::vector<ConvParam> stages_;
  TensorPtr fc_w_, fc_b_;
};

}  // namespace

std::shared_ptr<Model> build_generator(int channels, int base_width, uint64_t init_seed) {
  if (channels != 12 && channels != 192) {
    throw std::invalid_argument("build_generator: channels must be 12 or 192");
  }
  if (base_width < 1) throw std::invalid_argument("build_generator: bad base width");
  const std::vector<int> widths = {base_width, 2 * base_width, 4 * base_width, 4 * base_width};
  return std::make_shared<UNet>(channels, channels, widths, /*input_skip=*/false, init_seed);
}

std::shared_ptr<Model> build_recovery(uint64_t init_seed, int base_width) {
  const std::vector<int> widths = {base_width, 2 * base_width, 4 * base_width,
                                   std::min(8 * base_width, 128), std::min(8 * base_width, 128)};
  return std::make_shared<UNet>(3, 3, widths, /*input_skip=*/true, init_seed);
}

Recognizer build_recognizer(int input_channels, int embedding_dim, int class_count,
                            float arc_scale, float arc_margin, uint64_t init_seed) {
  if (input_channels != 3 && input_channels != 12 && input_channels != 192) {
    throw std::invalid_argument("build_recognizer: input channels must be 3, 12 or 192");
  }
  if (embedding_dim < 1 || class_count < 1) {
    throw std::invalid_argument("build_recognizer: bad dimensions");
  }
  Recognizer r;
  r.net = std::make_shared<ConvClassifier>(input_channels, embedding_dim, init_seed);
  r.head = make_arcface_head(class_count, embedding_dim, arc_scale, arc_margin,
                             mix_seed(init_seed, 0x41524346 /* "ARCF" */));
  return r;
}

void save_checkpoint(const std::string& path, const Model& net, const ArcFaceHead* head) {
  std::vector<std::pair<std::string, std::pair<std::vector<int>, const std::vector<float>*>>>
      entries;
  for (const auto& [name, t] : net.named_parameters()) {
    entries.emplace_back(name, std::make_pair(t->shape, &t->value));
  }
  if (head) {
    entries.emplace_back("arcface.w", std::make_pair(head->weight->shape, &head->weight->value));
  }
  mfck::save(path, entries);
}

namespace {

std::vector<int> checkpoint_shape(const std::string& path, const std::string& name) {
  for (const auto& [n, e] : mfck::load(path)) {
    if (n == name) return e.first;
  }
  throw std::runtime_error("'" + path + "': missing parameter '" + name + "'");
}

}  // namespace

std::shared_ptr<Model> load_generator_checkpoint(const std::string& path) {
  const auto stem = checkpoint_shape(path, "stem.w");  // (base, channels, 3, 3)
  auto g = build_generator(stem[1], stem[0]);
  load_checkpoint(path, *g);
  g->set_trainable(false);
  return g;
}

std::shared_ptr<Model> load_recovery_checkpoint(const std::string& path) {
  const auto stem = checkpoint_shape(path, "stem.w");
  auto m = build_recovery(1, stem[0]);
  load_checkpoint(path, *m);
  m->set_trainable(false);
  return m;
}

Recognizer load_recognizer_checkpoint(const std::string& path) {
  const auto stage0 = checkpoint_shape(path, "stage0.w");  // (24, in_channels, 3, 3)
  const auto embed = checkpoint_shape(path, "embed.w");    // (embedding_dim, 128)
  const auto arc = checkpoint_shape(path, "arcface.w");    // (class_count, embedding_dim)
  Recognizer rec = build_recognizer(stage0[1], embed[0], arc[0]);
  load_checkpoint(path, *rec.net, &rec.head);
  rec.net->set_trainable(false);
  rec.head.weight->requires_grad = false;
  return rec;
}

void load_checkpoint(const std::string& path, Model& net, ArcFaceHead* head) {
  auto entries = mfck::load(path);
  auto find = [&](const std::string& name) -> std::pair<std::vector<int>, std::vector<float>>* {
    for (auto& [n, e] : entries) {
      if (n == name) return &e;
    }
    return nullptr;
  };
  size_t expected = net.named_parameters().size() + (head ? 1 : 0);
  if (entries.size() != expected) {
    throw std::runtime_error("'" + path + "': checkpoint has " + std::to_string(entries.size()) +
                             " parameters, model expects " + std::to_string(expected));
  }
  for (const auto& [name, t] : net.named_parameters()) {
    auto* e = find(name);
    if (!e) throw std::runtime_error("'" + path + "': missing parameter '" + name + "'");
    if (e->first != t->shape) {
      throw std::runtime_error("'" + path + "': shape mismatch for parameter '" + name + "'");
    }
    t->value = e->second;
    t->velocity.clear();
    t->grad.clear();
  }
  if (head) {
    auto* e = find("arcface.w");
    if (!e) throw std::runtime_error("'" + path + "': missing parameter 'arcface.w'");
    if (e->first != head->weight->shape) {
      throw std::runtime_error("'" + path + "': shape mismatch for 'arcface.w'");
    }
    head->weight->value = e->second;
    head->weight->velocity.clear();
    head->weight->grad.clear();
  }
}

}  // namespace minusface::nn
