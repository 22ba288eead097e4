#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "minusface/image.hpp"

namespace minusface::nn {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense float32 tensor of up to 4 dims with an optional gradient buffer and
// the reverse-mode record (parents + backward closure) attached to it.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;      // empty until backward touches this node
  std::vector<float> velocity;  // SGD momentum state, parameters only
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_fn;

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int dim(int i) const { return shape[i]; }
  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0f);
  }

  static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
  static TensorPtr from_data(std::vector<int> shape, std::vector<float> data,
                             bool requires_grad = false);
};

// Recording is on by default; inference paths disable it with this guard.
bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

// ---- differentiable ops ------------------------------------------------
// All convs are 3x3 with padding 1; stride is 1 or 2.
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride);
TensorPtr relu(const TensorPtr& x);
TensorPtr upsample_nearest2x(const TensorPtr& x);
TensorPtr avg_pool2(const TensorPtr& x);
TensorPtr global_avg_pool(const TensorPtr& x);  // (B,C,H,W) -> (B,C)
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& x, float s);

// d as a batched graph op: (B, spec.channels(), H, W) -> (B, 3, H, W), the
// fixed per-pixel projection of codec::decode_weights.
TensorPtr decode_channels(const TensorPtr& x, const MappingSpec& spec);

// Mean absolute difference over all elements (scalar output).
TensorPtr l1_loss(const TensorPtr& a, const TensorPtr& b);

struct ArcFaceHead {
  TensorPtr weight;  // (class_count, embedding_dim), rows L2-normalized at use
  float scale = 16.0f;
  float margin = 0.3f;

  int class_count() const { return weight->dim(0); }
  int embedding_dim() const { return weight->dim(1); }
};

ArcFaceHead make_arcface_head(int class_count, int embedding_dim, float scale, float margin,
                              uint64_t init_seed);

// Cross-entropy over scaled cosine logits where the target-class angle gets
// an additive margin. Differentiable in the embeddings and the head weight.
TensorPtr arcface_loss(const TensorPtr& embeddings, const std::vector<int>& labels,
                       const ArcFaceHead& head);

// Margin-free cosine scores (B x class_count), for accuracy logging.
std::vector<float> cosine_scores(const Tensor& embeddings, const ArcFaceHead& head);
std::vector<int> predict_classes(const Tensor& embeddings, const ArcFaceHead& head);

// Reverse-mode sweep from a scalar loss; populates .grad on every tensor that
// requires a gradient. Throws if the loss has no recorded graph.
void backward(const TensorPtr& loss);

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
// Gradients are cleared afterwards. Throws if a parameter has no gradient.
void sgd_step(const std::vector<TensorPtr>& params, float lr, float momentum,
              float weight_decay);

// ---- models --------------------------------------------------------------

enum class Topology { EncoderDecoderSkip, ConvClassifier };

class Model {
 public:
  virtual ~Model() = default;
  virtual TensorPtr forward(const TensorPtr& input) = 0;
  virtual int input_channels() const = 0;

  Topology topology() const { return topology_; }
  const std::vector<std::pair<std::string, TensorPtr>>& named_parameters() const {
    return params_;
  }
  std::vector<TensorPtr> parameters() const;
  int64_t parameter_count() const;
  void set_trainable(bool trainable);
  bool trainable() const;

  void save(const std::string& path) const;
  void load(const std::string& path);

 protected:
  explicit Model(Topology t) : topology_(t) {}
  TensorPtr register_param(const std::string& name, std::vector<int> shape);
  std::vector<std::pair<std::string, TensorPtr>> params_;
  Topology topology_;
};

// Encoder-decoder with additive skip connections, input and output both
// (channels, H, W). Desk-scale default: 3 down/up levels, base width 16.
std::shared_ptr<Model> build_generator(int channels, int base_width = 16,
                                       uint64_t init_seed = 1);

// 3->3 encoder-decoder with skips plus a global input skip; 4 levels, base
// width 24 -- deliberately larger than the generator.
std::shared_ptr<Model> build_recovery(uint64_t init_seed = 1, int base_width = 24);

struct Recognizer {
  std::shared_ptr<Model> net;
  ArcFaceHead head;
};

// Four conv-relu-pool stages, global average pool, linear embedding, plus a
// paired ArcFace head. input_channels must be 3, 12 or 192.
Recognizer build_recognizer(int input_channels, int embedding_dim, int class_count,
                            float arc_scale = 16.0f, float arc_margin = 0.3f,
                            uint64_t init_seed = 1);

// MFCK checkpoint of a model's named parameters (plus the ArcFace weight when
// a head is given). Loading validates every name and shape.
void save_checkpoint(const std::string& path, const Model& net, const ArcFaceHead* head = nullptr);
void load_checkpoint(const std::string& path, Model& net, ArcFaceHead* head = nullptr);

// Rebuild a model from the shapes stored in its checkpoint (`stem.w` gives
// the generator width/channels, `embed.w`/`arcface.w` the recognizer dims).
std::shared_ptr<Model> load_generator_checkpoint(const std::string& path);
std::shared_ptr<Model> load_recovery_checkpoint(const std::string& path);
Recognizer load_recognizer_checkpoint(const std::string& path);

}  // namespace minusface::nn
