#include "minusface/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>

#include "minusface/common.hpp"

namespace minusface::train {

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: bad epochs/batch");
  for (size_t i = 0; i < lr_drop_epochs.size(); ++i) {
    if (lr_drop_epochs[i] >= epochs || lr_drop_epochs[i] < 0 ||
        (i > 0 && lr_drop_epochs[i] <= lr_drop_epochs[i - 1])) {
      throw std::invalid_argument(
          "TrainConfig: lr_drop_epochs must be strictly increasing and < epochs");
    }
  }
  if (augment_copies < 1) throw std::invalid_argument("TrainConfig: augment_copies must be >= 1");
}

TrainConfig TrainConfig::paper_preset() {
  TrainConfig cfg;
  cfg.epochs = 24;
  cfg.batch_size = 64;
  cfg.lr_drop_epochs = {10, 18, 22};
  return cfg;
}

float lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    throw std::invalid_argument("lr_at_epoch: epoch out of range");
  }
  int drops = 0;
  for (int e : cfg.lr_drop_epochs) {
    if (e <= epoch) ++drops;
  }
  return cfg.lr_initial / static_cast<float>(std::pow(10.0, drops));
}

void write_log(std::ostream& out, const TrainLog& log) {
  for (const auto& e : log) {
    out << "epoch=" << e.epoch << "\tlr=" << e.lr << "\tl_gen=" << e.l_gen
        << "\tl_fr=" << e.l_fr << "\tacc=" << e.train_acc << "\n";
  }
}

TrainLog read_log(std::istream& in) {
  TrainLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochLog e;
    std::istringstream ss(line);
    std::string field;
    while (ss >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq);
      const float v = std::stof(field.substr(eq + 1));
      if (key == "epoch") {
        e.epoch = static_cast<int>(v);
      } else if (key == "lr") {
        e.lr = v;
      } else if (key == "l_gen") {
        e.l_gen = v;
      } else if (key == "l_fr") {
        e.l_fr = v;
      } else if (key == "acc") {
        e.train_acc = v;
      }
    }
    log.push_back(e);
  }
  return log;
}

namespace {

// Contiguous class ids for an index subset; throws if fewer than two classes.
struct LabelMap {
  std::vector<int> classes;  // class -> dataset label
  std::vector<int> lookup;   // dataset label -> class (or -1)

  explicit LabelMap(const data::ToyDataset& ds, const std::vector<int>& indices) {
    for (int i : indices) classes.push_back(ds.samples[i].label);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    const int maxl = classes.empty() ? 0 : classes.back();
    lookup.assign(maxl + 1, -1);
    for (size_t c = 0; c < classes.size(); ++c) lookup[classes[c]] = static_cast<int>(c);
  }
  int count() const { return static_cast<int>(classes.size()); }
  int of(int label) const { return lookup[label]; }
};

std::vector<int> shuffled_order(int n, uint64_t seed) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<size_t>(rng.next_below(i + 1))]);
  }
  return order;
}

bool flip_coin(uint64_t base, int epoch, int pos) {
  return (mix_seed(base, 0xF11F, static_cast<uint64_t>(epoch) * 1000003ULL + pos) & 1) != 0;
}

// Shared mini-batch recognizer fit: the sampler materializes sample `pos` of
// epoch `epoch` into a (C,H,W) buffer and yields its class id.
using SampleFn = std::function<void(int epoch, int pos, float* dst, int* cls)>;

RecognizerResult fit_recognizer(int in_channels, int h, int w, int n_samples, int n_classes,
                                const SampleFn& sample_fn, const TrainConfig& cfg,
                                uint64_t seed_salt, const char* tag) {
  cfg.validate();
  if (n_samples < 1) throw std::invalid_argument("fit_recognizer: empty sample set");
  if (n_classes < 2) throw std::invalid_argument("fit_recognizer: need at least 2 classes");

  RecognizerResult res;
  nn::Recognizer rec = nn::build_recognizer(in_channels, cfg.embedding_dim, n_classes,
                                            cfg.arc_scale, cfg.arc_margin,
                                            mix_seed(cfg.init_seed, seed_salt));
  res.net = rec.net;
  res.head = rec.head;

  std::vector<nn::TensorPtr> params = res.net->parameters();
  params.push_back(res.head.weight);

  const size_t sample_len = static_cast<size_t>(in_channels) * h * w;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = lr_at_epoch(cfg, epoch);
    const auto order = shuffled_order(n_samples, mix_seed(cfg.data_seed, seed_salt, epoch));
    double sum_loss = 0.0;
    long correct = 0;
    for (int start = 0; start < n_samples; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n_samples - start);
      nn::TensorPtr input = nn::Tensor::zeros({bsz, in_channels, h, w});
      std::vector<int> labels(bsz);
      for (int bi = 0; bi < bsz; ++bi) {
        sample_fn(epoch, order[start + bi], input->value.data() + bi * sample_len, &labels[bi]);
      }
      nn::TensorPtr emb = res.net->forward(input);
      nn::TensorPtr loss = nn::arcface_loss(emb, labels, res.head);
      const auto pred = nn::predict_classes(*emb, res.head);
      for (int bi = 0; bi < bsz; ++bi) correct += pred[bi] == labels[bi];
      sum_loss += static_cast<double>(loss->value[0]) * bsz;
      nn::backward(loss);
      nn::sgd_step(params, lr, cfg.momentum, cfg.weight_decay);
    }
    EpochLog e;
    e.epoch = epoch;
    e.lr = lr;
    e.l_gen = 0.0f;
    e.l_fr = static_cast<float>(sum_loss / n_samples);
    e.train_acc = static_cast<float>(correct) / static_cast<float>(n_samples);
    res.log.push_back(e);
    if (std::getenv("MINUSFACE_VERBOSE")) {
      std::cerr << tag << " epoch " << epoch << " lr " << lr << " loss " << e.l_fr << " acc "
                << e.train_acc << "\n";
    }
  }
  return res;
}

}  // namespace

// ---- residue cache -----------------------------------------------------------

ResidueCache::ResidueCache(const data::ToyDataset& ds, const std::vector<int>& indices,
                           nn::Model* g, const MappingSpec& spec, bool feature_subtraction,
                           bool with_flips)
    : indices_(indices) {
  if (indices_.empty()) throw std::invalid_argument("ResidueCache: empty index set");
  if (feature_subtraction) {
    if (!g) throw std::invalid_argument("ResidueCache: feature subtraction needs a generator");
    if (g->trainable()) {
      throw std::logic_error("ResidueCache: generator must be frozen");
    }
  }
  nn::NoGradGuard no_grad;
  const int n = static_cast<int>(indices_.size());
  originals_.resize(n);
  plain_.resize(n);
  if (with_flips) flipped_.resize(n);

  constexpr int kBatch = 16;
  std::vector<HighDimRep> xs;
  auto run = [&](std::vector<HighDimRep>& xs_batch, std::vector<HighDimRep*> out) {
    if (!feature_subtraction) {
      for (size_t i = 0; i < out.size(); ++i) *out[i] = std::move(xs_batch[i]);
      return;
    }
    std::vector<const HighDimRep*> ptrs;
    for (const auto& x : xs_batch) ptrs.push_back(&x);
    nn::TensorPtr xt = pipeline::reps_to_tensor(ptrs);
    nn::TensorPtr yt = g->forward(xt);
    for (size_t i = 0; i < out.size(); ++i) {
      HighDimRep xp = pipeline::rep_from_tensor(*yt, static_cast<int>(i));
      *out[i] = pipeline::residue(xs_batch[i], xp);
    }
  };

  for (int pass = 0; pass < (with_flips ? 2 : 1); ++pass) {
    for (int start = 0; start < n; start += kBatch) {
      const int bsz = std::min(kBatch, n - start);
      std::vector<HighDimRep> batch;
      std::vector<HighDimRep*> out;
      for (int i = 0; i < bsz; ++i) {
        const data::ToySample& s = ds.samples[indices_[start + i]];
        if (pass == 0) originals_[start + i] = &s.image;
        batch.push_back(pass == 0 ? codec::encode(s.image, spec)
                                  : codec::encode(data::hflip(s.image), spec));
        out.push_back(pass == 0 ? &plain_[start + i] : &flipped_[start + i]);
      }
      run(batch, out);
    }
  }
}

const HighDimRep& ResidueCache::residue(int pos, bool flipped) const {
  if (flipped) {
    if (flipped_.empty()) throw std::logic_error("ResidueCache: built without flips");
    return flipped_[pos];
  }
  return plain_[pos];
}

const SpatialImage& ResidueCache::original(int pos) const { return *originals_[pos]; }

// ---- stage 1 -------------------------------------------------------------------

Stage1Result train_stage1(const data::ToyDataset& ds, const TrainConfig& cfg,
                          const pipeline::ProtectorConfig& pcfg) {
  cfg.validate();
  pcfg.validate();
  const auto idx = ds.indices(data::Split::DefenderTrain);
  if (idx.empty()) throw std::invalid_argument("train_stage1: empty training split");
  const LabelMap labels(ds, idx);
  if (labels.count() < 2) throw std::invalid_argument("train_stage1: need at least 2 classes");

  const MappingSpec spec = pcfg.mapping;
  const int n = static_cast<int>(idx.size());
  const int h = ds.samples[idx[0]].image.height, w = ds.samples[idx[0]].image.width;

  Stage1Result res;
  res.g = nn::build_generator(spec.channels(), 16, mix_seed(cfg.init_seed, 0x6E0));
  nn::Recognizer rec = nn::build_recognizer(spec.channels(), cfg.embedding_dim, labels.count(),
                                            cfg.arc_scale, cfg.arc_margin,
                                            mix_seed(cfg.init_seed, 0xF0));
  res.f = rec.net;
  res.head = rec.head;

  // encodings are fixed per image (and per flip), so cache them up front
  std::vector<HighDimRep> x_plain(n), x_flip;
  std::vector<SpatialImage> img_flip;
  for (int i = 0; i < n; ++i) x_plain[i] = codec::encode(ds.samples[idx[i]].image, spec);
  if (cfg.flip_augment) {
    x_flip.resize(n);
    img_flip.resize(n);
    for (int i = 0; i < n; ++i) {
      img_flip[i] = data::hflip(ds.samples[idx[i]].image);
      x_flip[i] = codec::encode(img_flip[i], spec);
    }
  }

  std::vector<nn::TensorPtr> g_params = res.g->parameters();
  std::vector<nn::TensorPtr> f_params = res.f->parameters();
  f_params.push_back(res.head.weight);

  const size_t img_len = static_cast<size_t>(3) * h * w;
  const size_t rep_len = static_cast<size_t>(spec.channels()) * h * w;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = lr_at_epoch(cfg, epoch);
    const auto order = shuffled_order(n, mix_seed(cfg.data_seed, 0x51, epoch));
    double sum_gen = 0.0, sum_fr = 0.0;
    long correct = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n - start);
      nn::TensorPtr images = nn::Tensor::zeros({bsz, 3, h, w});
      nn::TensorPtr x = nn::Tensor::zeros({bsz, spec.channels(), h, w});
      std::vector<int> batch_labels(bsz);
      for (int bi = 0; bi < bsz; ++bi) {
        const int pos = order[start + bi];
        const bool flip = cfg.flip_augment && flip_coin(cfg.data_seed, epoch, pos);
        const SpatialImage& im = flip ? img_flip[pos] : ds.samples[idx[pos]].image;
        const HighDimRep& xr = flip ? x_flip[pos] : x_plain[pos];
        std::memcpy(images->value.data() + bi * img_len, im.data.data(),
                    img_len * sizeof(float));
        std::memcpy(x->value.data() + bi * rep_len, xr.data.data(), rep_len * sizeof(float));
        batch_labels[bi] = labels.of(ds.samples[idx[pos]].label);
      }
      nn::TensorPtr x_prime = res.g->forward(x);
      nn::TensorPtr images_prime = nn::decode_channels(x_prime, spec);
      nn::TensorPtr r = nn::sub(x, x_prime);
      nn::TensorPtr emb = res.f->forward(r);
      pipeline::CombinedLoss loss =
          pipeline::combined_loss(images, images_prime, emb, batch_labels, res.head, pcfg);

      const auto pred = nn::predict_classes(*emb, res.head);
      for (int bi = 0; bi < bsz; ++bi) correct += pred[bi] == batch_labels[bi];
      sum_gen += static_cast<double>(loss.l_gen->value[0]) * bsz;
      sum_fr += static_cast<double>(loss.l_fr->value[0]) * bsz;

      nn::backward(loss.total);
      nn::sgd_step(g_params, lr * cfg.generator_lr_factor, cfg.momentum, cfg.weight_decay);
      nn::sgd_step(f_params, lr, cfg.momentum, cfg.weight_decay);
    }
    EpochLog e;
    e.epoch = epoch;
    e.lr = lr;
    e.l_gen = static_cast<float>(sum_gen / n);
    e.l_fr = static_cast<float>(sum_fr / n);
    e.train_acc = static_cast<float>(correct) / static_cast<float>(n);
    res.log.push_back(e);
    if (std::getenv("MINUSFACE_VERBOSE")) {
      std::cerr << "stage1 epoch " << epoch << " lr " << lr << " l_gen " << e.l_gen << " l_fr "
                << e.l_fr << " acc " << e.train_acc << "\n";
    }
  }
  return res;
}

// ---- stage 2 -------------------------------------------------------------------

Stage2Result train_stage2(const data::ToyDataset& ds, std::shared_ptr<nn::Model> g,
                          const TrainConfig& cfg, const pipeline::ProtectorConfig& pcfg) {
  cfg.validate();
  pcfg.validate();
  if (!g) throw std::invalid_argument("train_stage2: missing generator");
  if (g->trainable()) {
    throw std::logic_error("train_stage2: generator must be frozen (set_trainable(false))");
  }
  if (pcfg.perturbation == pipeline::Perturbation::None) {
    throw std::invalid_argument("train_stage2: perturbation must be shuffle or mask");
  }
  const auto idx = ds.indices(data::Split::DefenderTrain);
  if (idx.empty()) throw std::invalid_argument("train_stage2: empty training split");
  const LabelMap labels(ds, idx);

  const int h = ds.samples[idx[0]].image.height, w = ds.samples[idx[0]].image.width;
  ResidueCache cache(ds, idx, g.get(), pcfg.mapping, true, cfg.flip_augment);

  const int copies = cfg.augment_copies;
  const int n_aug = static_cast<int>(idx.size()) * copies;
  const size_t img_len = static_cast<size_t>(3) * h * w;

  SampleFn fill = [&](int epoch, int pos, float* dst, int* cls) {
    const int base = pos / copies;
    const bool flip = cfg.flip_augment && flip_coin(cfg.data_seed, epoch, pos);
    // fresh seed per copy and per epoch
    const ShuffleSeed seed{mix_seed(cfg.shuffle_seed, static_cast<uint64_t>(epoch), pos)};
    const SpatialImage xp = pipeline::protect_from_residue(cache.residue(base, flip), seed, pcfg);
    std::memcpy(dst, xp.data.data(), img_len * sizeof(float));
    *cls = labels.of(ds.samples[idx[base]].label);
  };

  RecognizerResult r =
      fit_recognizer(3, h, w, n_aug, labels.count(), fill, cfg, 0x52F2, "stage2");
  return Stage2Result{r.net, r.head, r.log};
}

// ---- baseline / ablation recognizers ---------------------------------------------

RecognizerResult train_recognizer(const data::ToyDataset& ds, RecognizerInput input,
                                  std::shared_ptr<nn::Model> g, const TrainConfig& cfg,
                                  const pipeline::ProtectorConfig& pcfg) {
  cfg.validate();
  const auto idx = ds.indices(data::Split::DefenderTrain);
  if (idx.empty()) throw std::invalid_argument("train_recognizer: empty training split");
  const LabelMap labels(ds, idx);
  const int h = ds.samples[idx[0]].image.height, w = ds.samples[idx[0]].image.width;

  if (input == RecognizerInput::RawImages) {
    std::vector<SpatialImage> flips;
    if (cfg.flip_augment) {
      for (int i : idx) flips.push_back(data::hflip(ds.samples[i].image));
    }
    const size_t img_len = static_cast<size_t>(3) * h * w;
    SampleFn fill = [&, idx](int epoch, int pos, float* dst, int* cls) {
      const bool flip = cfg.flip_augment && flip_coin(cfg.data_seed, epoch, pos);
      const SpatialImage& im = flip ? flips[pos] : ds.samples[idx[pos]].image;
      std::memcpy(dst, im.data.data(), img_len * sizeof(float));
      *cls = labels.of(ds.samples[idx[pos]].label);
    };
    return fit_recognizer(3, h, w, static_cast<int>(idx.size()), labels.count(), fill, cfg,
                          0xBA5E, "baseline");
  }

  if (!g) throw std::invalid_argument("train_recognizer: residue inputs need a generator");
  ResidueCache cache(ds, idx, g.get(), pcfg.mapping, true, cfg.flip_augment);

  if (input == RecognizerInput::Residue) {
    const size_t rep_len = static_cast<size_t>(pcfg.mapping.channels()) * h * w;
    SampleFn fill = [&, idx](int epoch, int pos, float* dst, int* cls) {
      const bool flip = cfg.flip_augment && flip_coin(cfg.data_seed, epoch, pos);
      std::memcpy(dst, cache.residue(pos, flip).data.data(), rep_len * sizeof(float));
      *cls = labels.of(ds.samples[idx[pos]].label);
    };
    return fit_recognizer(pcfg.mapping.channels(), h, w, static_cast<int>(idx.size()),
                          labels.count(), fill, cfg, 0x4E51, "on-r");
  }

  // DecodedResidue: R' = d(r), cached as spatial images
  std::vector<SpatialImage> rprime, rprime_flip;
  for (int i = 0; i < cache.count(); ++i) {
    rprime.push_back(codec::decode(cache.residue(i, false), pcfg.mapping));
    if (cfg.flip_augment) {
      rprime_flip.push_back(codec::decode(cache.residue(i, true), pcfg.mapping));
    }
  }
  const size_t img_len = static_cast<size_t>(3) * h * w;
  SampleFn fill = [&, idx](int epoch, int pos, float* dst, int* cls) {
    const bool flip = cfg.flip_augment && flip_coin(cfg.data_seed, epoch, pos);
    const SpatialImage& im = flip ? rprime_flip[pos] : rprime[pos];
    std::memcpy(dst, im.data.data(), img_len * sizeof(float));
    *cls = labels.of(ds.samples[idx[pos]].label);
  };
  return fit_recognizer(3, h, w, static_cast<int>(idx.size()), labels.count(), fill, cfg,
                        0x4E52, "on-rprime");
}

// ---- recovery -----------------------------------------------------------------

RecoveryResult train_recovery(const data::ToyDataset& ds, std::shared_ptr<nn::Model> g,
                              const pipeline::ProtectorConfig& pcfg,
                              const RecoveryConfig& rcfg) {
  const auto idx = ds.indices(data::Split::Attacker);
  if (idx.empty()) throw std::invalid_argument("train_recovery: empty attacker split");
  const int n = static_cast<int>(idx.size());
  const int h = ds.samples[idx[0]].image.height, w = ds.samples[idx[0]].image.width;
  const size_t img_len = static_cast<size_t>(3) * h * w;

  std::unique_ptr<ResidueCache> cache;
  if (rcfg.task == RecoveryTask::Protected) {
    cache = std::make_unique<ResidueCache>(ds, idx, g.get(), pcfg.mapping,
                                           rcfg.feature_subtraction, false);
  }

  RecoveryResult res;
  res.f_inv = nn::build_recovery(mix_seed(rcfg.init_seed, 0x1C0));
  std::vector<nn::TensorPtr> params = res.f_inv->parameters();

  double best = 1e30;
  int since_best = 0;
  for (int epoch = 0; epoch < rcfg.epochs; ++epoch) {
    const auto order = shuffled_order(n, mix_seed(rcfg.data_seed, 0x7EC, epoch));
    double sum_l1 = 0.0;
    for (int start = 0; start < n; start += rcfg.batch_size) {
      const int bsz = std::min(rcfg.batch_size, n - start);
      nn::TensorPtr input = nn::Tensor::zeros({bsz, 3, h, w});
      nn::TensorPtr target = nn::Tensor::zeros({bsz, 3, h, w});
      for (int bi = 0; bi < bsz; ++bi) {
        const int pos = order[start + bi];
        const SpatialImage& orig = ds.samples[idx[pos]].image;
        std::memcpy(target->value.data() + bi * img_len, orig.data.data(),
                    img_len * sizeof(float));
        if (rcfg.task == RecoveryTask::IdentityBaseline) {
          std::memcpy(input->value.data() + bi * img_len, orig.data.data(),
                      img_len * sizeof(float));
        } else {
          const ShuffleSeed seed{rcfg.fixed_seed
                                     ? rcfg.fixed_theta
                                     : mix_seed(rcfg.shuffle_seed, epoch, pos)};
          const SpatialImage xp =
              pipeline::protect_from_residue(cache->residue(pos), seed, pcfg);
          std::memcpy(input->value.data() + bi * img_len, xp.data.data(),
                      img_len * sizeof(float));
        }
      }
      nn::TensorPtr out = res.f_inv->forward(input);
      nn::TensorPtr loss = nn::l1_loss(out, target);
      sum_l1 += static_cast<double>(loss->value[0]) * bsz;
      nn::backward(loss);
      nn::sgd_step(params, rcfg.lr, rcfg.momentum, rcfg.weight_decay);
    }
    EpochLog e;
    e.epoch = epoch;
    e.lr = rcfg.lr;
    e.l_gen = static_cast<float>(sum_l1 / n);
    e.l_fr = 0.0f;
    e.train_acc = 0.0f;
    res.log.push_back(e);
    if (std::getenv("MINUSFACE_VERBOSE")) {
      std::cerr << "recovery epoch " << epoch << " l1 " << e.l_gen << "\n";
    }
    if (e.l_gen < best - 1e-4) {
      best = e.l_gen;
      since_best = 0;
    } else if (++since_best >= rcfg.patience) {
      break;  // plateau
    }
  }
  return res;
}

// ---- eval helpers -----------------------------------------------------------------

std::vector<std::vector<float>> embed_images(nn::Model& net,
                                             const std::vector<SpatialImage>& images,
                                             int batch_size) {
  nn::NoGradGuard no_grad;
  std::vector<std::vector<float>> out;
  for (size_t start = 0; start < images.size(); start += batch_size) {
    const size_t bsz = std::min(static_cast<size_t>(batch_size), images.size() - start);
    std::vector<const SpatialImage*> ptrs;
    for (size_t i = 0; i < bsz; ++i) ptrs.push_back(&images[start + i]);
    nn::TensorPtr emb = net.forward(pipeline::images_to_tensor(ptrs));
    const int d = emb->dim(1);
    for (size_t i = 0; i < bsz; ++i) {
      out.emplace_back(emb->value.begin() + i * d, emb->value.begin() + (i + 1) * d);
    }
  }
  return out;
}

std::vector<std::vector<float>> embed_reps(nn::Model& net, const std::vector<HighDimRep>& reps,
                                           int batch_size) {
  nn::NoGradGuard no_grad;
  std::vector<std::vector<float>> out;
  for (size_t start = 0; start < reps.size(); start += batch_size) {
    const size_t bsz = std::min(static_cast<size_t>(batch_size), reps.size() - start);
    std::vector<const HighDimRep*> ptrs;
    for (size_t i = 0; i < bsz; ++i) ptrs.push_back(&reps[start + i]);
    nn::TensorPtr emb = net.forward(pipeline::reps_to_tensor(ptrs));
    const int d = emb->dim(1);
    for (size_t i = 0; i < bsz; ++i) {
      out.emplace_back(emb->value.begin() + i * d, emb->value.begin() + (i + 1) * d);
    }
  }
  return out;
}

}  // namespace minusface::train
