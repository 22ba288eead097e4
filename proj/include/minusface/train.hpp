#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "minusface/data.hpp"
#include "minusface/nn.hpp"
#include "minusface/pipeline.hpp"

namespace minusface::train {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  float lr_initial = 1e-2f;
  std::vector<int> lr_drop_epochs = {15, 24};  // lr divides by 10 at each
  float momentum = 0.9f;
  float weight_decay = 1e-4f;
  float generator_lr_factor = 0.5f;  // g trains at half the recognizer lr
  int augment_copies = 3;            // protected variants per image in stage 2
  bool flip_augment = true;          // horizontal flips, applied before encoding
  int embedding_dim = 64;
  float arc_scale = 16.0f;
  float arc_margin = 0.3f;
  uint64_t init_seed = 1;
  uint64_t data_seed = 2;
  uint64_t shuffle_seed = 3;

  void validate() const;

  // Desk-scale defaults (the struct initializers above).
  static TrainConfig desk_defaults() { return TrainConfig{}; }
  // The full-scale schedule: 24 epochs, batch 64, drops at 10/18/22. Tuned
  // for millions of images; kept as a named preset.
  static TrainConfig paper_preset();
};

// lr_initial / 10^(number of drop epochs <= epoch)
float lr_at_epoch(const TrainConfig& cfg, int epoch);

struct EpochLog {
  int epoch = 0;
  float lr = 0;
  float l_gen = 0;
  float l_fr = 0;
  float train_acc = 0;
};
using TrainLog = std::vector<EpochLog>;

void write_log(std::ostream& out, const TrainLog& log);
TrainLog read_log(std::istream& in);

// ---- stage 1: co-train g and f under the combined objective ---------------

struct Stage1Result {
  std::shared_ptr<nn::Model> g;
  std::shared_ptr<nn::Model> f;  // persisted for the residue ablation
  nn::ArcFaceHead head;
  TrainLog log;
};

Stage1Result train_stage1(const data::ToyDataset& ds, const TrainConfig& cfg,
                          const pipeline::ProtectorConfig& pcfg);

// ---- stage 2: freeze g, train f_p on protected representations -------------

struct Stage2Result {
  std::shared_ptr<nn::Model> f_p;
  nn::ArcFaceHead head;
  TrainLog log;
};

// Each training image expands into cfg.augment_copies protected variants with
// fresh seeds every epoch. Throws std::logic_error if g still has trainable
// parameters; perturbation must be Shuffle or Mask.
Stage2Result train_stage2(const data::ToyDataset& ds, std::shared_ptr<nn::Model> g,
                          const TrainConfig& cfg, const pipeline::ProtectorConfig& pcfg);

// ---- plain recognizers for baselines and ablations -------------------------

enum class RecognizerInput {
  RawImages,       // unprotected baseline on X
  Residue,         // 192/12-channel r (this is what stage-1 f consumes)
  DecodedResidue,  // R' = d(r), the trained-blank spatial residue
};

struct RecognizerResult {
  std::shared_ptr<nn::Model> net;
  nn::ArcFaceHead head;
  TrainLog log;
};

// g may be null for RawImages; it must be frozen otherwise.
RecognizerResult train_recognizer(const data::ToyDataset& ds, RecognizerInput input,
                                  std::shared_ptr<nn::Model> g, const TrainConfig& cfg,
                                  const pipeline::ProtectorConfig& pcfg);

// ---- residue cache ----------------------------------------------------------

// With g frozen, each image's residue is constant, so protecting under many
// seeds reduces to perturb+decode of a cached r.
class ResidueCache {
 public:
  // feature_subtraction=false caches r = e(X) directly (the no-subtraction
  // ablation); g is unused then and may be null.
  ResidueCache(const data::ToyDataset& ds, const std::vector<int>& indices, nn::Model* g,
               const MappingSpec& spec, bool feature_subtraction, bool with_flips);

  int count() const { return static_cast<int>(plain_.size()); }
  const HighDimRep& residue(int pos, bool flipped = false) const;
  const SpatialImage& original(int pos) const;
  int dataset_index(int pos) const { return indices_[pos]; }

 private:
  std::vector<int> indices_;
  std::vector<const SpatialImage*> originals_;
  std::vector<HighDimRep> plain_, flipped_;
};

// ---- the attacker's recovery model ------------------------------------------

enum class RecoveryTask {
  IdentityBaseline,  // X_p = X; upper-bound sanity attacker
  Protected,         // X_p from the protector under per-sample seeds
};

struct RecoveryConfig {
  RecoveryTask task = RecoveryTask::Protected;
  int epochs = 40;  // budget; early stop on train-loss plateau
  int batch_size = 32;
  float lr = 1e-3f;
  float momentum = 0.9f;
  float weight_decay = 1e-4f;
  int patience = 5;
  bool fixed_seed = false;  // single theta throughout vs fresh per sample+epoch
  uint64_t fixed_theta = 0;
  bool feature_subtraction = true;  // false reproduces the no-subtraction ablation
  uint64_t init_seed = 7;
  uint64_t data_seed = 8;
  uint64_t shuffle_seed = 9;
};

struct RecoveryResult {
  std::shared_ptr<nn::Model> f_inv;
  TrainLog log;
};

// Trains f^-1 on the attacker split to map X_p back to X under L1.
RecoveryResult train_recovery(const data::ToyDataset& ds, std::shared_ptr<nn::Model> g,
                              const pipeline::ProtectorConfig& pcfg, const RecoveryConfig& rcfg);

// ---- shared eval helpers ------------------------------------------------------

// Batched embedding extraction with a frozen recognizer.
std::vector<std::vector<float>> embed_images(nn::Model& net, const std::vector<SpatialImage>& images,
                                             int batch_size = 32);
std::vector<std::vector<float>> embed_reps(nn::Model& net, const std::vector<HighDimRep>& reps,
                                           int batch_size = 32);

}  // namespace minusface::train
