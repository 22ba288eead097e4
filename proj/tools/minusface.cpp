// minusface: command-line entry point for the full workflow.
//
// All randomness flows from explicit seeds, so every subcommand is
// deterministic given its flags. Seeds accept decimal or 0x-hex. A flat JSON
// config file (--config) supplies defaults; command-line flags override it.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <set>

#include "minusface/attack.hpp"
#include "minusface/codec.hpp"
#include "minusface/data.hpp"
#include "minusface/metrics.hpp"
#include "minusface/mfrp.hpp"
#include "minusface/nn.hpp"
#include "minusface/perturb.hpp"
#include "minusface/pipeline.hpp"
#include "minusface/train.hpp"

using namespace minusface;
using nlohmann::json;

namespace {

uint64_t parse_seed(const std::string& s) {
  try {
    return std::stoull(s, nullptr, 0);  // base 0: decimal or 0x-hex
  } catch (const std::exception&) {
    throw std::runtime_error("bad seed '" + s + "' (expected decimal or 0x-hex)");
  }
}

// Flat JSON config: values become option defaults, flags still override.
class Defaults {
 public:
  explicit Defaults(json j) : j_(std::move(j)) {}

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (j_.contains(key)) return j_.at(key).get<T>();
    return fallback;
  }
  std::string get_str(const std::string& key, const std::string& fallback) const {
    if (j_.contains(key)) {
      const auto& v = j_.at(key);
      return v.is_string() ? v.get<std::string>() : v.dump();
    }
    return fallback;
  }

 private:
  json j_;
};

Defaults load_defaults(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc - 1; ++i) {
    if (std::string(argv[i]) == "--config") path = argv[i + 1];
  }
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty()) return Defaults(json::object());
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  in >> j;
  if (!j.is_object()) throw std::runtime_error("config must be a flat JSON object");
  return Defaults(std::move(j));
}

struct TrainFlags {
  std::string data_dir, mapping = "dct8";
  int epochs = 30, batch = 32, embedding_dim = 64, augment_copies = 3;
  float lr = 1e-2f, momentum = 0.9f, weight_decay = 1e-4f, gen_lr_factor = 0.5f;
  float alpha = 5.0f, beta = 1.0f, arc_scale = 16.0f, arc_margin = 0.3f;
  std::vector<int> drops = {15, 24};
  bool paper_schedule = false, no_flip = false;
  std::string init_seed = "1", data_seed = "2", shuffle_seed = "3";
  std::string log_path;

  void add_common(CLI::App* cmd, const Defaults& dfl) {
    cmd->add_option("--data", data_dir, "dataset directory (from gen-data)")->required();
    cmd->add_option("--mapping", mapping, "encode/decode mapping: dct8 or haar2")
        ->default_val(dfl.get_str("mapping", mapping));
    cmd->add_option("--epochs", epochs, "training epochs")->default_val(dfl.get("epochs", epochs));
    cmd->add_option("--batch", batch, "batch size")->default_val(dfl.get("batch", batch));
    cmd->add_option("--lr", lr, "initial learning rate")->default_val(dfl.get("lr", lr));
    cmd->add_option("--lr-drops", drops, "epochs at which the lr divides by 10");
    cmd->add_option("--momentum", momentum, "SGD momentum")
        ->default_val(dfl.get("momentum", momentum));
    cmd->add_option("--weight-decay", weight_decay, "SGD weight decay")
        ->default_val(dfl.get("weight_decay", weight_decay));
    cmd->add_option("--embedding-dim", embedding_dim, "recognizer embedding size")
        ->default_val(dfl.get("embedding_dim", embedding_dim));
    cmd->add_option("--arc-scale", arc_scale, "ArcFace logit scale")
        ->default_val(dfl.get("arc_scale", arc_scale));
    cmd->add_option("--arc-margin", arc_margin, "ArcFace additive angular margin")
        ->default_val(dfl.get("arc_margin", arc_margin));
    cmd->add_flag("--paper-schedule", paper_schedule,
                  "use the full-scale preset (24 epochs, batch 64, lr drops at 10/18/22)");
    cmd->add_flag("--no-flip", no_flip, "disable horizontal flip augmentation");
    cmd->add_option("--init-seed", init_seed, "weight init seed (decimal or 0x-hex)")
        ->default_val(dfl.get_str("init_seed", init_seed));
    cmd->add_option("--data-seed", data_seed, "batch order / flip seed")
        ->default_val(dfl.get_str("data_seed", data_seed));
    cmd->add_option("--shuffle-seed", shuffle_seed, "channel shuffle seed stream")
        ->default_val(dfl.get_str("shuffle_seed", shuffle_seed));
    cmd->add_option("--log", log_path, "write the per-epoch training log to this file");
  }

  train::TrainConfig to_config() const {
    train::TrainConfig cfg = paper_schedule ? train::TrainConfig::paper_preset()
                                            : train::TrainConfig::desk_defaults();
    if (!paper_schedule) {
      cfg.epochs = epochs;
      cfg.batch_size = batch;
      cfg.lr_drop_epochs = drops;
    }
    cfg.lr_initial = lr;
    cfg.momentum = momentum;
    cfg.weight_decay = weight_decay;
    cfg.generator_lr_factor = gen_lr_factor;
    cfg.augment_copies = augment_copies;
    cfg.flip_augment = !no_flip;
    cfg.embedding_dim = embedding_dim;
    cfg.arc_scale = arc_scale;
    cfg.arc_margin = arc_margin;
    cfg.init_seed = parse_seed(init_seed);
    cfg.data_seed = parse_seed(data_seed);
    cfg.shuffle_seed = parse_seed(shuffle_seed);
    cfg.validate();
    return cfg;
  }

  pipeline::ProtectorConfig to_protector(pipeline::Perturbation p,
                                         float mask_ratio = 0.25f) const {
    pipeline::ProtectorConfig pcfg;
    pcfg.mapping = MappingSpec::from_name(mapping);
    pcfg.alpha = alpha;
    pcfg.beta = beta;
    pcfg.perturbation = p;
    pcfg.mask_ratio = mask_ratio;
    pcfg.validate();
    return pcfg;
  }
};

void write_log_file(const std::string& path, const train::TrainLog& log) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write log '" + path + "'");
  train::write_log(out, log);
}

SpatialImage load_any_image(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".mfrp") {
    return mfrp::load_spatial(path);
  }
  return data::load_image(path);
}

// ---- check-invariants --------------------------------------------------------

bool check_line(const char* name, bool ok, double value, double bound, const char* rel) {
  std::printf("%-52s %-4s (%.3g %s %.3g)\n", name, ok ? "PASS" : "FAIL", value, rel, bound);
  return ok;
}

int run_check_invariants(const std::string& mapping, int trials) {
  const MappingSpec spec = MappingSpec::from_name(mapping);
  SplitMix64 rng(0xC0DEC);
  bool all = true;

  double worst_rt = 0, worst_hom = 0, worst_proj = 0;
  for (int t = 0; t < trials; ++t) {
    SpatialImage img(32, 32);
    for (float& v : img.data) v = static_cast<float>(rng.next_double());
    const auto x = codec::encode(img, spec);
    const auto back = codec::decode(x, spec);
    for (size_t i = 0; i < img.data.size(); ++i) {
      worst_rt = std::max(worst_rt, std::abs(static_cast<double>(img.data[i]) - back.data[i]));
    }

    HighDimRep a(spec.channels(), 8, 8), b(spec.channels(), 8, 8);
    for (float& v : a.data) v = static_cast<float>(rng.uniform(-2, 2));
    for (float& v : b.data) v = static_cast<float>(rng.uniform(-2, 2));
    HighDimRep sum(spec.channels(), 8, 8);
    for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] = a.data[i] + b.data[i];
    const auto da = codec::decode(a, spec), db = codec::decode(b, spec),
               dsum = codec::decode(sum, spec);
    for (size_t i = 0; i < dsum.data.size(); ++i) {
      worst_hom = std::max(
          worst_hom, std::abs(static_cast<double>(dsum.data[i]) - da.data[i] - db.data[i]));
    }

    const auto p1 = codec::encode(codec::decode(a, spec), spec);
    const auto p2 = codec::encode(codec::decode(p1, spec), spec);
    for (size_t i = 0; i < p1.data.size(); ++i) {
      worst_proj =
          std::max(worst_proj, std::abs(static_cast<double>(p1.data[i]) - p2.data[i]));
    }
  }
  all &= check_line("codec roundtrip decode(encode(X)) = X", worst_rt <= 1e-5, worst_rt, 1e-5,
                    "<=");
  all &= check_line("codec homomorphism d(a+b) = d(a)+d(b)", worst_hom <= 1e-5, worst_hom, 1e-5,
                    "<=");
  all &= check_line("codec projector idempotence P(P(x)) = P(x)", worst_proj <= 1e-5, worst_proj,
                    1e-5, "<=");

  bool bijective = true;
  int collisions = 0;
  {
    std::set<std::vector<uint32_t>> seen;
    for (int t = 0; t < 2000; ++t) {
      const auto perm = perturb::permutation_from_seed({rng.next()}, spec.channels());
      bijective &= perm.is_valid();
      if (!seen.insert(perm.mapping).second) ++collisions;
    }
  }
  all &= check_line("shuffle permutations are bijections", bijective, bijective ? 1 : 0, 1, "==");
  all &= check_line("distinct seeds avoid permutation collisions", collisions == 0, collisions, 0,
                    "==");

  double l1_drift = 0;
  for (int t = 0; t < trials; ++t) {
    HighDimRep r(spec.channels(), 8, 8);
    for (float& v : r.data) v = static_cast<float>(rng.uniform(-2, 2));
    const auto s = perturb::shuffle_channels(
        r, perturb::permutation_from_seed({rng.next()}, spec.channels()));
    double la = 0, lb = 0;
    for (float v : r.data) la += std::abs(v);
    for (float v : s.data) lb += std::abs(v);
    l1_drift = std::max(l1_drift, std::abs(la - lb));
  }
  all &= check_line("shuffle conserves the L1 norm", l1_drift <= 1e-6, l1_drift, 1e-6, "<=");

  std::printf("%s\n", all ? "ALL INVARIANTS PASS" : "INVARIANT FAILURES");
  return all ? 0 : 1;
}

// ---- report -------------------------------------------------------------------

int run_report(const std::vector<std::string>& logs, const std::vector<std::string>& attacks) {
  auto split_name_path = [](const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("expected name=path, got '" + s + "'");
    }
    return std::make_pair(s.substr(0, eq), s.substr(eq + 1));
  };
  if (!logs.empty()) {
    std::printf("== training summary (final epoch) ==\n");
    std::printf("%-20s %8s %10s %10s %8s\n", "run", "epochs", "l_gen", "l_fr", "acc");
    for (const auto& s : logs) {
      const auto [name, path] = split_name_path(s);
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open log '" + path + "'");
      const auto log = train::read_log(in);
      if (log.empty()) throw std::runtime_error("empty log '" + path + "'");
      const auto& e = log.back();
      std::printf("%-20s %8zu %10.4f %10.4f %8.3f\n", name.c_str(), log.size(), e.l_gen, e.l_fr,
                  e.train_acc);
    }
  }
  if (!attacks.empty()) {
    std::printf("== recovery summary ==\n");
    std::printf("%-20s %8s %10s %10s %12s\n", "attack", "count", "ssim", "psnr", "floor_ssim");
    for (const auto& s : attacks) {
      const auto [name, path] = split_name_path(s);
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open report '" + path + "'");
      std::string line;
      double ssim = 0, psnr = 0, fl = 0;
      int count = 0;
      while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "ssim_mean") ssim = std::stod(v);
        if (k == "psnr_mean") psnr = std::stod(v);
        if (k == "floor_ssim_mean") fl = std::stod(v);
        if (k == "count") count = std::stoi(v);
      }
      std::printf("%-20s %8d %10.4f %10.2f %12.4f\n", name.c_str(), count, ssim, psnr, fl);
    }
  }
  return 0;
}

double verification_accuracy_from_embeddings(
    const data::ToyDataset& ds, const std::vector<int>& indices,
    const std::vector<std::vector<float>>& embs, int n_pairs, uint64_t pair_seed) {
  const auto pairs = data::make_pairs(ds, n_pairs, pair_seed);
  std::vector<int> pos_of(ds.samples.size(), -1);
  for (size_t i = 0; i < indices.size(); ++i) pos_of[indices[i]] = static_cast<int>(i);
  std::vector<std::vector<float>> ea, eb;
  std::vector<bool> same;
  for (const auto& p : pairs) {
    ea.push_back(embs[pos_of[p.index_a]]);
    eb.push_back(embs[pos_of[p.index_b]]);
    same.push_back(p.same);
  }
  return metrics::verify_pairs(ea, eb, same).accuracy;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MinusFace: privacy-preserving face representation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "flat JSON config file; command-line flags override its values");
  int exit_code = 0;

  try {
    const Defaults dfl = load_defaults(argc, argv);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate the synthetic identity dataset");
    int g_ids = 20, g_per = 20, g_size = 32;
    std::string g_seed = "7", g_out;
    gen->add_option("--ids", g_ids, "identity count (half defender, half attacker)")
        ->default_val(dfl.get("ids", g_ids));
    gen->add_option("--per-id", g_per, "images per identity")
        ->default_val(dfl.get("per_id", g_per));
    gen->add_option("--size", g_size, "image side length")->default_val(dfl.get("size", g_size));
    gen->add_option("--seed", g_seed, "dataset seed (decimal or 0x-hex)")
        ->default_val(dfl.get_str("seed", g_seed));
    gen->add_option("--out", g_out, "output directory")->required();
    gen->callback([&] {
      const auto ds = data::generate_toy_dataset(g_ids, g_per, g_size, parse_seed(g_seed));
      data::save_dataset(ds, g_out);
      std::printf("wrote %zu images (%d ids) and manifest to %s\n", ds.samples.size(), g_ids,
                  g_out.c_str());
    });

    // ---- train-stage1 ----
    auto* s1 = app.add_subcommand("train-stage1",
                                  "co-train the generator g and recognizer f on residues");
    TrainFlags s1f;
    s1f.add_common(s1, dfl);
    std::string s1_gen_out = "g.mfck", s1_f_out;
    s1->add_option("--alpha", s1f.alpha, "weight on the regeneration L1 term")
        ->default_val(dfl.get("alpha", s1f.alpha));
    s1->add_option("--beta", s1f.beta, "weight on the ArcFace term")
        ->default_val(dfl.get("beta", s1f.beta));
    s1->add_option("--gen-lr-factor", s1f.gen_lr_factor, "generator lr multiplier")
        ->default_val(dfl.get("gen_lr_factor", s1f.gen_lr_factor));
    s1->add_option("--out-gen", s1_gen_out, "generator checkpoint path");
    s1->add_option("--out-frec", s1_f_out,
                   "optional checkpoint for the stage-1 recognizer f (residue ablation)");
    s1->callback([&] {
      const auto ds = data::load_dataset(s1f.data_dir);
      const auto cfg = s1f.to_config();
      const auto pcfg = s1f.to_protector(pipeline::Perturbation::Shuffle);
      auto res = train::train_stage1(ds, cfg, pcfg);
      res.g->set_trainable(false);
      nn::save_checkpoint(s1_gen_out, *res.g);
      if (!s1_f_out.empty()) nn::save_checkpoint(s1_f_out, *res.f, &res.head);
      write_log_file(s1f.log_path, res.log);
      std::printf("stage1 done: l_gen %.4f l_fr %.4f acc %.3f -> %s\n", res.log.back().l_gen,
                  res.log.back().l_fr, res.log.back().train_acc, s1_gen_out.c_str());
    });

    // ---- train-stage2 ----
    auto* s2 = app.add_subcommand("train-stage2",
                                  "freeze g and train f_p on protected representations");
    TrainFlags s2f;
    s2f.add_common(s2, dfl);
    std::string s2_gen, s2_out = "fp.mfck", s2_perturb = "shuffle";
    float s2_mask_ratio = 0.25f;
    s2->add_option("--gen", s2_gen, "frozen generator checkpoint")->required();
    s2->add_option("--perturb", s2_perturb, "perturbation: shuffle or mask")
        ->default_val(dfl.get_str("perturb", s2_perturb));
    s2->add_option("--mask-ratio", s2_mask_ratio, "masked channel share for --perturb mask")
        ->default_val(dfl.get("mask_ratio", s2_mask_ratio));
    s2->add_option("--augment-copies", s2f.augment_copies,
                   "protected variants per image per epoch")
        ->default_val(dfl.get("augment_copies", s2f.augment_copies));
    s2->add_option("--out-fp", s2_out, "f_p checkpoint path");
    s2->callback([&] {
      const auto ds = data::load_dataset(s2f.data_dir);
      const auto cfg = s2f.to_config();
      const auto pcfg =
          s2f.to_protector(pipeline::perturbation_from_name(s2_perturb), s2_mask_ratio);
      auto g = nn::load_generator_checkpoint(s2_gen);
      auto res = train::train_stage2(ds, g, cfg, pcfg);
      nn::save_checkpoint(s2_out, *res.f_p, &res.head);
      write_log_file(s2f.log_path, res.log);
      std::printf("stage2 done: l_fr %.4f acc %.3f -> %s\n", res.log.back().l_fr,
                  res.log.back().train_acc, s2_out.c_str());
    });

    // ---- protect ----
    auto* pr = app.add_subcommand("protect", "turn an image into a protective representation");
    std::string pr_image, pr_gen, pr_seed, pr_out, pr_png,
        pr_mapping = dfl.get_str("mapping", "dct8"), pr_perturb = "shuffle";
    float pr_mask_ratio = 0.25f;
    pr->add_option("--image", pr_image, "input image (.png/.ppm/.mfrp)")->required();
    pr->add_option("--gen", pr_gen, "frozen generator checkpoint")->required();
    pr->add_option("--mapping", pr_mapping, "dct8 or haar2");
    pr->add_option("--seed", pr_seed, "sample-wise shuffle seed (decimal or 0x-hex)")->required();
    pr->add_option("--perturb", pr_perturb, "shuffle, mask, or none (ablation only)");
    pr->add_option("--mask-ratio", pr_mask_ratio, "masked channel share for --perturb mask");
    pr->add_option("--out", pr_out, "output MFRP spatial tensor")->required();
    pr->add_option("--png", pr_png, "optional clamped 8-bit visualization copy");
    pr->callback([&] {
      const auto img = load_any_image(pr_image);
      auto g = nn::load_generator_checkpoint(pr_gen);
      pipeline::ProtectorConfig pcfg;
      pcfg.mapping = MappingSpec::from_name(pr_mapping);
      pcfg.perturbation = pipeline::perturbation_from_name(pr_perturb);
      pcfg.mask_ratio = pr_mask_ratio;
      const auto xp = pipeline::protect(img, *g, {parse_seed(pr_seed)}, pcfg);
      // the seed itself is never written into the output file
      const uint8_t flags =
          pcfg.perturbation == pipeline::Perturbation::None ? mfrp::kFlagUnperturbed : 0;
      mfrp::save_spatial(pr_out, xp, flags);
      if (!pr_png.empty()) data::save_image(xp.clamped01(), pr_png);
      std::printf("protected %s -> %s (%s)\n", pr_image.c_str(), pr_out.c_str(),
                  pipeline::perturbation_name(pcfg.perturbation));
    });

    // ---- enroll ----
    auto* en = app.add_subcommand("enroll", "extract templates into a JSON gallery");
    std::string en_model, en_out = "gallery.json";
    std::vector<std::string> en_images;
    en->add_option("--model", en_model, "recognizer checkpoint (f_p)")->required();
    en->add_option("--images", en_images, "images or MFRP spatial tensors")->required();
    en->add_option("--out", en_out, "gallery JSON path");
    en->callback([&] {
      auto rec = nn::load_recognizer_checkpoint(en_model);
      std::vector<SpatialImage> imgs;
      for (const auto& p : en_images) imgs.push_back(load_any_image(p));
      const auto embs = train::embed_images(*rec.net, imgs);
      json gallery = json::array();
      for (size_t i = 0; i < embs.size(); ++i) {
        gallery.push_back({{"path", en_images[i]}, {"embedding", embs[i]}});
      }
      std::ofstream out(en_out);
      if (!out) throw std::runtime_error("cannot write '" + en_out + "'");
      out << gallery.dump(2) << "\n";
      std::printf("enrolled %zu templates -> %s\n", embs.size(), en_out.c_str());
    });

    // ---- verify ----
    auto* ve = app.add_subcommand("verify", "compare two images with a recognizer");
    std::string ve_model, ve_a, ve_b;
    double ve_threshold = 0.5;
    ve->add_option("--model", ve_model, "recognizer checkpoint")->required();
    ve->add_option("--a", ve_a, "first image")->required();
    ve->add_option("--b", ve_b, "second image")->required();
    ve->add_option("--threshold", ve_threshold, "cosine decision threshold")
        ->default_val(dfl.get("threshold", ve_threshold));
    ve->callback([&] {
      auto rec = nn::load_recognizer_checkpoint(ve_model);
      const auto embs =
          train::embed_images(*rec.net, {load_any_image(ve_a), load_any_image(ve_b)});
      const double cos = metrics::cosine_similarity(embs[0], embs[1]);
      std::printf("cosine=%.4f threshold=%.4f decision=%s\n", cos, ve_threshold,
                  cos >= ve_threshold ? "same" : "different");
    });

    // ---- train-attack ----
    auto* ta = app.add_subcommand("train-attack", "train the recovery model f^-1");
    std::string ta_data, ta_gen, ta_out = "finv.mfck", ta_mode = "random",
                ta_task = "protected", ta_theta = "0",
                ta_mapping = dfl.get_str("mapping", "dct8"), ta_log;
    int ta_epochs = 40, ta_batch = 32, ta_patience = 5;
    float ta_lr = 1e-3f;
    bool ta_no_subtraction = false;
    ta->add_option("--data", ta_data, "dataset directory (attacker split is used)")->required();
    ta->add_option("--gen", ta_gen, "frozen generator checkpoint (protected task)");
    ta->add_option("--mapping", ta_mapping, "dct8 or haar2");
    ta->add_option("--mode", ta_mode, "random (fresh theta per sample and epoch) or fixed");
    ta->add_option("--theta", ta_theta, "the single theta for --mode fixed");
    ta->add_option("--task", ta_task, "protected or identity (sanity upper bound)");
    ta->add_flag("--no-subtraction", ta_no_subtraction,
                 "ablation: shuffle x = e(X) directly, skipping feature subtraction");
    ta->add_option("--epochs", ta_epochs, "epoch budget (early stop on plateau)")
        ->default_val(dfl.get("attack_epochs", ta_epochs));
    ta->add_option("--batch", ta_batch, "batch size")->default_val(dfl.get("batch", ta_batch));
    ta->add_option("--lr", ta_lr, "learning rate")->default_val(dfl.get("attack_lr", ta_lr));
    ta->add_option("--patience", ta_patience, "plateau patience in epochs");
    ta->add_option("--out", ta_out, "f^-1 checkpoint path");
    ta->add_option("--log", ta_log, "training log path");
    ta->callback([&] {
      const auto ds = data::load_dataset(ta_data);
      pipeline::ProtectorConfig pcfg;
      pcfg.mapping = MappingSpec::from_name(ta_mapping);
      train::RecoveryConfig rcfg;
      rcfg.epochs = ta_epochs;
      rcfg.batch_size = ta_batch;
      rcfg.lr = ta_lr;
      rcfg.patience = ta_patience;
      rcfg.fixed_seed = ta_mode == "fixed";
      rcfg.fixed_theta = parse_seed(ta_theta);
      rcfg.feature_subtraction = !ta_no_subtraction;
      rcfg.task = ta_task == "identity" ? train::RecoveryTask::IdentityBaseline
                                        : train::RecoveryTask::Protected;
      std::shared_ptr<nn::Model> g;
      if (rcfg.task == train::RecoveryTask::Protected && rcfg.feature_subtraction) {
        if (ta_gen.empty()) throw std::runtime_error("--gen is required for the protected task");
        g = nn::load_generator_checkpoint(ta_gen);
      }
      auto res = train::train_recovery(ds, g, pcfg, rcfg);
      nn::save_checkpoint(ta_out, *res.f_inv);
      write_log_file(ta_log, res.log);
      std::printf("attack training done after %zu epochs: train L1 %.4f -> %s\n",
                  res.log.size(), res.log.back().l_gen, ta_out.c_str());
    });

    // ---- attack-eval ----
    auto* ae =
        app.add_subcommand("attack-eval", "evaluate a recovery model on protected test images");
    std::string ae_data, ae_gen, ae_finv, ae_mapping = dfl.get_str("mapping", "dct8");
    std::string ae_split = "defender-test", ae_seed = "99", ae_report, ae_csv;
    bool ae_no_subtraction = false, ae_identity = false;
    ae->add_option("--data", ae_data, "dataset directory")->required();
    ae->add_option("--gen", ae_gen, "frozen generator checkpoint");
    ae->add_option("--finv", ae_finv, "recovery model checkpoint")->required();
    ae->add_option("--mapping", ae_mapping, "dct8 or haar2");
    ae->add_option("--split", ae_split, "dataset split to protect and recover");
    ae->add_option("--seed-stream", ae_seed, "seed stream for per-image thetas");
    ae->add_flag("--no-subtraction", ae_no_subtraction, "evaluate the no-subtraction pipeline");
    ae->add_flag("--identity", ae_identity, "feed originals directly (sanity bound)");
    ae->add_option("--report", ae_report, "write the key-value report here");
    ae->add_option("--csv", ae_csv, "write per-image scores here");
    ae->callback([&] {
      const auto ds = data::load_dataset(ae_data);
      pipeline::ProtectorConfig pcfg;
      pcfg.mapping = MappingSpec::from_name(ae_mapping);
      auto f_inv = nn::load_recovery_checkpoint(ae_finv);
      const auto idx = ds.indices(data::split_from_name(ae_split));
      if (idx.empty()) throw std::runtime_error("split '" + ae_split + "' is empty");

      std::vector<SpatialImage> inputs, originals;
      if (ae_identity) {
        for (int i : idx) {
          inputs.push_back(ds.samples[i].image);
          originals.push_back(ds.samples[i].image);
        }
      } else {
        std::shared_ptr<nn::Model> g;
        if (!ae_no_subtraction) {
          if (ae_gen.empty()) throw std::runtime_error("--gen is required unless --identity");
          g = nn::load_generator_checkpoint(ae_gen);
        }
        train::ResidueCache cache(ds, idx, g.get(), pcfg.mapping, !ae_no_subtraction, false);
        inputs = attack::protect_set(cache, pcfg, parse_seed(ae_seed));
        for (int i = 0; i < cache.count(); ++i) originals.push_back(cache.original(i));
      }
      const auto recovered = attack::recover_batch(*f_inv, inputs);
      const auto stats = attack::evaluate_recovery(recovered, originals);
      const auto floor =
          attack::constant_mean_floor(originals, attack::mean_intensity(originals));
      auto dump = [&](std::ostream& out) {
        attack::write_report(out, "recovery", stats);
        out << "floor_ssim_mean=" << floor.ssim_mean << "\n"
            << "floor_psnr_mean=" << floor.psnr_mean << "\n";
      };
      dump(std::cout);
      if (!ae_report.empty()) {
        std::ofstream out(ae_report);
        if (!out) throw std::runtime_error("cannot write '" + ae_report + "'");
        dump(out);
      }
      if (!ae_csv.empty()) {
        std::ofstream out(ae_csv);
        if (!out) throw std::runtime_error("cannot write '" + ae_csv + "'");
        attack::write_csv(out, stats);
      }
    });

    // ---- fixed-seed-attack ----
    auto* fs = app.add_subcommand(
        "fixed-seed-attack", "evaluate a fixed-theta recovery model on same vs other theta");
    std::string fs_data, fs_gen, fs_finv, fs_mapping = dfl.get_str("mapping", "dct8");
    std::string fs_theta = "0xA11CE", fs_theta_prime = "0xB0B", fs_report;
    fs->add_option("--data", fs_data, "dataset directory")->required();
    fs->add_option("--gen", fs_gen, "frozen generator checkpoint")->required();
    fs->add_option("--finv", fs_finv, "fixed-theta recovery checkpoint")->required();
    fs->add_option("--mapping", fs_mapping, "dct8 or haar2");
    fs->add_option("--theta", fs_theta, "the attacker's training theta");
    fs->add_option("--theta-prime", fs_theta_prime, "a different client theta");
    fs->add_option("--report", fs_report, "write the report here");
    fs->callback([&] {
      const auto ds = data::load_dataset(fs_data);
      pipeline::ProtectorConfig pcfg;
      pcfg.mapping = MappingSpec::from_name(fs_mapping);
      auto g = nn::load_generator_checkpoint(fs_gen);
      auto f_inv = nn::load_recovery_checkpoint(fs_finv);
      train::ResidueCache cache(ds, ds.indices(data::Split::DefenderTest), g.get(), pcfg.mapping,
                                true, false);
      const auto rep = attack::fixed_seed_experiment(*f_inv, cache, pcfg, parse_seed(fs_theta),
                                                     parse_seed(fs_theta_prime));
      auto dump = [&](std::ostream& out) {
        out << "theta=" << rep.theta << "\ntheta_prime=" << rep.theta_prime << "\n";
        attack::write_report(out, "same_theta", rep.same_theta);
        attack::write_report(out, "diff_theta", rep.diff_theta);
        out << "same_beats_diff=" << (rep.same_beats_diff() ? 1 : 0) << "\n";
      };
      dump(std::cout);
      if (!fs_report.empty()) {
        std::ofstream out(fs_report);
        if (!out) throw std::runtime_error("cannot write '" + fs_report + "'");
        dump(out);
      }
    });

    // ---- ablate ----
    auto* ab = app.add_subcommand("ablate", "run one of the ablation experiments");
    TrainFlags abf;
    std::string ab_what, ab_gen;
    ab->add_option("--what", ab_what, "r | rprime | mask | no-subtraction | dwt")->required();
    abf.add_common(ab, dfl);
    ab->add_option("--gen", ab_gen, "frozen generator checkpoint (r / rprime / mask)");
    ab->callback([&] {
      const auto ds = data::load_dataset(abf.data_dir);
      const auto cfg = abf.to_config();
      if (ab_what == "r" || ab_what == "rprime") {
        if (ab_gen.empty()) throw std::runtime_error("--gen is required for this ablation");
        auto g = nn::load_generator_checkpoint(ab_gen);
        const auto pcfg = abf.to_protector(pipeline::Perturbation::Shuffle);
        const auto input = ab_what == "r" ? train::RecognizerInput::Residue
                                          : train::RecognizerInput::DecodedResidue;
        auto res = train::train_recognizer(ds, input, g, cfg, pcfg);
        write_log_file(abf.log_path, res.log);

        const auto idx = ds.indices(data::Split::DefenderTest);
        train::ResidueCache cache(ds, idx, g.get(), pcfg.mapping, true, false);
        std::vector<SpatialImage> imgs;
        std::vector<HighDimRep> reps;
        for (int i = 0; i < cache.count(); ++i) {
          if (input == train::RecognizerInput::Residue) {
            reps.push_back(cache.residue(i));
          } else {
            imgs.push_back(codec::decode(cache.residue(i), pcfg.mapping));
          }
        }
        const auto embs = input == train::RecognizerInput::Residue
                              ? train::embed_reps(*res.net, reps)
                              : train::embed_images(*res.net, imgs);
        const double acc = verification_accuracy_from_embeddings(ds, idx, embs, 100, 17);
        std::printf("ablate %s: verification accuracy %.3f\n", ab_what.c_str(), acc);
      } else if (ab_what == "mask") {
        if (ab_gen.empty()) throw std::runtime_error("--gen is required for this ablation");
        auto g = nn::load_generator_checkpoint(ab_gen);
        const auto pcfg = abf.to_protector(pipeline::Perturbation::Mask);
        auto res = train::train_stage2(ds, g, cfg, pcfg);
        write_log_file(abf.log_path, res.log);
        std::printf("ablate mask: final train acc %.3f (compare with a shuffle run)\n",
                    res.log.back().train_acc);
      } else if (ab_what == "no-subtraction") {
        const auto pcfg = abf.to_protector(pipeline::Perturbation::Shuffle);
        train::RecoveryConfig rcfg;
        rcfg.feature_subtraction = false;
        auto res = train::train_recovery(ds, nullptr, pcfg, rcfg);
        write_log_file(abf.log_path, res.log);
        std::printf("ablate no-subtraction: attacker train L1 %.4f after %zu epochs\n",
                    res.log.back().l_gen, res.log.size());
      } else if (ab_what == "dwt") {
        TrainFlags f2 = abf;
        f2.mapping = "haar2";
        const auto pcfg = f2.to_protector(pipeline::Perturbation::Shuffle);
        auto s1res = train::train_stage1(ds, cfg, pcfg);
        s1res.g->set_trainable(false);
        auto s2res = train::train_stage2(ds, s1res.g, cfg, pcfg);
        write_log_file(abf.log_path, s2res.log);
        std::printf("ablate dwt: stage1 l_gen %.4f, stage2 train acc %.3f\n",
                    s1res.log.back().l_gen, s2res.log.back().train_acc);
      } else {
        throw std::runtime_error("unknown ablation '" + ab_what + "'");
      }
    });

    // ---- check-invariants ----
    auto* ci =
        app.add_subcommand("check-invariants", "run the codec and shuffle property suites");
    std::string ci_mapping = "dct8";
    int ci_trials = 100;
    ci->add_option("--mapping", ci_mapping, "dct8 or haar2")
        ->default_val(dfl.get_str("mapping", ci_mapping));
    ci->add_option("--trials", ci_trials, "random trials per property")
        ->default_val(dfl.get("trials", ci_trials));
    ci->callback([&] { exit_code = run_check_invariants(ci_mapping, ci_trials); });

    // ---- report ----
    auto* rp = app.add_subcommand("report", "aggregate logs and attack reports");
    std::vector<std::string> rp_logs, rp_attacks;
    rp->add_option("--log", rp_logs, "name=path of a training log (repeatable)");
    rp->add_option("--attack", rp_attacks, "name=path of an attack report (repeatable)");
    rp->callback([&] { exit_code = run_report(rp_logs, rp_attacks); });

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << e.what() << "\n";
      return 2;  // usage error
    }
    return exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
