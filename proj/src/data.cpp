#include "minusface/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "minusface/common.hpp"

namespace fs = std::filesystem;

namespace minusface::data {

const char* split_name(Split s) {
  switch (s) {
    case Split::DefenderTrain: return "defender-train";
    case Split::DefenderTest: return "defender-test";
    case Split::Attacker: return "attacker";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "defender-train") return Split::DefenderTrain;
  if (name == "defender-test") return Split::DefenderTest;
  if (name == "attacker") return Split::Attacker;
  throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<int> ToyDataset::indices(Split split) const {
  std::vector<int> out;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split) out.push_back(static_cast<int>(i));
  }
  return out;
}

int ToyDataset::class_count(Split split) const {
  std::vector<int> labels;
  for (const auto& s : samples) {
    if (s.split == split) labels.push_back(s.label);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return static_cast<int>(labels.size());
}

namespace {

struct Rgb {
  double v[3];
};

// Offset a base color by at least `lo` per channel, staying inside [0.05, 0.95].
Rgb contrast_color(SplitMix64& rng, const Rgb& base, double lo, double hi) {
  Rgb out;
  for (int k = 0; k < 3; ++k) {
    const double mag = rng.uniform(lo, hi);
    const double sign = rng.next_below(2) == 0 ? 1.0 : -1.0;
    double v = base.v[k] + sign * mag;
    if (v < 0.05 || v > 0.95) v = base.v[k] - sign * mag;
    out.v[k] = std::clamp(v, 0.05, 0.95);
  }
  return out;
}

// Anti-aliased ellipse paint: coverage falls off over roughly one pixel.
void paint_ellipse(SpatialImage& img, double cx, double cy, double ax, double ay,
                   const Rgb& color) {
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ay - 1)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ay + 1)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - ax - 1)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + ax + 1)));
  const double edge = std::min(ax, ay);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - cx) / ax;
      const double dy = (y + 0.5 - cy) / ay;
      const double v = std::sqrt(dx * dx + dy * dy);
      const double dist = (v - 1.0) * edge;
      const double cov = std::clamp(0.5 - dist, 0.0, 1.0);
      if (cov <= 0.0) continue;
      for (int k = 0; k < 3; ++k) {
        float& p = img.at(k, y, x);
        p = static_cast<float>((1.0 - cov) * p + cov * color.v[k]);
      }
    }
  }
}

// Per-identity structural parameters, drawn once from the identity stream.
struct FaceParams {
  Rgb background, face, eye, nose, mouth;
  double cx, cy;              // face center, fraction of size
  double ax, ay;              // face half-axes, fraction of size
  double eye_dx, eye_dy, eye_r;
  double nose_dy, nose_len, nose_w;
  double mouth_dy, mouth_w, mouth_h;
};

FaceParams draw_identity(SplitMix64& rng) {
  FaceParams p;
  for (int k = 0; k < 3; ++k) p.background.v[k] = rng.uniform(0.1, 0.9);
  p.face = contrast_color(rng, p.background, 0.2, 0.5);
  p.eye = contrast_color(rng, p.face, 0.25, 0.6);
  p.nose = contrast_color(rng, p.face, 0.15, 0.4);
  p.mouth = contrast_color(rng, p.face, 0.25, 0.6);
  p.cx = 0.5 + rng.uniform(-0.10, 0.10);
  p.cy = 0.5 + rng.uniform(-0.10, 0.10);
  p.ax = rng.uniform(0.20, 0.36);
  p.ay = rng.uniform(0.24, 0.42);
  p.eye_dx = rng.uniform(0.35, 0.62);   // fraction of ax
  p.eye_dy = rng.uniform(-0.55, -0.25); // fraction of ay
  p.eye_r = rng.uniform(0.030, 0.070);
  p.nose_dy = rng.uniform(-0.05, 0.18);
  p.nose_len = rng.uniform(0.05, 0.13);
  p.nose_w = rng.uniform(0.014, 0.034);
  p.mouth_dy = rng.uniform(0.35, 0.65);
  p.mouth_w = rng.uniform(0.28, 0.55);  // fraction of ax
  p.mouth_h = rng.uniform(0.015, 0.045);
  return p;
}

SpatialImage render_face(const FaceParams& p, int size, SplitMix64& img_rng) {
  SpatialImage img(size, size);
  for (int k = 0; k < 3; ++k) {
    std::fill(img.channel(k), img.channel(k) + static_cast<size_t>(size) * size,
              static_cast<float>(p.background.v[k]));
  }
  const double jx = img_rng.uniform(-2.0, 2.0);
  const double jy = img_rng.uniform(-2.0, 2.0);
  const double cx = p.cx * size + jx, cy = p.cy * size + jy;
  const double ax = p.ax * size, ay = p.ay * size;

  paint_ellipse(img, cx, cy, ax, ay, p.face);
  paint_ellipse(img, cx - p.eye_dx * ax, cy + p.eye_dy * ay, p.eye_r * size, p.eye_r * size,
                p.eye);
  paint_ellipse(img, cx + p.eye_dx * ax, cy + p.eye_dy * ay, p.eye_r * size, p.eye_r * size,
                p.eye);
  paint_ellipse(img, cx, cy + p.nose_dy * ay, p.nose_w * size, p.nose_len * size, p.nose);
  paint_ellipse(img, cx, cy + p.mouth_dy * ay, p.mouth_w * ax, p.mouth_h * size, p.mouth);

  const double brightness = img_rng.uniform(-0.1, 0.1);
  const bool flip = img_rng.next_below(2) == 1;
  for (int k = 0; k < 3; ++k) {
    float* c = img.channel(k);
    for (int i = 0; i < size * size; ++i) {
      const double noisy = c[i] + brightness + 0.02 * img_rng.next_normal();
      c[i] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }
  }
  if (flip) img = hflip(img);
  return img;
}

}  // namespace

ToyDataset generate_toy_dataset(int n_ids, int per_id, int size, uint64_t seed) {
  if (n_ids < 2 || per_id < 2) {
    throw std::invalid_argument("generate_toy_dataset: need n_ids >= 2 and per_id >= 2");
  }
  if (size < 16) throw std::invalid_argument("generate_toy_dataset: size must be >= 16");
  ToyDataset ds;
  ds.identities = n_ids;
  ds.images_per_identity = per_id;
  ds.size = size;
  ds.samples.reserve(static_cast<size_t>(n_ids) * per_id);

  const int defender_ids = n_ids - n_ids / 2;  // first half defender, rest attacker
  const int train_per_id = std::max(1, (per_id * 4) / 5);

  for (int id = 0; id < n_ids; ++id) {
    SplitMix64 id_rng(mix_seed(seed, 0x1D, id));
    const FaceParams params = draw_identity(id_rng);
    for (int j = 0; j < per_id; ++j) {
      SplitMix64 img_rng(mix_seed(seed, 0x2000 + id, j));
      ToySample s;
      s.image = render_face(params, size, img_rng);
      s.label = id;
      if (id >= defender_ids) {
        s.split = Split::Attacker;
      } else {
        s.split = j < train_per_id ? Split::DefenderTrain : Split::DefenderTest;
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

SpatialImage hflip(const SpatialImage& image) {
  SpatialImage out(image.height, image.width);
  for (int k = 0; k < 3; ++k) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        out.at(k, y, x) = image.at(k, y, image.width - 1 - x);
      }
    }
  }
  return out;
}

std::vector<VerificationPair> make_pairs(const ToyDataset& ds, int n_pairs, uint64_t seed,
                                         Split split) {
  if (n_pairs < 2) throw std::invalid_argument("make_pairs: n_pairs must be >= 2");
  const std::vector<int> idx = ds.indices(split);
  if (ds.class_count(split) < 2) {
    throw std::invalid_argument("make_pairs: split needs at least 2 identities");
  }

  std::vector<VerificationPair> pos, neg;
  for (size_t a = 0; a < idx.size(); ++a) {
    for (size_t b = a + 1; b < idx.size(); ++b) {
      const bool same = ds.samples[idx[a]].label == ds.samples[idx[b]].label;
      (same ? pos : neg).push_back({idx[a], idx[b], same});
    }
  }
  if (pos.empty() || neg.empty()) {
    throw std::invalid_argument("make_pairs: split lacks positive or negative candidates");
  }

  SplitMix64 rng(mix_seed(seed, 0x9A175));
  auto shuffle = [&rng](std::vector<VerificationPair>& v) {
    for (size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[rng.next_below(i + 1)]);
    }
  };
  shuffle(pos);
  shuffle(neg);

  const int n_pos = n_pairs / 2;
  const int n_neg = n_pairs - n_pos;
  std::vector<VerificationPair> out;
  out.reserve(n_pairs);
  for (int i = 0; i < n_pos; ++i) out.push_back(pos[i % pos.size()]);
  for (int i = 0; i < n_neg; ++i) out.push_back(neg[i % neg.size()]);
  return out;
}

// ---- PPM ------------------------------------------------------------------

namespace {

void skip_ppm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

SpatialImage load_ppm(const std::string& path, std::istream& in) {
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') {
    throw std::runtime_error("'" + path + "': not a binary PPM (P6) file");
  }
  skip_ppm_space(in);
  int w = 0, h = 0, maxval = 0;
  in >> w;
  skip_ppm_space(in);
  in >> h;
  skip_ppm_space(in);
  in >> maxval;
  if (!in || w < 1 || h < 1 || maxval != 255) {
    throw std::runtime_error("'" + path + "': unsupported PPM header (requires 8-bit P6)");
  }
  in.get();  // single whitespace before raster
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw std::runtime_error("'" + path + "': truncated PPM raster");
  SpatialImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < 3; ++k) {
        img.at(k, y, x) = static_cast<float>(raw[(static_cast<size_t>(y) * w + x) * 3 + k]) / 255.0f;
      }
    }
  }
  return img;
}

std::vector<unsigned char> quantize_rgb(const SpatialImage& image) {
  std::vector<unsigned char> raw(static_cast<size_t>(image.height) * image.width * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int k = 0; k < 3; ++k) {
        const float v = std::clamp(image.at(k, y, x), 0.0f, 1.0f);
        raw[(static_cast<size_t>(y) * image.width + x) * 3 + k] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  return raw;
}

void save_ppm(const SpatialImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  const auto raw = quantize_rgb(image);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

}  // namespace

// defined in png_io.cpp
SpatialImage load_png(const std::string& path);
void save_png(const SpatialImage& image, const std::string& path);

SpatialImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  const int first = in.peek();
  if (first == 'P') return load_ppm(path, in);
  if (first == 0x89) {
    in.close();
    return load_png(path);
  }
  throw std::runtime_error("'" + path + "': unsupported image format (expected PNG or P6 PPM)");
}

void save_image(const SpatialImage& image, const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "ppm") {
    save_ppm(image, path);
  } else if (ext == "png") {
    save_png(image, path);
  } else {
    throw std::runtime_error("'" + path + "': unsupported image extension (use .png or .ppm)");
  }
}

// ---- dataset on disk --------------------------------------------------------

void save_dataset(const ToyDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.tsv");
  if (!manifest) throw std::runtime_error("cannot write manifest in '" + dir + "'");
  std::vector<int> counter(ds.identities, 0);
  for (const auto& s : ds.samples) {
    char idbuf[32], imbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "id_%04d", s.label);
    std::snprintf(imbuf, sizeof(imbuf), "img_%03d.png", counter[s.label]++);
    const fs::path rel = fs::path("images") / idbuf / imbuf;
    fs::create_directories(fs::path(dir) / rel.parent_path());
    save_image(s.image, (fs::path(dir) / rel).string());
    manifest << rel.string() << "\t" << s.label << "\t" << split_name(s.split) << "\n";
  }
}

ToyDataset load_dataset(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.tsv");
  if (!manifest) throw std::runtime_error("cannot open manifest in '" + dir + "'");
  ToyDataset ds;
  std::string line;
  int max_label = -1;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string rel, label_s, split_s;
    if (!std::getline(ss, rel, '\t') || !std::getline(ss, label_s, '\t') ||
        !std::getline(ss, split_s)) {
      throw std::runtime_error("malformed manifest line: " + line);
    }
    ToySample s;
    s.image = load_image((fs::path(dir) / rel).string());
    s.label = std::stoi(label_s);
    s.split = split_from_name(split_s);
    max_label = std::max(max_label, s.label);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("'" + dir + "': empty dataset");
  ds.identities = max_label + 1;
  ds.size = ds.samples[0].image.height;
  ds.images_per_identity = static_cast<int>(ds.samples.size()) / std::max(1, ds.identities);
  return ds;
}

}  // namespace minusface::data
