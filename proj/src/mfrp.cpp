#include "minusface/mfrp.hpp"

#include <cstring>
#include <fstream>

namespace minusface {
namespace {

void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32le(std::string& out, const float* data, size_t n) {
  // IEEE-754 bit patterns, forced little-endian.
  for (size_t i = 0; i < n; ++i) {
    uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    put_u32le(out, bits);
  }
}

class Reader {
 public:
  Reader(const std::string& path, const char* magic) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (buf_.size() < 4 || std::memcmp(buf_.data(), magic, 4) != 0) {
      throw std::runtime_error("'" + path + "' is not a " + magic + std::string(" file"));
    }
    pos_ = 4;
  }

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf_[pos_++]);
  }

  uint32_t u32le() {
    need(4);
    uint32_t v = static_cast<uint8_t>(buf_[pos_]) | (static_cast<uint8_t>(buf_[pos_ + 1]) << 8) |
                 (static_cast<uint8_t>(buf_[pos_ + 2]) << 16) |
                 (static_cast<uint8_t>(buf_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  void f32le(float* out, size_t n) {
    need(n * 4);
    for (size_t i = 0; i < n; ++i) {
      uint32_t bits = static_cast<uint8_t>(buf_[pos_]) |
                      (static_cast<uint8_t>(buf_[pos_ + 1]) << 8) |
                      (static_cast<uint8_t>(buf_[pos_ + 2]) << 16) |
                      (static_cast<uint8_t>(buf_[pos_ + 3]) << 24);
      std::memcpy(&out[i], &bits, 4);
      pos_ += 4;
    }
  }

  std::string bytes(size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  const std::string& path() const { return path_; }

 private:
  void need(size_t n) {
    if (pos_ + n > buf_.size()) throw std::runtime_error("'" + path_ + "' is truncated");
  }
  std::string path_;
  std::string buf_;
  size_t pos_ = 0;
};

void write_file(const std::string& path, const std::string& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

std::string mfrp_header(uint8_t kind, uint8_t flags, uint32_t c, uint32_t h, uint32_t w) {
  std::string s = "MFRP";
  s.push_back(static_cast<char>(mfrp::kVersion));
  s.push_back(static_cast<char>(kind));
  s.push_back(static_cast<char>(flags));
  put_u32le(s, c);
  put_u32le(s, h);
  put_u32le(s, w);
  return s;
}

}  // namespace

namespace mfrp {

void save_rep(const std::string& path, const HighDimRep& rep, MappingKind kind) {
  std::string s = mfrp_header(static_cast<uint8_t>(kind), 0, rep.channels, rep.height, rep.width);
  put_f32le(s, rep.data.data(), rep.data.size());
  write_file(path, s);
}

HighDimRep load_rep(const std::string& path, MappingKind* kind_out) {
  Reader r(path, "MFRP");
  if (r.u8() != kVersion) throw std::runtime_error("'" + path + "': unsupported MFRP version");
  const uint8_t kind = r.u8();
  if (kind != kKindDct8 && kind != kKindHaar2) {
    throw std::runtime_error("'" + path + "' does not hold a high-dimensional representation");
  }
  r.u8();  // flags, unused for reps
  const uint32_t c = r.u32le(), h = r.u32le(), w = r.u32le();
  HighDimRep rep(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  r.f32le(rep.data.data(), rep.data.size());
  if (kind_out) *kind_out = static_cast<MappingKind>(kind);
  return rep;
}

void save_spatial(const std::string& path, const SpatialImage& image, uint8_t flags) {
  std::string s = mfrp_header(kKindSpatial, flags, SpatialImage::kChannels, image.height,
                              image.width);
  put_f32le(s, image.data.data(), image.data.size());
  write_file(path, s);
}

SpatialImage load_spatial(const std::string& path, uint8_t* flags_out) {
  Reader r(path, "MFRP");
  if (r.u8() != kVersion) throw std::runtime_error("'" + path + "': unsupported MFRP version");
  if (r.u8() != kKindSpatial) {
    throw std::runtime_error("'" + path + "' does not hold a spatial tensor");
  }
  const uint8_t flags = r.u8();
  const uint32_t c = r.u32le(), h = r.u32le(), w = r.u32le();
  if (c != SpatialImage::kChannels) {
    throw std::runtime_error("'" + path + "': spatial tensor must have 3 channels");
  }
  SpatialImage img(static_cast<int>(h), static_cast<int>(w));
  r.f32le(img.data.data(), img.data.size());
  if (flags_out) *flags_out = flags;
  return img;
}

}  // namespace mfrp

namespace mfck {

void save(const std::string& path,
          const std::vector<std::pair<std::string, std::pair<std::vector<int>,
                                                             const std::vector<float>*>>>& params) {
  std::string s = "MFCK";
  s.push_back(0x01);
  put_u32le(s, static_cast<uint32_t>(params.size()));
  for (const auto& [name, entry] : params) {
    const auto& [shape, data] = entry;
    put_u32le(s, static_cast<uint32_t>(name.size()));
    s += name;
    put_u32le(s, static_cast<uint32_t>(shape.size()));
    for (int d : shape) put_u32le(s, static_cast<uint32_t>(d));
    put_f32le(s, data->data(), data->size());
  }
  write_file(path, s);
}

std::vector<std::pair<std::string, std::pair<std::vector<int>, std::vector<float>>>> load(
    const std::string& path) {
  Reader r(path, "MFCK");
  if (r.u8() != 0x01) throw std::runtime_error("'" + path + "': unsupported MFCK version");
  const uint32_t count = r.u32le();
  std::vector<std::pair<std::string, std::pair<std::vector<int>, std::vector<float>>>> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u32le());
    const uint32_t rank = r.u32le();
    std::vector<int> shape(rank);
    size_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(r.u32le());
      numel *= static_cast<size_t>(shape[d]);
    }
    std::vector<float> data(numel);
    r.f32le(data.data(), numel);
    out.emplace_back(name, std::make_pair(std::move(shape), std::move(data)));
  }
  return out;
}

}  // namespace mfck
}  // namespace minusface
