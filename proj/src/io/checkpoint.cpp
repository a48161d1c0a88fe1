#include "hebb/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "hebb/errors.hpp"
#include "hebb/io/config.hpp"

namespace hebb::io {

namespace {

constexpr char kMagic[4] = {'H', 'E', 'B', 'B'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::size_t v) { uint(static_cast<std::uint32_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void floats(std::span<const float> v) {
    for (float x : v) f32(x);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (n > in_.size() - pos_) {
      throw FormatError("checkpoint truncated: need " + std::to_string(n) + " bytes at offset " +
                        std::to_string(pos_) + ", file has " + std::to_string(in_.size()));
    }
    const auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename U>
  U uint() {
    const auto b = bytes(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::vector<float> floats(std::size_t n) {
    if (n > (in_.size() - pos_) / 4) bytes(n * 4);  // throws with a size message
    std::vector<float> v(n);
    for (float& x : v) x = f32();
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

Network Checkpoint::network() const { return Network(config, layers, epochs_completed); }

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const std::string cfg = format_config(ckpt.config);
  w.u32(cfg.size());
  w.bytes(cfg.data(), cfg.size());
  w.u32(static_cast<std::size_t>(ckpt.epochs_completed));
  w.u32(ckpt.layers.size());
  for (const ConvLayer& layer : ckpt.layers) {
    const Shape4& s = layer.weights.shape();
    w.u32(static_cast<std::size_t>(s.n));
    w.u32(static_cast<std::size_t>(s.c));
    w.u32(static_cast<std::size_t>(s.h));
    w.u32(static_cast<std::size_t>(s.w));
    w.floats(layer.weights.data());
    w.floats(layer.bias);
    w.floats(layer.mask.data());
    w.floats(layer.rate_ema);
  }
  w.u32(ckpt.zca ? 1 : 0);
  if (ckpt.zca) {
    w.u32(static_cast<std::size_t>(ckpt.zca->dim()));
    w.f64(ckpt.zca->epsilon());
    w.uint(static_cast<std::uint64_t>(ckpt.zca->fitted_on()));
    w.floats(ckpt.zca->matrix());
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic bytes");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const std::uint32_t cfg_len = r.u32();
  const auto cfg_bytes = r.bytes(cfg_len);
  ckpt.config = parse_config(std::string(cfg_bytes.begin(), cfg_bytes.end()), NetworkConfig::preset("default"));
  ckpt.epochs_completed = static_cast<int>(r.u32());

  const std::uint32_t count = r.u32();
  if (count != 0 && count != ckpt.config.layers.size()) {
    throw CompatibilityError("checkpoint: " + std::to_string(count) + " layers stored, config has " +
                             std::to_string(ckpt.config.layers.size()));
  }
  for (std::uint32_t l = 0; l < count; ++l) {
    Shape4 s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0 || s.count() > bytes.size()) {
      throw FormatError("checkpoint: implausible layer dims " + s.str());
    }
    const LayerSpec& spec = ckpt.config.layers[l];
    ConvLayer layer;
    layer.weights = WeightTensor(s, r.floats(s.count()));
    layer.bias = r.floats(static_cast<std::size_t>(s.n));
    layer.mask = WeightTensor(s, r.floats(s.count()));
    layer.rate_ema = r.floats(static_cast<std::size_t>(s.n));
    layer.activation = spec.activation;
    layer.plasticity_k = spec.plasticity_k;
    ckpt.layers.push_back(std::move(layer));
  }
  if (r.u32() == 1) {
    const int dim = static_cast<int>(r.u32());
    const double eps = r.f64();
    const auto fitted = r.uint<std::uint64_t>();
    if (dim <= 0 || static_cast<std::size_t>(dim) * dim > bytes.size()) {
      throw FormatError("checkpoint: implausible whitening dim " + std::to_string(dim));
    }
    ckpt.zca = ZcaTransform(dim, eps, static_cast<std::size_t>(fitted),
                            r.floats(static_cast<std::size_t>(dim) * dim));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after whitening block");
  if (!ckpt.layers.empty()) (void)ckpt.network();  // dims vs config
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for checkpoint " + path.string());
}

void save_checkpoint(const Network& network, const std::optional<ZcaTransform>& zca,
                     const std::filesystem::path& path) {
  save_checkpoint(Checkpoint{network.config(), network.layers(), network.epochs_completed(), zca}, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace hebb::io
