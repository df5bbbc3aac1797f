#include "pjem/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace pjem {

namespace {

constexpr char kMagic[4] = {'P', 'J', 'E', 'M'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

class Cursor {
 public:
  Cursor(const std::string& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    at_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    at_ += 8;
    return v;
  }

  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string str(std::size_t len) {
    need(len);
    std::string s = bytes_.substr(at_, len);
    at_ += len;
    return s;
  }

  std::size_t position() const { return at_; }
  bool exhausted() const { return at_ == limit_; }

 private:
  void need(std::size_t n) {
    if (at_ + n > limit_) throw std::runtime_error("checkpoint: truncated file");
  }

  const std::string& bytes_;
  std::size_t limit_;
  std::size_t at_ = 0;
};

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path) {
  std::string bytes;
  bytes.append(kMagic, 4);
  put_u32(bytes, kCheckpointVersion);
  put_u32(bytes, static_cast<std::uint32_t>(store.layout.segments));
  put_u32(bytes, static_cast<std::uint32_t>(store.layout.entries_per_segment));
  put_u32(bytes, static_cast<std::uint32_t>(store.encoder.input_dim));
  put_u32(bytes, static_cast<std::uint32_t>(store.encoder.widths.size()));
  for (int w : store.encoder.widths) put_u32(bytes, static_cast<std::uint32_t>(w));
  put_u32(bytes, static_cast<std::uint32_t>(store.projector.hidden));
  put_u32(bytes, static_cast<std::uint32_t>(store.projector.depth));
  put_u32(bytes, static_cast<std::uint32_t>(store.config_json.size()));
  bytes += store.config_json;
  put_u32(bytes, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, value] : store.items()) {
    put_u32(bytes, static_cast<std::uint32_t>(name.size()));
    bytes += name;
    put_u32(bytes, static_cast<std::uint32_t>(value.rank()));
    for (int extent : value.shape()) put_u32(bytes, static_cast<std::uint32_t>(extent));
    for (Eigen::Index i = 0; i < value.size(); ++i) put_f64(bytes, value.data()[i]);
  }
  put_u64(bytes, fnv1a(bytes));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12) throw std::runtime_error("checkpoint: truncated file");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic bytes");
  std::string body = bytes.substr(0, bytes.size() - 8);
  Cursor tail(bytes, bytes.size());
  (void)tail.str(bytes.size() - 8);
  std::uint64_t stored_checksum = tail.u64();
  if (fnv1a(body) != stored_checksum) throw std::runtime_error("checkpoint: checksum mismatch");

  Cursor cur(bytes, bytes.size() - 8);
  (void)cur.str(4);  // magic
  std::uint32_t version = cur.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: version mismatch, file has " + std::to_string(version) + ", expected " +
                             std::to_string(kCheckpointVersion));
  }

  ParameterStore store;
  store.layout.segments = static_cast<int>(cur.u32());
  store.layout.entries_per_segment = static_cast<int>(cur.u32());
  store.encoder.input_dim = static_cast<int>(cur.u32());
  std::uint32_t width_count = cur.u32();
  store.encoder.widths.clear();
  for (std::uint32_t i = 0; i < width_count; ++i) store.encoder.widths.push_back(static_cast<int>(cur.u32()));
  store.projector.hidden = static_cast<int>(cur.u32());
  store.projector.depth = static_cast<int>(cur.u32());
  store.config_json = cur.str(cur.u32());

  std::uint32_t param_count = cur.u32();
  for (std::uint32_t p = 0; p < param_count; ++p) {
    std::string name = cur.str(cur.u32());
    std::uint32_t rank = cur.u32();
    std::vector<int> shape;
    Eigen::Index total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      int extent = static_cast<int>(cur.u32());
      shape.push_back(extent);
      total *= extent;
    }
    if (total <= 0) throw std::runtime_error("checkpoint: bad extents for parameter " + name);
    NumericArray value = NumericArray::zeros(shape);
    for (Eigen::Index i = 0; i < total; ++i) value.data()[i] = cur.f64();
    store.add(std::move(name), std::move(value));
  }
  if (!cur.exhausted()) throw std::runtime_error("checkpoint: trailing bytes after parameter records");
  return store;
}

}  // namespace pjem
