// SPDX-License-Identifier: Apache-2.0
#include "reenc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "array payloads are memcpy'd; a big-endian port needs byte swaps here");

namespace reenc {

namespace {

constexpr char kMagic[4] = {'R', 'E', 'C', 'K'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4, "u32")); }
  std::uint64_t u64() { return raw(8, "u64"); }

  std::string str(std::size_t n) {
    need(n, "string");
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  std::vector<std::uint8_t> blob(std::size_t n) {
    need(n, "payload");
    std::vector<std::uint8_t> b(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return b;
  }

  std::uint8_t byte() { return static_cast<std::uint8_t>(raw(1, "byte")); }

  bool done() const { return pos_ == size_; }

 private:
  std::uint64_t raw(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  void need(std::size_t n, const char* what) {
    if (size_ - pos_ < n)
      throw FormatError(std::string("checkpoint: truncated file while reading ") + what);
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::size_t elem_size(std::uint8_t dtype) {
  if (dtype == 0) return sizeof(float);
  if (dtype == 1) return sizeof(double);
  throw FormatError("checkpoint: unknown dtype tag " + std::to_string(dtype));
}

const char* dtype_name(std::uint8_t dtype) { return dtype == 0 ? "f32" : "f64"; }

std::vector<std::uint8_t> serialize(const Checkpoint& ck) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, Checkpoint::kVersion);
  const std::string meta = ck.meta.dump();  // sorted keys: canonical per content
  put_u64(out, meta.size());
  out.insert(out.end(), meta.begin(), meta.end());
  put_u64(out, ck.arrays.size());
  for (const auto& a : ck.arrays) {
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out.insert(out.end(), a.name.begin(), a.name.end());
    out.push_back(a.dtype);
    put_u64(out, a.rows);
    put_u64(out, a.cols);
    if (a.bytes.size() != a.rows * a.cols * elem_size(a.dtype))
      throw FormatError("checkpoint: array '" + a.name + "' payload size disagrees with shape");
    out.insert(out.end(), a.bytes.begin(), a.bytes.end());
  }
  return out;
}

std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace

const NamedArray* Checkpoint::find(std::string_view name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

template <typename T>
void Checkpoint::add(const std::string& name, const nn::Mat<T>& m) {
  if (find(name)) throw ArtifactError("checkpoint: duplicate array name '" + name + "'");
  NamedArray a;
  a.name = name;
  a.dtype = std::is_same_v<T, float> ? 0 : 1;
  a.rows = static_cast<std::uint64_t>(m.rows());
  a.cols = static_cast<std::uint64_t>(m.cols());
  a.bytes.resize(static_cast<std::size_t>(m.size()) * sizeof(T));
  if (m.size() > 0) std::memcpy(a.bytes.data(), m.data(), a.bytes.size());
  arrays.push_back(std::move(a));
}

template <typename T>
void Checkpoint::read_into(std::string_view name, nn::Mat<T>& m) const {
  const NamedArray* a = find(name);
  if (!a) throw ArtifactError("checkpoint: missing array '" + std::string(name) + "'");
  const std::uint8_t want = std::is_same_v<T, float> ? 0 : 1;
  if (a->dtype != want)
    throw ArtifactError("checkpoint: array '" + a->name + "' has dtype " + dtype_name(a->dtype) +
                        ", expected " + dtype_name(want));
  if (m.size() > 0 && (a->rows != static_cast<std::uint64_t>(m.rows()) ||
                       a->cols != static_cast<std::uint64_t>(m.cols())))
    throw ArtifactError("checkpoint: array '" + a->name + "' is " + std::to_string(a->rows) + "x" +
                        std::to_string(a->cols) + ", expected " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  m.resize(static_cast<Eigen::Index>(a->rows), static_cast<Eigen::Index>(a->cols));
  if (m.size() > 0) std::memcpy(m.data(), a->bytes.data(), a->bytes.size());
}

template void Checkpoint::add<float>(const std::string&, const nn::Mat<float>&);
template void Checkpoint::add<double>(const std::string&, const nn::Mat<double>&);
template void Checkpoint::read_into<float>(std::string_view, nn::Mat<float>&) const;
template void Checkpoint::read_into<double>(std::string_view, nn::Mat<double>&) const;

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const auto bytes = serialize(ck);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("checkpoint: short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  Reader r(bytes.data(), bytes.size());
  if (r.str(4) != std::string(kMagic, 4))
    throw FormatError("checkpoint: '" + path + "' is not a checkpoint file (bad magic)");
  const auto version = r.u32();
  if (version != Checkpoint::kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  const auto meta_len = r.u64();
  const std::string meta = r.str(meta_len);
  ck.meta = nlohmann::json::parse(meta, nullptr, false);
  if (ck.meta.is_discarded()) throw FormatError("checkpoint: metadata block is not valid JSON");
  const auto n = r.u64();
  ck.arrays.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    NamedArray a;
    a.name = r.str(r.u32());
    a.dtype = r.byte();
    a.rows = r.u64();
    a.cols = r.u64();
    a.bytes = r.blob(a.rows * a.cols * elem_size(a.dtype));
    ck.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after array table");
  return ck;
}

std::string checkpoint_manifest(const Checkpoint& ck) {
  std::ostringstream out;
  out << "checkpoint v" << Checkpoint::kVersion << "\n";
  out << "meta: " << ck.meta.dump(2) << "\n";
  std::uint64_t total = 0;
  out << "arrays: " << ck.arrays.size() << "\n";
  for (const auto& a : ck.arrays) {
    out << "  " << a.name << "  " << dtype_name(a.dtype) << "  " << a.rows << "x" << a.cols << "\n";
    total += a.rows * a.cols;
  }
  out << "total elements: " << total << "\n";
  return out.str();
}

std::string checkpoint_hash(const Checkpoint& ck) {
  const auto bytes = serialize(ck);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return hex16(h);
}

nlohmann::json rng_state_json(const Rng& rng) {
  auto arr = nlohmann::json::array();
  for (const auto word : rng.state()) arr.push_back(hex16(word));
  return arr;
}

Rng rng_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("checkpoint: rng state must be 4 hex words");
  std::array<std::uint64_t, 4> s{};
  for (int i = 0; i < 4; ++i)
    s[static_cast<std::size_t>(i)] = std::stoull(j[static_cast<std::size_t>(i)].get<std::string>(), nullptr, 16);
  Rng rng;
  rng.set_state(s);
  return rng;
}

}  // namespace reenc
