#include "chunkfb/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "chunkfb/error.hpp"

namespace chunkfb::ad {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

// Values are stored little-endian; swap element bytes on big-endian hosts.
void to_little_endian(std::uint8_t* p, std::size_t n, std::size_t width) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + width <= n; i += width) {
      for (std::size_t a = 0, b = width - 1; a < b; ++a, --b) std::swap(p[i + a], p[i + b]);
    }
  } else {
    (void)p, (void)n, (void)width;
  }
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  to_little_endian(buf, sizeof(T), sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& blob) : blob_(blob) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, blob_.data() + pos_, sizeof(T));
    to_little_endian(buf, sizeof(T), sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(blob_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  blob_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == blob_.size(); }

 private:
  void need(std::size_t n) const {
    if (blob_.size() - pos_ < n) throw Error("checkpoint: truncated container");
  }

  const std::vector<std::uint8_t>& blob_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kI64: return 8;
    case DType::kU8: return 1;
  }
  throw Error("checkpoint: unknown dtype");
}

std::uint64_t NamedArray::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_container(const std::vector<NamedArray>& arrays) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, arrays.size());
  for (const auto& a : arrays) {
    const std::size_t width = dtype_size(a.dtype);
    if (a.bytes.size() != a.element_count() * width) {
      throw Error("checkpoint: array " + a.name + " has inconsistent byte length");
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.insert(out.end(), a.name.begin(), a.name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(a.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) put<std::uint64_t>(out, d);
    const std::size_t start = out.size();
    out.insert(out.end(), a.bytes.begin(), a.bytes.end());
    to_little_endian(out.data() + start, a.bytes.size(), width);
  }
  return out;
}

std::vector<NamedArray> decode_container(const std::vector<std::uint8_t>& blob) {
  Reader in(blob);
  const auto magic = in.bytes(sizeof(kCheckpointMagic));
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw Error("checkpoint: bad magic");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  std::vector<NamedArray> arrays;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = in.get<std::uint32_t>();
    const auto name = in.bytes(name_len);
    a.name.assign(name.begin(), name.end());
    const auto code = in.get<std::uint8_t>();
    if (code > static_cast<std::uint8_t>(DType::kU8)) throw Error("checkpoint: unknown dtype code");
    a.dtype = static_cast<DType>(code);
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t r = 0; r < rank; ++r) a.dims.push_back(in.get<std::uint64_t>());
    const std::size_t width = dtype_size(a.dtype);
    a.bytes = in.bytes(static_cast<std::size_t>(a.element_count()) * width);
    to_little_endian(a.bytes.data(), a.bytes.size(), width);
    arrays.push_back(std::move(a));
  }
  if (!in.done()) throw Error("checkpoint: trailing bytes");
  return arrays;
}

void write_container(const std::string& path, const std::vector<NamedArray>& arrays) {
  const auto blob = encode_container(arrays);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("write failed for checkpoint " + path);
}

std::vector<NamedArray> read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_container(blob);
}

}  // namespace chunkfb::ad
