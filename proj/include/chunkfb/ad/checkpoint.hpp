#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chunkfb/ad/tensor.hpp"
#include "chunkfb/error.hpp"

namespace chunkfb::ad {

// Container layout, all integers little-endian:
//   magic "CHUNKFB1" | u32 version | u64 array count
//   per array: u32 name length | name bytes | u8 dtype | u32 rank |
//              u64 dims[rank] | raw little-endian values
enum class DType : std::uint8_t { kF32 = 0, kF64 = 1, kI64 = 2, kU8 = 3 };

inline constexpr char kCheckpointMagic[8] = {'C', 'H', 'U', 'N', 'K', 'F', 'B', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t dtype_size(DType t);

struct NamedArray {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> bytes;  // host byte order

  std::uint64_t element_count() const;
  bool operator==(const NamedArray&) const = default;
};

std::vector<std::uint8_t> encode_container(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> decode_container(const std::vector<std::uint8_t>& blob);

void write_container(const std::string& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_container(const std::string& path);

template <typename Scalar>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::kF32; }
template <>
constexpr DType dtype_of<double>() { return DType::kF64; }

template <typename Scalar>
NamedArray to_array(const std::string& name, const Tensor<Scalar>& t) {
  NamedArray a;
  a.name = name;
  a.dtype = dtype_of<Scalar>();
  a.dims = {static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols())};
  const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
  a.bytes.assign(p, p + sizeof(Scalar) * static_cast<std::size_t>(t.size()));
  return a;
}

/// Converts between float and double storage when needed.
template <typename Scalar>
Tensor<Scalar> from_array(const NamedArray& a) {
  if (a.dims.empty() || a.dims.size() > 2) {
    throw Error("array " + a.name + ": rank " + std::to_string(a.dims.size()) + " not supported");
  }
  const Index rows = a.dims.size() == 2 ? static_cast<Index>(a.dims[0]) : 1;
  const Index cols = static_cast<Index>(a.dims.back());
  Tensor<Scalar> t(rows, cols);
  if (a.dtype == DType::kF32) {
    const auto* p = reinterpret_cast<const float*>(a.bytes.data());
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(p[i]);
  } else if (a.dtype == DType::kF64) {
    const auto* p = reinterpret_cast<const double*>(a.bytes.data());
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(p[i]);
  } else {
    throw Error("array " + a.name + ": not a floating-point array");
  }
  return t;
}

}  // namespace chunkfb::ad
