#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace chunkfb::ad {

using Index = Eigen::Index;

/// Dense row-major array. Rank-1 data is stored as a single row.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
std::string shape_string(const Tensor<Scalar>& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

/// Ordered collection of named trainable arrays.
template <typename Scalar>
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor<Scalar>> values;

  std::size_t size() const { return values.size(); }

  std::size_t add(std::string name, Tensor<Scalar> value) {
    names.push_back(std::move(name));
    values.push_back(std::move(value));
    return values.size() - 1;
  }

  /// Throws std::out_of_range for unknown names.
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw std::out_of_range("no parameter named " + name);
  }

  Tensor<Scalar>& operator[](const std::string& name) { return values[index_of(name)]; }
  const Tensor<Scalar>& operator[](const std::string& name) const { return values[index_of(name)]; }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& v : values) n += static_cast<std::size_t>(v.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& v : values) {
      if (!v.allFinite()) return false;
    }
    return true;
  }

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names[i], values[i].template cast<Other>());
    return out;
  }
};

}  // namespace chunkfb::ad
