#pragma once

#include <stdexcept>
#include <string>

namespace chunkfb {

// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chunkfb
