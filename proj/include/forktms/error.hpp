#pragma once

#include <stdexcept>
#include <string>

namespace forktms {

// All library failures surface as this type; the message carries the
// diagnostic the CLI prints.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace forktms
