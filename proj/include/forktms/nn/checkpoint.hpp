#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "forktms/nn/tensor.hpp"

namespace forktms::nn {

// Checkpoint layout: a text manifest terminated by a line "payload", then the
// tensors as contiguous little-endian float32 in manifest order.
//
//   forktms-checkpoint 1
//   meta <key> <value>
//   tensor <name> <n> <c> <h> <w>
//   payload
struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace forktms::nn
