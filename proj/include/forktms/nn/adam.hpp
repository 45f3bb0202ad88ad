#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forktms/nn/tensor.hpp"

namespace forktms::nn {

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

template <typename T>
struct AdamState {
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
};

/// One bias-corrected ADAM update over all parameters. Moment buffers are
/// created on the first call; later calls must present the same shapes.
template <typename T>
void adam_step(AdamState<T>& state, std::span<const ParamRef<T>> params);

}  // namespace forktms::nn
