#pragma once

#include "forktms/nn/tensor.hpp"

namespace forktms::nn {

// Whether predictions are probabilities p or log-probabilities log p (the
// output of a log-sigmoid).
enum class PredictionSpace { Probability, Log };

inline constexpr double kProbabilityClamp = 1e-7;

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d prediction, same shape as the prediction
};

/// Binary cross-entropy -mean[t log p + (1 - t) log(1 - p)] with p clamped to
/// [1e-7, 1 - 1e-7]. Throws on shape mismatch, non-binary targets, or (in
/// probability space) p outside (0, 1).
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& prediction, const Tensor<T>& target, PredictionSpace space);

}  // namespace forktms::nn
