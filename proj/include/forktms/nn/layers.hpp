#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "forktms/nn/tensor.hpp"

namespace forktms::nn {

enum class LayerKind { Conv3x3, Deconv2x2, MaxPool2x2, BatchNorm, ReLU, LogSigmoid, Concat };
// Sample: inference that normalizes each batch element with its own
// statistics; running statistics are left untouched.
enum class Mode { Train, Infer, Sample };

const char* kind_name(LayerKind kind);

// One primitive layer. Parameters live in `weight`/`bias` (for batch norm:
// scale/shift), their gradients accumulate into `grad_weight`/`grad_bias`.
//   Conv3x3:   weight out x in x 3 x 3, stride 1, zero padding 1
//   Deconv2x2: weight in x out x 2 x 2, stride 2, no padding
//   BatchNorm: weight/bias 1 x C x 1 x 1, running stats per channel
template <typename T>
struct Layer {
  LayerKind kind = LayerKind::ReLU;
  int in_channels = 0;
  int out_channels = 0;
  Tensor<T> weight, bias;
  Tensor<T> grad_weight, grad_bias;
  std::vector<T> running_mean, running_var;
  T momentum = T(0.9);
  T epsilon = T(0.001);

  bool has_parameters() const { return !weight.empty(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
  void zero_grad();
};

/// Kaiming-style uniform init scaled by fan-in; bias zero.
template <typename T>
Layer<T> make_conv3x3(int in_channels, int out_channels, std::mt19937_64& rng);
template <typename T>
Layer<T> make_deconv2x2(int in_channels, int out_channels, std::mt19937_64& rng);
template <typename T>
Layer<T> make_batchnorm(int channels);
template <typename T>
Layer<T> make_layer(LayerKind kind);  // parameter-free kinds

/// Output shape for an input of `in`; throws on mismatch.
template <typename T>
Shape output_shape(const Layer<T>& layer, const Shape& in);

/// Train-mode batch norm normalizes with batch statistics and folds them into
/// the running statistics (running = momentum * running + (1 - momentum) * batch).
/// Infer mode uses the running statistics; Sample mode normalizes each batch
/// element with its own statistics. Throws on shape mismatch or a
/// non-finite result.
template <typename T>
Tensor<T> layer_forward(Layer<T>& layer, const Tensor<T>& input, Mode mode);

/// Gradient w.r.t. the input for the forward pass that mapped `input` to
/// `output`; parameter gradients are added into the layer. Batch norm needs
/// the mode of that forward pass. Max-pool routes each window's gradient to
/// its first maximal element in row-major order.
template <typename T>
Tensor<T> layer_backward(Layer<T>& layer, const Tensor<T>& input, const Tensor<T>& output,
                         const Tensor<T>& grad_output, Mode mode = Mode::Train);

/// Channel concatenation [first, second]; spatial extents and batch must agree.
template <typename T>
Tensor<T> concat_forward(const Tensor<T>& first, const Tensor<T>& second);
/// Splits the gradient of a concatenation back into its two inputs.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& grad_output, int first_channels);

// Row-major C += A * B and C += A * B^T. float routes through the SIMD
// kernels; other types use the plain loops.
template <typename T>
void gemm(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);

}  // namespace forktms::nn
