#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forktms/nn/adam.hpp"
#include "forktms/nn/checkpoint.hpp"
#include "forktms/nn/layers.hpp"
#include "forktms/nn/loss.hpp"

namespace forktms::forknet {

using nn::Mode;
using nn::Shape;
using nn::Tensor;

enum class Variant { ForkNet, UNet };

struct ForkNetConfig {
  int degree = 13;    // decoder tracks N
  int depth = 6;      // encoder levels D
  int extent = 256;   // square input side, divisible by 2^D
  nn::PredictionSpace output_space = nn::PredictionSpace::Log;
  std::uint64_t seed = 0;
};

/// Throws unless N >= 1, D >= 2 and the extent is divisible by 2^D.
void validate(const ForkNetConfig& config);

// Channel widths per level (1-based). Encoder level i carries 2^(i+2),
// decoder level j 2^(j+1), conv module j 2^(j+2); the U-net replaces the
// level-1 decoder and conv-module widths by the class count.
int encoder_width(int level);
int decoder_width(int level);
int convmod_width(int level);

template <typename T>
struct EncoderModule {
  nn::Layer<T> conv, bn, relu, pool;
};

template <typename T>
struct DecoderModule {
  nn::Layer<T> deconv, bn, relu, conv;
};

template <typename T>
struct ConvModule {
  nn::Layer<T> conv, bn, relu;
};

template <typename T>
struct Track {
  std::vector<DecoderModule<T>> dec;  // dec[j-1] is DecMod_j, j = 1..D
  std::vector<ConvModule<T>> conv;    // conv[j-1] is ConvMod_j, j = 1..D-1
  bool has_map = true;
  nn::Layer<T> map;                   // Map_n 3x3 conv to one channel
  nn::Layer<T> out;                   // log-sigmoid
};

// Everything the backward pass needs from one forward pass.
template <typename T>
struct Tape {
  struct Enc {
    Tensor<T> in, conv, bn, relu, pool;
  };
  struct Dec {
    Tensor<T> in, deconv, bn, relu, conv;
  };
  struct Cm {
    Tensor<T> in, conv, bn, relu;
  };
  struct TrackTape {
    std::vector<Dec> dec;
    std::vector<Cm> conv;
    Tensor<T> map, out;
  };
  Mode mode = Mode::Train;
  std::vector<Enc> enc;
  std::vector<TrackTape> tracks;
};

// One row of the structural walk: module name (e.g. "DecMod_{3,2}"), the
// layer row within it and the observed output shape.
struct ShapeRecord {
  std::string module;
  std::string layer;
  Shape shape;
};

template <typename T>
class Network {
 public:
  Network() = default;
  Network(Variant variant, ForkNetConfig config, int classes, std::vector<EncoderModule<T>> enc,
          std::vector<Track<T>> tracks)
      : variant_(variant), config_(config), classes_(classes), enc_(std::move(enc)), tracks_(std::move(tracks)) {}

  Variant variant() const { return variant_; }
  const ForkNetConfig& config() const { return config_; }
  int classes() const { return classes_; }
  /// Number of output tensors: N for ForkNet, 1 for the U-net.
  int output_count() const { return static_cast<int>(tracks_.size()); }

  /// Log-space outputs: ForkNet yields N tensors B x 1 x H x W, the U-net one
  /// tensor B x classes x H x W. Every track reads the same encoder pass.
  std::vector<Tensor<T>> forward(const Tensor<T>& input, Mode mode, Tape<T>* tape = nullptr,
                                 std::vector<ShapeRecord>* walk = nullptr);

  /// Accumulates parameter gradients for d loss / d outputs.
  void backward(const Tape<T>& tape, const std::vector<Tensor<T>>& grad_outputs);

  void zero_grad();
  std::vector<nn::ParamRef<T>> parameters();
  std::size_t parameter_count() const;

  /// Primitive layers (convs, deconvs, BN, activations, pools, concats, maps)
  /// and table-level modules (EncMod, DecMod, ConvMod, Concat, Map) per track.
  std::size_t primitive_layer_count() const;
  std::size_t module_count_per_track() const;

  nn::Checkpoint to_checkpoint() const;
  void load_parameters(const nn::Checkpoint& ckpt);

  /// Every batch-norm layer, encoder first, then track by track.
  std::vector<nn::Layer<T>*> batchnorm_layers();

  std::vector<EncoderModule<T>>& encoder() { return enc_; }
  std::vector<Track<T>>& tracks() { return tracks_; }

 private:
  template <typename Fn>
  void for_each_layer(Fn&& fn);
  template <typename Fn>
  void for_each_layer(Fn&& fn) const;

  Variant variant_ = Variant::ForkNet;
  ForkNetConfig config_{};
  int classes_ = 0;
  std::vector<EncoderModule<T>> enc_;
  std::vector<Track<T>> tracks_;
};

template <typename T>
Network<T> build_forknet(const ForkNetConfig& config);

/// Single-track baseline whose level-1 modules and output carry `classes`
/// channels, followed by a per-channel log-sigmoid.
template <typename T>
Network<T> build_unet(const ForkNetConfig& config, int classes = 13);

/// Rebuilds a network from a checkpoint written by to_checkpoint().
Network<float> network_from_checkpoint(const nn::Checkpoint& ckpt);

}  // namespace forktms::forknet
