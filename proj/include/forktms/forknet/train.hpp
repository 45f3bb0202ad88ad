#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "forktms/forknet/segment.hpp"

namespace forktms::forknet {

// One training pair: an MRI slice and its tissue-ID slice. The per-track
// binary masks (label == n) are derived on the fly.
struct TrainingSample {
  FloatSlice image;
  LabelSlice labels;
};

/// All slices of the given volume pairs along `axis`.
std::vector<TrainingSample> make_slice_dataset(const std::vector<volume::ScalarVolume>& mri,
                                               const std::vector<volume::LabelVolume>& labels, volume::Axis axis);

enum class LrSchedule {
  Constant,
  Cosine,  // lr * (1 + cos(pi * t)) / 2 over all steps
};

struct TrainSchedule {
  int epochs = 50;
  int batch = 2;
  double lr = 1e-3;
  double split = 0.9;  // fraction of shuffled slices used for training
  std::uint64_t seed = 0;
  nn::PredictionSpace space = nn::PredictionSpace::Log;
  LrSchedule schedule = LrSchedule::Constant;
  // After every epoch, replace the BN running statistics by the average of
  // batch statistics over up to this many training batches (0: keep the
  // exponential moving average).
  int precise_bn_batches = 0;
  std::function<void(int epoch, double train_loss, double val_loss)> on_epoch;
};

struct TrainReport {
  std::vector<double> epoch_loss;       // mean per-batch training loss, per epoch
  std::vector<double> validation_loss;  // NaN when the validation split is empty
  std::vector<double> step_loss;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

/// Seeded shuffle and split into (train, validation) index sets.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(std::size_t count, double split,
                                                                            std::uint64_t seed);

/// Binary targets for a batch: ForkNet gets N tensors B x 1 x H x W, the
/// U-net one tensor B x classes x H x W.
std::vector<nn::Tensor<float>> make_targets(const Network<float>& net, const std::vector<const LabelSlice*>& batch);

/// Summed (over outputs) mean cross-entropy and its gradients.
double network_loss(const Network<float>& net, const std::vector<nn::Tensor<float>>& outputs,
                    const std::vector<nn::Tensor<float>>& targets, nn::PredictionSpace space,
                    std::vector<nn::Tensor<float>>* grads);

/// Averages batch statistics over the given batches into every BN layer's
/// running mean and variance.
void recalibrate_batchnorm(Network<float>& net, const std::vector<TrainingSample>& dataset,
                           const std::vector<std::size_t>& indices, int batch, int max_batches);

/// ADAM training, deterministic for a fixed seed.
TrainReport train(Network<float>& net, const std::vector<TrainingSample>& dataset, const TrainSchedule& schedule);

}  // namespace forktms::forknet
