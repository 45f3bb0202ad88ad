#include "forktms/forknet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace forktms::forknet {

std::vector<TrainingSample> make_slice_dataset(const std::vector<volume::ScalarVolume>& mri,
                                               const std::vector<volume::LabelVolume>& labels, volume::Axis axis) {
  if (mri.size() != labels.size()) throw Error("label/slice shape mismatch: volume counts differ");
  std::vector<TrainingSample> out;
  for (std::size_t v = 0; v < mri.size(); ++v) {
    if (!mri[v].same_grid(labels[v])) throw Error("label/slice shape mismatch: volume grids differ");
    const int count = volume::slice_count(mri[v].dims(), axis);
    for (int k = 0; k < count; ++k) {
      out.push_back({volume::extract_slice(mri[v], axis, k), volume::extract_slice(labels[v], axis, k)});
    }
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(std::size_t count, double split,
                                                                            std::uint64_t seed) {
  if (count == 0) throw Error("empty dataset");
  if (!(split > 0.0 && split <= 1.0)) throw Error("split fraction must lie in (0, 1]");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(split * count)));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {train, val};
}

std::vector<nn::Tensor<float>> make_targets(const Network<float>& net, const std::vector<const LabelSlice*>& batch) {
  const int extent = net.config().extent;
  const int b = static_cast<int>(batch.size());
  std::vector<nn::Tensor<float>> targets;
  auto fill_mask = [&](nn::Tensor<float>& t, int bi, int c, int label) {
    float* p = t.plane(bi, c);
    const auto& d = batch[bi]->data;
    for (std::size_t i = 0; i < d.size(); ++i) p[i] = d[i] == label ? 1.0f : 0.0f;
  };
  for (const auto* s : batch) {
    if (s->width != extent || s->height != extent) throw Error("label/slice shape mismatch: label slice extent");
  }
  if (net.variant() == Variant::ForkNet) {
    for (int n = 1; n <= net.output_count(); ++n) {
      nn::Tensor<float> t(b, 1, extent, extent);
      for (int bi = 0; bi < b; ++bi) fill_mask(t, bi, 0, n);
      targets.push_back(std::move(t));
    }
  } else {
    nn::Tensor<float> t(b, net.classes(), extent, extent);
    for (int bi = 0; bi < b; ++bi)
      for (int c = 0; c < net.classes(); ++c) fill_mask(t, bi, c, c + 1);
    targets.push_back(std::move(t));
  }
  return targets;
}

double network_loss(const Network<float>& net, const std::vector<nn::Tensor<float>>& outputs,
                    const std::vector<nn::Tensor<float>>& targets, nn::PredictionSpace space,
                    std::vector<nn::Tensor<float>>* grads) {
  (void)net;
  if (outputs.size() != targets.size()) throw Error("label/slice shape mismatch: output/target count");
  double total = 0.0;
  if (grads) grads->clear();
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (space == nn::PredictionSpace::Log) {
      auto r = nn::cross_entropy(outputs[i], targets[i], space);
      total += r.loss;
      if (grads) grads->push_back(std::move(r.grad));
    } else {
      // Probabilities are exp of the log-sigmoid output; chain d/dlogp = p d/dp.
      nn::Tensor<float> p(outputs[i].shape());
      for (std::size_t k = 0; k < p.size(); ++k) {
        p.values()[k] = std::clamp(std::exp(outputs[i].values()[k]), static_cast<float>(nn::kProbabilityClamp),
                                   1.0f - static_cast<float>(nn::kProbabilityClamp));
      }
      auto r = nn::cross_entropy(p, targets[i], space);
      total += r.loss;
      if (grads) {
        for (std::size_t k = 0; k < p.size(); ++k) r.grad.values()[k] *= p.values()[k];
        grads->push_back(std::move(r.grad));
      }
    }
  }
  return total;
}

namespace {

nn::Tensor<float> batch_input(const std::vector<TrainingSample>& dataset, const std::vector<std::size_t>& members,
                              int extent) {
  nn::Tensor<float> x(static_cast<int>(members.size()), 1, extent, extent);
  for (std::size_t b = 0; b < members.size(); ++b) {
    const auto& img = dataset[members[b]].image.data;
    std::copy(img.begin(), img.end(), x.plane(static_cast<int>(b), 0));
  }
  return x;
}

}  // namespace

void recalibrate_batchnorm(Network<float>& net, const std::vector<TrainingSample>& dataset,
                           const std::vector<std::size_t>& indices, int batch, int max_batches) {
  const auto layers = net.batchnorm_layers();
  std::vector<double> keep;
  for (auto* l : layers) {
    keep.push_back(l->momentum);
    std::fill(l->running_mean.begin(), l->running_mean.end(), 0.0f);
    std::fill(l->running_var.begin(), l->running_var.end(), 0.0f);
  }
  int k = 0;
  for (std::size_t i = 0; i + batch <= indices.size() && k < max_batches; i += batch, ++k) {
    // running = (k * running + batch) / (k + 1)
    for (auto* l : layers) l->momentum = static_cast<double>(k) / (k + 1);
    const std::vector<std::size_t> members(indices.begin() + static_cast<std::ptrdiff_t>(i),
                                           indices.begin() + static_cast<std::ptrdiff_t>(i + batch));
    net.forward(batch_input(dataset, members, net.config().extent), Mode::Train);
  }
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i]->momentum = keep[i];
}

TrainReport train(Network<float>& net, const std::vector<TrainingSample>& dataset, const TrainSchedule& sched) {
  if (dataset.empty()) throw Error("empty dataset");
  if (sched.batch < 1) throw Error("batch size must be >= 1");
  if (sched.epochs < 0) throw Error("epochs must be >= 0");
  const int extent = net.config().extent;
  for (const auto& s : dataset) {
    if (s.image.width != s.labels.width || s.image.height != s.labels.height) {
      throw Error("label/slice shape mismatch: image and label slices differ");
    }
    if (s.image.width != extent || s.image.height != extent) {
      throw Error("label/slice shape mismatch: slice extent differs from network extent");
    }
  }

  TrainReport report;
  std::tie(report.train_indices, report.validation_indices) = split_dataset(dataset.size(), sched.split, sched.seed);

  nn::AdamState<float> adam;
  adam.lr = sched.lr;
  auto params = net.parameters();

  auto run_batch = [&](const std::vector<std::size_t>& members, bool update) {
    std::vector<const LabelSlice*> labels;
    for (auto i : members) labels.push_back(&dataset[i].labels);
    const nn::Tensor<float> x = batch_input(dataset, members, extent);
    const auto targets = make_targets(net, labels);
    if (!update) {
      const auto outputs = net.forward(x, Mode::Infer);
      return network_loss(net, outputs, targets, sched.space, nullptr);
    }
    Tape<float> tape;
    const auto outputs = net.forward(x, Mode::Train, &tape);
    std::vector<nn::Tensor<float>> grads;
    const double loss = network_loss(net, outputs, targets, sched.space, &grads);
    net.zero_grad();
    net.backward(tape, grads);
    nn::adam_step<float>(adam, params);
    return loss;
  };

  std::vector<std::size_t> order = report.train_indices;
  const std::size_t per_epoch = (order.size() + sched.batch - 1) / sched.batch;
  const double total_steps = static_cast<double>(per_epoch) * sched.epochs;
  std::size_t step = 0;
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    std::mt19937_64 rng(sched.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch + 1));
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(sched.batch)) {
      std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(i),
                                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + sched.batch)));
      if (sched.schedule == LrSchedule::Cosine) {
        adam.lr = sched.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(step) / total_steps));
      }
      ++step;
      const double loss = run_batch(members, true);
      report.step_loss.push_back(loss);
      sum += loss;
      ++batches;
    }
    report.epoch_loss.push_back(sum / batches);
    if (sched.precise_bn_batches > 0) {
      recalibrate_batchnorm(net, dataset, order, sched.batch, sched.precise_bn_batches);
    }

    double val = std::numeric_limits<double>::quiet_NaN();
    if (!report.validation_indices.empty()) {
      double vs = 0.0;
      int vb = 0;
      for (std::size_t i = 0; i < report.validation_indices.size(); i += 8) {
        std::vector<std::size_t> members(
            report.validation_indices.begin() + static_cast<std::ptrdiff_t>(i),
            report.validation_indices.begin() + static_cast<std::ptrdiff_t>(std::min(report.validation_indices.size(), i + 8)));
        vs += run_batch(members, false);
        ++vb;
      }
      val = vs / vb;
    }
    report.validation_loss.push_back(val);
    if (sched.on_epoch) sched.on_epoch(epoch + 1, report.epoch_loss.back(), val);
  }
  return report;
}

}  // namespace forktms::forknet
