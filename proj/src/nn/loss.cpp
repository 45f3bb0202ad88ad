#include "forktms/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace forktms::nn {

template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& pred, const Tensor<T>& target, PredictionSpace space) {
  if (!(pred.shape() == target.shape())) {
    throw Error("shape mismatch: prediction " + pred.shape().str() + " vs target " + target.shape().str());
  }
  if (pred.empty()) throw Error("cross_entropy on empty tensors");
  const double eps = kProbabilityClamp;
  const double inv_m = 1.0 / static_cast<double>(pred.size());
  LossResult<T> r;
  r.grad = Tensor<T>(pred.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target.values()[i];
    if (t != 0.0 && t != 1.0) throw Error("cross_entropy targets must be 0 or 1");
    const double v = pred.values()[i];
    if (space == PredictionSpace::Probability) {
      if (!(v > 0.0 && v < 1.0)) throw Error("probability outside (0,1) in cross_entropy");
      const double p = std::clamp(v, eps, 1.0 - eps);
      total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
      r.grad.values()[i] = static_cast<T>(-inv_m * (t / p - (1.0 - t) / (1.0 - p)));
    } else {
      if (!(v <= 0.0) || !std::isfinite(v)) throw Error("log-probability must be finite and <= 0 in cross_entropy");
      // log p enters unclamped on the positive term so a saturated wrong
      // prediction keeps its gradient; only the complement is clamped.
      const double p = std::clamp(std::exp(v), eps, 1.0 - eps);
      total -= t * v + (1.0 - t) * std::log1p(-p);
      r.grad.values()[i] = static_cast<T>(-inv_m * (t - (1.0 - t) * p / (1.0 - p)));
    }
  }
  r.loss = total * inv_m;
  return r;
}

template LossResult<float> cross_entropy(const Tensor<float>&, const Tensor<float>&, PredictionSpace);
template LossResult<double> cross_entropy(const Tensor<double>&, const Tensor<double>&, PredictionSpace);

}  // namespace forktms::nn
