#include "forktms/nn/adam.hpp"

#include <cmath>

namespace forktms::nn {

template <typename T>
void adam_step(AdamState<T>& s, std::span<const ParamRef<T>> params) {
  if (s.first_moment.empty()) {
    for (const auto& p : params) {
      s.first_moment.emplace_back(p.value->size(), T(0));
      s.second_moment.emplace_back(p.value->size(), T(0));
    }
  }
  if (s.first_moment.size() != params.size()) throw Error("shape mismatch: ADAM state holds a different parameter set");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.value->size() != p.grad->size() || p.value->size() != s.first_moment[i].size()) {
      throw Error("shape mismatch: ADAM parameter '" + p.name + "'");
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value->values();
    const auto& grad = params[i].grad->values();
    auto& m = s.first_moment[i];
    auto& v = s.second_moment[i];
    const T b1 = static_cast<T>(s.beta1), b2 = static_cast<T>(s.beta2);
    const T r1 = static_cast<T>(1.0 / c1), r2 = static_cast<T>(1.0 / c2);
    const T lr = static_cast<T>(s.lr), eps = static_cast<T>(s.epsilon);
    for (std::size_t j = 0; j < value.size(); ++j) {
      const T g = grad[j];
      m[j] = b1 * m[j] + (T(1) - b1) * g;
      v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      value[j] -= lr * (m[j] * r1) / (std::sqrt(v[j] * r2) + eps);
    }
  }
}

template void adam_step(AdamState<float>&, std::span<const ParamRef<float>>);
template void adam_step(AdamState<double>&, std::span<const ParamRef<double>>);

}  // namespace forktms::nn
