#pragma once

// End-to-end central-difference check of a reduced ForkNet in double
// precision.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "forktms/forknet/network.hpp"
#include "forktms/nn/loss.hpp"

namespace forktms::testing {

struct GradientProbe {
  std::string parameter;
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;
};

// Relative error with an absolute floor: parameters whose true gradient is
// zero (biases feeding batch norm) only see round-off in the difference
// quotient, which the floor keeps from reading as a relative error of O(1).
inline double gradient_error(double numeric, double analytic, double floor) {
  return std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), floor});
}

// Samples up to `per_param` entries of every parameter tensor.
inline std::vector<GradientProbe> end_to_end_gradient(int degree = 3, int per_param = 4, double step = 1e-5,
                                                      double floor = 1e-6) {
  using T = double;
  forknet::ForkNetConfig cfg;
  cfg.depth = 2;
  cfg.extent = 16;
  cfg.degree = degree;
  cfg.seed = 1;
  auto net = forknet::build_forknet<T>(cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  nn::Tensor<T> x(2, 1, 16, 16);
  for (auto& v : x.values()) v = u(rng);
  std::vector<nn::Tensor<T>> targets;
  for (int n = 0; n < net.output_count(); ++n) {
    nn::Tensor<T> t(2, 1, 16, 16);
    for (auto& v : t.values()) v = u(rng) < 0.3 ? 1.0 : 0.0;
    targets.push_back(std::move(t));
  }
  auto loss = [&](bool with_grad) {
    forknet::Tape<T> tape;
    auto out = net.forward(x, nn::Mode::Train, with_grad ? &tape : nullptr);
    double total = 0.0;
    std::vector<nn::Tensor<T>> grads;
    for (std::size_t n = 0; n < out.size(); ++n) {
      auto r = nn::cross_entropy(out[n], targets[n], nn::PredictionSpace::Log);
      total += r.loss;
      grads.push_back(std::move(r.grad));
    }
    if (with_grad) {
      net.zero_grad();
      net.backward(tape, grads);
    }
    return total;
  };
  loss(true);
  std::vector<GradientProbe> probes;
  for (auto& p : net.parameters()) {
    auto& vals = p.value->values();
    const std::size_t stride = std::max<std::size_t>(1, vals.size() / per_param);
    for (std::size_t i = 0; i < vals.size(); i += stride) {
      const double keep = vals[i];
      vals[i] = keep + step;
      const double lp = loss(false);
      vals[i] = keep - step;
      const double lm = loss(false);
      vals[i] = keep;
      GradientProbe g{p.name, p.grad->values()[i], (lp - lm) / (2 * step), 0.0};
      g.error = gradient_error(g.numeric, g.analytic, floor);
      probes.push_back(g);
    }
  }
  return probes;
}

}  // namespace forktms::testing
