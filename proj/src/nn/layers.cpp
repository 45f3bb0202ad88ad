#include "forktms/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forktms/simd/kernels.hpp"

namespace forktms::nn {

const char* kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv3x3: return "Conv3x3";
    case LayerKind::Deconv2x2: return "Deconv2x2";
    case LayerKind::MaxPool2x2: return "MaxPool2x2";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::LogSigmoid: return "LogSigmoid";
    case LayerKind::Concat: return "Concat";
  }
  return "?";
}

template <typename T>
void Layer<T>::zero_grad() {
  grad_weight.fill(T(0));
  grad_bias.fill(T(0));
}

template <typename T>
void gemm(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  if constexpr (std::is_same_v<T, float>) {
    simd::sgemm(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    for (int i = 0; i < m; ++i) {
      T* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
      for (int p = 0; p < k; ++p) {
        const T aip = a[static_cast<std::ptrdiff_t>(i) * lda + p];
        const T* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
        for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  if constexpr (std::is_same_v<T, float>) {
    simd::sgemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        T acc = 0;
        for (int p = 0; p < k; ++p) acc += a[static_cast<std::ptrdiff_t>(i) * lda + p] * b[static_cast<std::ptrdiff_t>(j) * ldb + p];
        c[static_cast<std::ptrdiff_t>(i) * ldc + j] += acc;
      }
    }
  }
}

namespace {

template <typename T>
void init_uniform(Tensor<T>& t, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

template <typename T>
void check_finite(const Tensor<T>& t, LayerKind kind) {
  if (!t.all_finite()) throw Error(std::string("non-finite output from ") + kind_name(kind));
}

// Columns of the 3x3 neighbourhood of every pixel: row (ci*9 + ky*3 + kx),
// column (y*w + x), zero outside the image.
// Column buffer for output rows [y0, y1): row (ci * 9 + ky * 3 + kx) holds
// the input shifted by (ky - 1, kx - 1), zero outside the image.
template <typename T>
void im2col3x3(const T* in, int channels, int h, int w, int y0, int y1, T* col) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t n = static_cast<std::size_t>(y1 - y0) * w;
  for (int ci = 0; ci < channels; ++ci) {
    const T* src = in + ci * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * n;
        const int lo = kx == 0 ? 1 : 0, hi = kx == 2 ? w - 1 : w;
        for (int y = y0; y < y1; ++y) {
          const int sy = y + ky - 1;
          T* drow = dst + static_cast<std::size_t>(y - y0) * w;
          if (sy < 0 || sy >= h) {
            std::fill(drow, drow + w, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          if (lo) drow[0] = T(0);
          std::copy(srow + lo + kx - 1, srow + hi + kx - 1, drow + lo);
          if (hi < w) drow[w - 1] = T(0);
        }
      }
    }
  }
}

template <typename T>
void col2im3x3(const T* col, int channels, int h, int w, int y0, int y1, T* out) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t n = static_cast<std::size_t>(y1 - y0) * w;
  for (int ci = 0; ci < channels; ++ci) {
    T* dst = out + ci * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * n;
        const int lo = kx == 0 ? 1 : 0, hi = kx == 2 ? w - 1 : w;
        for (int y = y0; y < y1; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* srow = src + static_cast<std::size_t>(y - y0) * w;
          T* d = dst + static_cast<std::size_t>(sy) * w + kx - 1;
          for (int x = lo; x < hi; ++x) d[x] += srow[x];
        }
      }
    }
  }
}

// Output rows per column block, keeping the buffer near 128 KiB.
inline int conv_block_rows(int k, int h, int w) {
  return std::clamp(32768 / std::max(1, k * w), 1, h);
}

template <typename T>
std::vector<T> transpose(const T* a, int rows, int cols) {
  std::vector<T> t(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t[static_cast<std::size_t>(c) * rows + r] = a[static_cast<std::size_t>(r) * cols + c];
  return t;
}

// Sums in 8 independent lanes per 512-element block, blocks combined in
// double; vectorizes without reassociation flags and keeps a fixed order.
template <typename T, typename Fn>
double lane_sum(std::size_t n, Fn&& term) {
  double total = 0.0;
  for (std::size_t b0 = 0; b0 < n; b0 += 512) {
    const std::size_t b1 = std::min(n, b0 + 512);
    T acc[8] = {};
    std::size_t i = b0;
    for (; i + 8 <= b1; i += 8)
      for (int l = 0; l < 8; ++l) acc[l] += term(i + l);
    double block = 0.0;
    for (int l = 0; l < 8; ++l) block += acc[l];
    for (; i < b1; ++i) block += term(i);
    total += block;
  }
  return total;
}

// ---- convolution ----

template <typename T>
Tensor<T> conv_forward(const Layer<T>& l, const Tensor<T>& x) {
  const int h = x.h(), w = x.w();
  const int k = l.in_channels * 9;
  const int plane = h * w;
  const int rows = conv_block_rows(k, h, w);
  Tensor<T> y(x.n(), l.out_channels, h, w);
  std::vector<T> col(static_cast<std::size_t>(k) * rows * w);
  for (int b = 0; b < x.n(); ++b) {
    T* out = y.plane(b, 0);
    for (int co = 0; co < l.out_channels; ++co) std::fill(out + co * plane, out + (co + 1) * plane, l.bias.values()[co]);
    for (int y0 = 0; y0 < h; y0 += rows) {
      const int y1 = std::min(h, y0 + rows), n = (y1 - y0) * w;
      im2col3x3(x.plane(b, 0), l.in_channels, h, w, y0, y1, col.data());
      gemm<T>(l.out_channels, n, k, l.weight.data(), k, col.data(), n, out + y0 * w, plane);
    }
  }
  return y;
}

template <typename T>
Tensor<T> conv_backward(Layer<T>& l, const Tensor<T>& x, const Tensor<T>& gy) {
  const int h = x.h(), w = x.w();
  const int k = l.in_channels * 9;
  const int plane = h * w;
  const int rows = conv_block_rows(k, h, w);
  Tensor<T> gx(x.shape());
  std::vector<T> col(static_cast<std::size_t>(k) * rows * w);
  std::vector<T> gcol(col.size());
  const auto wt = transpose(l.weight.data(), l.out_channels, k);  // k x out
  for (int b = 0; b < x.n(); ++b) {
    const T* g = gy.plane(b, 0);
    for (int co = 0; co < l.out_channels; ++co) {
      const T* gc = g + static_cast<std::size_t>(co) * plane;
      l.grad_bias.values()[co] += static_cast<T>(lane_sum<T>(plane, [gc](std::size_t i) { return gc[i]; }));
    }
    for (int y0 = 0; y0 < h; y0 += rows) {
      const int y1 = std::min(h, y0 + rows), n = (y1 - y0) * w;
      im2col3x3(x.plane(b, 0), l.in_channels, h, w, y0, y1, col.data());
      gemm_nt<T>(l.out_channels, k, n, g + y0 * w, plane, col.data(), n, l.grad_weight.data(), k);
      std::fill(gcol.begin(), gcol.begin() + static_cast<std::ptrdiff_t>(k) * n, T(0));
      gemm<T>(k, n, l.out_channels, wt.data(), l.out_channels, g + y0 * w, plane, gcol.data(), n);
      col2im3x3(gcol.data(), l.in_channels, h, w, y0, y1, gx.plane(b, 0));
    }
  }
  return gx;
}

// ---- transposed convolution, 2x2 stride 2 ----

template <typename T>
Tensor<T> deconv_forward(const Layer<T>& l, const Tensor<T>& x) {
  const int h = x.h(), w = x.w();
  const int plane = h * w;
  const int rows = l.out_channels * 4;
  Tensor<T> y(x.n(), l.out_channels, 2 * h, 2 * w);
  const auto wt = transpose(l.weight.data(), l.in_channels, rows);  // rows x in
  std::vector<T> tmp(static_cast<std::size_t>(rows) * plane);
  for (int b = 0; b < x.n(); ++b) {
    std::fill(tmp.begin(), tmp.end(), T(0));
    gemm<T>(rows, plane, l.in_channels, wt.data(), l.in_channels, x.plane(b, 0), plane, tmp.data(), plane);
    for (int co = 0; co < l.out_channels; ++co) {
      const T bias = l.bias.values()[co];
      T* out = y.plane(b, co);
      for (int ab = 0; ab < 4; ++ab) {
        const int a = ab >> 1, bb = ab & 1;
        const T* src = tmp.data() + static_cast<std::size_t>(co * 4 + ab) * plane;
        for (int iy = 0; iy < h; ++iy)
          for (int ix = 0; ix < w; ++ix)
            out[static_cast<std::size_t>(2 * iy + a) * (2 * w) + 2 * ix + bb] = src[iy * w + ix] + bias;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> deconv_backward(Layer<T>& l, const Tensor<T>& x, const Tensor<T>& gy) {
  const int h = x.h(), w = x.w();
  const int plane = h * w;
  const int rows = l.out_channels * 4;
  Tensor<T> gx(x.shape());
  std::vector<T> gtmp(static_cast<std::size_t>(rows) * plane);
  for (int b = 0; b < x.n(); ++b) {
    for (int co = 0; co < l.out_channels; ++co) {
      const T* g = gy.plane(b, co);
      T bias_acc = 0;
      for (int ab = 0; ab < 4; ++ab) {
        const int a = ab >> 1, bb = ab & 1;
        T* dst = gtmp.data() + static_cast<std::size_t>(co * 4 + ab) * plane;
        for (int iy = 0; iy < h; ++iy)
          for (int ix = 0; ix < w; ++ix) {
            const T v = g[static_cast<std::size_t>(2 * iy + a) * (2 * w) + 2 * ix + bb];
            dst[iy * w + ix] = v;
            bias_acc += v;
          }
      }
      l.grad_bias.values()[co] += bias_acc;
    }
    gemm_nt<T>(l.in_channels, rows, plane, x.plane(b, 0), plane, gtmp.data(), plane, l.grad_weight.data(), rows);
    gemm<T>(l.in_channels, plane, rows, l.weight.data(), rows, gtmp.data(), plane, gx.plane(b, 0), plane);
  }
  return gx;
}

// ---- max pooling ----

template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  for (int b = 0; b < x.n(); ++b)
    for (int c = 0; c < x.c(); ++c) {
      const T* in = x.plane(b, c);
      T* out = y.plane(b, c);
      for (int oy = 0; oy < y.h(); ++oy)
        for (int ox = 0; ox < y.w(); ++ox) {
          const T* p = in + static_cast<std::size_t>(2 * oy) * x.w() + 2 * ox;
          out[oy * y.w() + ox] = std::max(std::max(p[0], p[1]), std::max(p[x.w()], p[x.w() + 1]));
        }
    }
  return y;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& x, const Tensor<T>& gy) {
  Tensor<T> gx(x.shape());
  for (int b = 0; b < x.n(); ++b)
    for (int c = 0; c < x.c(); ++c) {
      const T* in = x.plane(b, c);
      const T* g = gy.plane(b, c);
      T* out = gx.plane(b, c);
      for (int oy = 0; oy < gy.h(); ++oy)
        for (int ox = 0; ox < gy.w(); ++ox) {
          const std::size_t base = static_cast<std::size_t>(2 * oy) * x.w() + 2 * ox;
          const std::size_t window[4] = {base, base + 1, base + x.w(), base + x.w() + 1};
          std::size_t best = window[0];
          for (int i = 1; i < 4; ++i)
            if (in[window[i]] > in[best]) best = window[i];
          out[best] += g[oy * gy.w() + ox];
        }
    }
  return gx;
}

// ---- batch normalization ----

template <typename T>
void batch_stats(const Tensor<T>& x, int c, double& mean, double& var) {
  const std::size_t plane = x.shape().plane();
  const double count = static_cast<double>(plane) * x.n();
  double s = 0.0;
  for (int b = 0; b < x.n(); ++b) {
    const T* p = x.plane(b, c);
    s += lane_sum<T>(plane, [p](std::size_t i) { return p[i]; });
  }
  mean = s / count;
  const T m = static_cast<T>(mean);
  double v = 0.0;
  for (int b = 0; b < x.n(); ++b) {
    const T* p = x.plane(b, c);
    v += lane_sum<T>(plane, [p, m](std::size_t i) { return (p[i] - m) * (p[i] - m); });
  }
  var = v / count;
}

template <typename T>
Tensor<T> batchnorm_forward(Layer<T>& l, const Tensor<T>& x, Mode mode) {
  Tensor<T> y(x.shape());
  const std::size_t plane = x.shape().plane();
  if (mode == Mode::Sample && x.n() > 1) {
    for (int b = 0; b < x.n(); ++b) {
      Tensor<T> one(1, x.c(), x.h(), x.w());
      std::copy(x.plane(b, 0), x.plane(b, 0) + x.c() * plane, one.plane(0, 0));
      const auto yb = batchnorm_forward(l, one, mode);
      std::copy(yb.values().begin(), yb.values().end(), y.plane(b, 0));
    }
    return y;
  }
  for (int c = 0; c < x.c(); ++c) {
    double mean, var;
    if (mode != Mode::Infer) {
      batch_stats(x, c, mean, var);
      if (mode == Mode::Train) {
        l.running_mean[c] = static_cast<T>(l.momentum * l.running_mean[c] + (1.0 - l.momentum) * mean);
        l.running_var[c] = static_cast<T>(l.momentum * l.running_var[c] + (1.0 - l.momentum) * var);
      }
    } else {
      mean = l.running_mean[c];
      var = l.running_var[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + static_cast<double>(l.epsilon));
    const T scale = static_cast<T>(l.weight.values()[c] * inv_std);
    const T shift = static_cast<T>(l.bias.values()[c] - mean * l.weight.values()[c] * inv_std);
    for (int b = 0; b < x.n(); ++b) {
      const T* in = x.plane(b, c);
      T* out = y.plane(b, c);
      for (std::size_t i = 0; i < plane; ++i) out[i] = in[i] * scale + shift;
    }
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(Layer<T>& l, const Tensor<T>& x, const Tensor<T>& gy, Mode mode) {
  if (mode == Mode::Sample) throw Error("batch norm backward in sample mode");
  Tensor<T> gx(x.shape());
  const std::size_t plane = x.shape().plane();
  const double count = static_cast<double>(plane) * x.n();
  for (int c = 0; c < x.c(); ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      batch_stats(x, c, mean, var);
    } else {
      mean = l.running_mean[c];
      var = l.running_var[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + static_cast<double>(l.epsilon));
    const double gamma = l.weight.values()[c];
    const T m = static_cast<T>(mean);
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < x.n(); ++b) {
      const T* in = x.plane(b, c);
      const T* g = gy.plane(b, c);
      sum_g += lane_sum<T>(plane, [g](std::size_t i) { return g[i]; });
      sum_gx += lane_sum<T>(plane, [g, in, m](std::size_t i) { return g[i] * (in[i] - m); });
    }
    sum_gx *= inv_std;
    l.grad_weight.values()[c] += static_cast<T>(sum_gx);
    l.grad_bias.values()[c] += static_cast<T>(sum_g);
    // dx = gamma inv_std (g - mean(g) - xhat mean(g xhat)) = k1 g + k2 x + k3
    double k1 = gamma * inv_std, k2 = 0.0, k3 = 0.0;
    if (mode == Mode::Train) {
      k2 = -k1 * inv_std * sum_gx / count;
      k3 = -k1 * sum_g / count - k2 * mean;
    }
    const T a1 = static_cast<T>(k1), a2 = static_cast<T>(k2), a3 = static_cast<T>(k3);
    for (int b = 0; b < x.n(); ++b) {
      const T* in = x.plane(b, c);
      const T* g = gy.plane(b, c);
      T* out = gx.plane(b, c);
      for (std::size_t i = 0; i < plane; ++i) out[i] = a1 * g[i] + a2 * in[i] + a3;
    }
  }
  return gx;
}

}  // namespace

template <typename T>
Layer<T> make_conv3x3(int in_channels, int out_channels, std::mt19937_64& rng) {
  require(in_channels > 0 && out_channels > 0, "conv channels must be positive");
  Layer<T> l;
  l.kind = LayerKind::Conv3x3;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.weight = Tensor<T>(out_channels, in_channels, 3, 3);
  l.bias = Tensor<T>(1, out_channels, 1, 1);
  init_uniform(l.weight, in_channels * 9, rng);
  l.grad_weight = Tensor<T>(l.weight.shape());
  l.grad_bias = Tensor<T>(l.bias.shape());
  return l;
}

template <typename T>
Layer<T> make_deconv2x2(int in_channels, int out_channels, std::mt19937_64& rng) {
  require(in_channels > 0 && out_channels > 0, "deconv channels must be positive");
  Layer<T> l;
  l.kind = LayerKind::Deconv2x2;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.weight = Tensor<T>(in_channels, out_channels, 2, 2);
  l.bias = Tensor<T>(1, out_channels, 1, 1);
  init_uniform(l.weight, in_channels * 4, rng);
  l.grad_weight = Tensor<T>(l.weight.shape());
  l.grad_bias = Tensor<T>(l.bias.shape());
  return l;
}

template <typename T>
Layer<T> make_batchnorm(int channels) {
  require(channels > 0, "batch norm channels must be positive");
  Layer<T> l;
  l.kind = LayerKind::BatchNorm;
  l.in_channels = l.out_channels = channels;
  l.weight = Tensor<T>(1, channels, 1, 1, T(1));
  l.bias = Tensor<T>(1, channels, 1, 1, T(0));
  l.grad_weight = Tensor<T>(l.weight.shape());
  l.grad_bias = Tensor<T>(l.bias.shape());
  l.running_mean.assign(channels, T(0));
  l.running_var.assign(channels, T(1));
  return l;
}

template <typename T>
Layer<T> make_layer(LayerKind kind) {
  require(kind == LayerKind::MaxPool2x2 || kind == LayerKind::ReLU || kind == LayerKind::LogSigmoid,
          std::string("make_layer: ") + kind_name(kind) + " needs explicit construction");
  Layer<T> l;
  l.kind = kind;
  return l;
}

template <typename T>
Shape output_shape(const Layer<T>& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::Conv3x3:
      require(in.c == l.in_channels, "shape mismatch: conv expects " + std::to_string(l.in_channels) +
                                         " channels, got " + std::to_string(in.c));
      return {in.n, l.out_channels, in.h, in.w};
    case LayerKind::Deconv2x2:
      require(in.c == l.in_channels, "shape mismatch: deconv expects " + std::to_string(l.in_channels) +
                                         " channels, got " + std::to_string(in.c));
      return {in.n, l.out_channels, 2 * in.h, 2 * in.w};
    case LayerKind::MaxPool2x2:
      require(in.h % 2 == 0 && in.w % 2 == 0, "shape mismatch: max-pool needs even extents, got " + in.str());
      return {in.n, in.c, in.h / 2, in.w / 2};
    case LayerKind::BatchNorm:
      require(in.c == l.in_channels, "shape mismatch: batch norm expects " + std::to_string(l.in_channels) +
                                         " channels, got " + std::to_string(in.c));
      return in;
    case LayerKind::ReLU:
    case LayerKind::LogSigmoid:
      return in;
    case LayerKind::Concat:
      throw Error("concat takes two inputs; use concat_forward");
  }
  return in;
}

template <typename T>
Tensor<T> layer_forward(Layer<T>& l, const Tensor<T>& x, Mode mode) {
  require(!x.empty(), std::string("empty input to ") + kind_name(l.kind));
  (void)output_shape(l, x.shape());
  Tensor<T> y;
  switch (l.kind) {
    case LayerKind::Conv3x3: y = conv_forward(l, x); break;
    case LayerKind::Deconv2x2: y = deconv_forward(l, x); break;
    case LayerKind::MaxPool2x2: y = maxpool_forward(x); break;
    case LayerKind::BatchNorm: y = batchnorm_forward(l, x, mode); break;
    case LayerKind::ReLU: {
      y = Tensor<T>(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) y.values()[i] = std::max(x.values()[i], T(0));
      break;
    }
    case LayerKind::LogSigmoid: {
      y = Tensor<T>(x.shape());
      // log sigmoid(v) = min(v, 0) - log1p(exp(-|v|))
      for (std::size_t i = 0; i < x.size(); ++i) {
        const T v = x.values()[i];
        y.values()[i] = std::min(v, T(0)) - std::log1p(std::exp(-std::abs(v)));
      }
      break;
    }
    case LayerKind::Concat: break;
  }
  check_finite(y, l.kind);
  return y;
}

template <typename T>
Tensor<T> layer_backward(Layer<T>& l, const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, Mode mode) {
  require(!x.empty(), std::string("missing forward context for ") + kind_name(l.kind));
  const Shape expected = output_shape(l, x.shape());
  require(gy.shape() == expected, std::string("shape mismatch: upstream gradient for ") + kind_name(l.kind) +
                                      " is " + gy.shape().str() + ", expected " + expected.str());
  switch (l.kind) {
    case LayerKind::Conv3x3: return conv_backward(l, x, gy);
    case LayerKind::Deconv2x2: return deconv_backward(l, x, gy);
    case LayerKind::MaxPool2x2: return maxpool_backward(x, gy);
    case LayerKind::BatchNorm: return batchnorm_backward(l, x, gy, mode);
    case LayerKind::ReLU: {
      require(y.shape() == expected, "missing forward context for ReLU");
      Tensor<T> gx(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) gx.values()[i] = y.values()[i] > T(0) ? gy.values()[i] : T(0);
      return gx;
    }
    case LayerKind::LogSigmoid: {
      Tensor<T> gx(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const T v = x.values()[i];
        // d/dv log sigmoid(v) = sigmoid(-v)
        const T s = v >= T(0) ? std::exp(-v) / (T(1) + std::exp(-v)) : T(1) / (T(1) + std::exp(v));
        gx.values()[i] = gy.values()[i] * s;
      }
      return gx;
    }
    case LayerKind::Concat: break;
  }
  throw Error("concat takes two inputs; use concat_backward");
}

template <typename T>
Tensor<T> concat_forward(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.n() == b.n() && a.h() == b.h() && a.w() == b.w(),
          "shape mismatch: concat of " + a.shape().str() + " and " + b.shape().str());
  Tensor<T> y(a.n(), a.c() + b.c(), a.h(), a.w());
  const std::size_t plane = a.shape().plane();
  for (int n = 0; n < a.n(); ++n) {
    std::copy_n(a.plane(n, 0), a.c() * plane, y.plane(n, 0));
    std::copy_n(b.plane(n, 0), b.c() * plane, y.plane(n, a.c()));
  }
  return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& gy, int first_channels) {
  require(first_channels > 0 && first_channels < gy.c(), "concat split out of range");
  Tensor<T> ga(gy.n(), first_channels, gy.h(), gy.w());
  Tensor<T> gb(gy.n(), gy.c() - first_channels, gy.h(), gy.w());
  const std::size_t plane = gy.shape().plane();
  for (int n = 0; n < gy.n(); ++n) {
    std::copy_n(gy.plane(n, 0), ga.c() * plane, ga.plane(n, 0));
    std::copy_n(gy.plane(n, first_channels), gb.c() * plane, gb.plane(n, 0));
  }
  return {std::move(ga), std::move(gb)};
}

#define FORKTMS_INSTANTIATE(T)                                                                       \
  template struct Layer<T>;                                                                          \
  template Layer<T> make_conv3x3<T>(int, int, std::mt19937_64&);                                     \
  template Layer<T> make_deconv2x2<T>(int, int, std::mt19937_64&);                                   \
  template Layer<T> make_batchnorm<T>(int);                                                          \
  template Layer<T> make_layer<T>(LayerKind);                                                        \
  template Shape output_shape<T>(const Layer<T>&, const Shape&);                                     \
  template Tensor<T> layer_forward<T>(Layer<T>&, const Tensor<T>&, Mode);                            \
  template Tensor<T> layer_backward<T>(Layer<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Mode); \
  template Tensor<T> concat_forward<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template std::pair<Tensor<T>, Tensor<T>> concat_backward<T>(const Tensor<T>&, int);                \
  template void gemm<T>(int, int, int, const T*, int, const T*, int, T*, int);                       \
  template void gemm_nt<T>(int, int, int, const T*, int, const T*, int, T*, int);

FORKTMS_INSTANTIATE(float)
FORKTMS_INSTANTIATE(double)

#undef FORKTMS_INSTANTIATE

}  // namespace forktms::nn
