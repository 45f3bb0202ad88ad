#include "forktms/forknet/network.hpp"

#include <random>
#include <sstream>

namespace forktms::forknet {

using nn::Layer;
using nn::LayerKind;

void validate(const ForkNetConfig& c) {
  if (c.degree < 1) throw Error("invalid config: degree N must be >= 1");
  if (c.depth < 2) throw Error("invalid config: depth D must be >= 2");
  if (c.depth > 12) throw Error("invalid config: depth D must be <= 12");
  const int unit = 1 << c.depth;
  if (c.extent < unit || c.extent % unit != 0) {
    throw Error("invalid config: extent " + std::to_string(c.extent) + " not divisible by 2^D = " + std::to_string(unit));
  }
}

int encoder_width(int level) { return 1 << (level + 2); }
int decoder_width(int level) { return 1 << (level + 1); }
int convmod_width(int level) { return 1 << (level + 2); }

namespace {

std::string idx(int j, int n) { return "{" + std::to_string(j) + "," + std::to_string(n) + "}"; }

template <typename T>
std::vector<EncoderModule<T>> build_encoder(int depth, std::mt19937_64& rng) {
  std::vector<EncoderModule<T>> enc;
  int in = 1;
  for (int i = 1; i <= depth; ++i) {
    const int out = encoder_width(i);
    enc.push_back({nn::make_conv3x3<T>(in, out, rng), nn::make_batchnorm<T>(out), nn::make_layer<T>(LayerKind::ReLU),
                   nn::make_layer<T>(LayerKind::MaxPool2x2)});
    in = out;
  }
  return enc;
}

// level1_width overrides the level-1 decoder and conv-module widths (U-net).
template <typename T>
Track<T> build_track(int depth, int level1_width, bool has_map, std::mt19937_64& rng) {
  Track<T> t;
  auto dec_w = [&](int j) { return j == 1 && level1_width > 0 ? level1_width : decoder_width(j); };
  auto cm_w = [&](int j) { return j == 1 && level1_width > 0 ? level1_width : convmod_width(j); };
  t.dec.resize(depth);
  t.conv.resize(depth - 1);
  for (int j = depth; j >= 1; --j) {
    const int in = j == depth ? encoder_width(depth) : cm_w(j);
    const int out = dec_w(j);
    t.dec[j - 1] = {nn::make_deconv2x2<T>(in, out, rng), nn::make_batchnorm<T>(out),
                    nn::make_layer<T>(LayerKind::ReLU), nn::make_conv3x3<T>(out, out, rng)};
    if (j > 1) {
      const int cin = dec_w(j) + encoder_width(j - 1);
      const int cout = cm_w(j - 1);
      t.conv[j - 2] = {nn::make_conv3x3<T>(cin, cout, rng), nn::make_batchnorm<T>(cout),
                       nn::make_layer<T>(LayerKind::ReLU)};
    }
  }
  t.has_map = has_map;
  if (has_map) t.map = nn::make_conv3x3<T>(dec_w(1), 1, rng);
  t.out = nn::make_layer<T>(LayerKind::LogSigmoid);
  return t;
}

template <typename T>
void record(std::vector<ShapeRecord>* walk, std::string module, std::string layer, const Tensor<T>& t) {
  if (walk) walk->push_back({std::move(module), std::move(layer), t.shape()});
}

}  // namespace

template <typename T>
Network<T> build_forknet(const ForkNetConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  auto enc = build_encoder<T>(config.depth, rng);
  std::vector<Track<T>> tracks;
  for (int n = 0; n < config.degree; ++n) tracks.push_back(build_track<T>(config.depth, 0, true, rng));
  return Network<T>(Variant::ForkNet, config, config.degree, std::move(enc), std::move(tracks));
}

template <typename T>
Network<T> build_unet(const ForkNetConfig& config, int classes) {
  validate(config);
  if (classes < 1) throw Error("invalid config: U-net needs at least one class");
  std::mt19937_64 rng(config.seed);
  auto enc = build_encoder<T>(config.depth, rng);
  std::vector<Track<T>> tracks;
  tracks.push_back(build_track<T>(config.depth, classes, false, rng));
  return Network<T>(Variant::UNet, config, classes, std::move(enc), std::move(tracks));
}

template <typename T>
std::vector<Tensor<T>> Network<T>::forward(const Tensor<T>& input, Mode mode, Tape<T>* tape,
                                           std::vector<ShapeRecord>* walk) {
  const int depth = config_.depth;
  if (input.c() != 1 || input.h() != config_.extent || input.w() != config_.extent) {
    throw Error("shape mismatch: network expects Bx1x" + std::to_string(config_.extent) + "x" +
                std::to_string(config_.extent) + " input, got " + input.shape().str());
  }
  Tape<T> local;
  Tape<T>& tp = tape ? *tape : local;
  tp.mode = mode;
  tp.enc.assign(depth, {});
  tp.tracks.assign(tracks_.size(), {});

  if (walk) walk->push_back({"Input", "", input.shape()});
  const Tensor<T>* x = &input;
  for (int i = 1; i <= depth; ++i) {
    auto& m = enc_[i - 1];
    auto& e = tp.enc[i - 1];
    const std::string name = "EncMod_" + std::to_string(i);
    e.in = *x;
    e.conv = nn::layer_forward(m.conv, e.in, mode);
    record(walk, name, "Convolution", e.conv);
    e.bn = nn::layer_forward(m.bn, e.conv, mode);
    e.relu = nn::layer_forward(m.relu, e.bn, mode);
    record(walk, name, "BN & ReLU", e.relu);
    e.pool = nn::layer_forward(m.pool, e.relu, mode);
    record(walk, name, "Pooling (Max)", e.pool);
    x = &e.pool;
  }

  std::vector<Tensor<T>> outputs;
  for (std::size_t n = 0; n < tracks_.size(); ++n) {
    auto& t = tracks_[n];
    auto& tt = tp.tracks[n];
    tt.dec.assign(depth, {});
    tt.conv.assign(depth - 1, {});
    const int tn = static_cast<int>(n) + 1;
    const bool fork = variant_ == Variant::ForkNet;
    auto mod = [&](const char* base, int j) {
      return std::string(base) + (fork ? "_" + idx(j, tn) : "_" + std::to_string(j));
    };

    const Tensor<T>* cur = &tp.enc[depth - 1].pool;
    for (int j = depth; j >= 1; --j) {
      auto& d = t.dec[j - 1];
      auto& dt = tt.dec[j - 1];
      dt.in = *cur;
      dt.deconv = nn::layer_forward(d.deconv, dt.in, mode);
      record(walk, mod("DecMod", j), "Deconvolution", dt.deconv);
      dt.bn = nn::layer_forward(d.bn, dt.deconv, mode);
      dt.relu = nn::layer_forward(d.relu, dt.bn, mode);
      record(walk, mod("DecMod", j), "BN & ReLU", dt.relu);
      dt.conv = nn::layer_forward(d.conv, dt.relu, mode);
      record(walk, mod("DecMod", j), "Convolution", dt.conv);
      if (j == 1) break;
      auto& c = t.conv[j - 2];
      auto& ct = tt.conv[j - 2];
      ct.in = nn::concat_forward(dt.conv, tp.enc[j - 2].pool);
      record(walk, mod("Concat", j - 1), "Concatenation", ct.in);
      ct.conv = nn::layer_forward(c.conv, ct.in, mode);
      record(walk, mod("ConvMod", j - 1), "Convolution", ct.conv);
      ct.bn = nn::layer_forward(c.bn, ct.conv, mode);
      ct.relu = nn::layer_forward(c.relu, ct.bn, mode);
      record(walk, mod("ConvMod", j - 1), "BN & ReLU", ct.relu);
      cur = &ct.relu;
    }
    const Tensor<T>& last = tt.dec[0].conv;
    if (t.has_map) {
      const std::string name = "Map_" + std::to_string(tn);
      tt.map = nn::layer_forward(t.map, last, mode);
      record(walk, name, "Convolution", tt.map);
      tt.out = nn::layer_forward(t.out, tt.map, mode);
      record(walk, name, "Sigmoid (Log)", tt.out);
    } else {
      tt.out = nn::layer_forward(t.out, last, mode);
      record(walk, "Output", "Sigmoid (Log)", tt.out);
    }
    outputs.push_back(tt.out);
  }
  return outputs;
}

template <typename T>
void Network<T>::backward(const Tape<T>& tp, const std::vector<Tensor<T>>& grad_outputs) {
  const int depth = config_.depth;
  if (grad_outputs.size() != tracks_.size() || tp.tracks.size() != tracks_.size() ||
      tp.enc.size() != static_cast<std::size_t>(depth)) {
    throw Error("missing forward context: tape does not match the network");
  }
  const Mode mode = tp.mode;
  std::vector<Tensor<T>> enc_grad(depth);
  auto accumulate = [](Tensor<T>& into, const Tensor<T>& g) {
    if (into.empty()) {
      into = g;
      return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) into.values()[i] += g.values()[i];
  };

  for (std::size_t n = 0; n < tracks_.size(); ++n) {
    auto& t = tracks_[n];
    const auto& tt = tp.tracks[n];
    Tensor<T> g;
    if (t.has_map) {
      g = nn::layer_backward(t.out, tt.map, tt.out, grad_outputs[n], mode);
      g = nn::layer_backward(t.map, tt.dec[0].conv, tt.map, g, mode);
    } else {
      g = nn::layer_backward(t.out, tt.dec[0].conv, tt.out, grad_outputs[n], mode);
    }
    for (int j = 1; j <= depth; ++j) {
      auto& d = t.dec[j - 1];
      const auto& dt = tt.dec[j - 1];
      g = nn::layer_backward(d.conv, dt.relu, dt.conv, g, mode);
      g = nn::layer_backward(d.relu, dt.bn, dt.relu, g, mode);
      g = nn::layer_backward(d.bn, dt.deconv, dt.bn, g, mode);
      g = nn::layer_backward(d.deconv, dt.in, dt.deconv, g, mode);
      if (j == depth) {
        accumulate(enc_grad[depth - 1], g);
        break;
      }
      auto& c = t.conv[j - 1];
      const auto& ct = tt.conv[j - 1];
      g = nn::layer_backward(c.relu, ct.bn, ct.relu, g, mode);
      g = nn::layer_backward(c.bn, ct.conv, ct.bn, g, mode);
      g = nn::layer_backward(c.conv, ct.in, ct.conv, g, mode);
      auto [g_dec, g_enc] = nn::concat_backward(g, t.dec[j].conv.out_channels);
      accumulate(enc_grad[j - 1], g_enc);
      g = std::move(g_dec);
    }
  }

  for (int i = depth; i >= 1; --i) {
    auto& m = enc_[i - 1];
    const auto& e = tp.enc[i - 1];
    Tensor<T> g = nn::layer_backward(m.pool, e.relu, e.pool, enc_grad[i - 1], mode);
    g = nn::layer_backward(m.relu, e.bn, e.relu, g, mode);
    g = nn::layer_backward(m.bn, e.conv, e.bn, g, mode);
    g = nn::layer_backward(m.conv, e.in, e.conv, g, mode);
    if (i > 1) accumulate(enc_grad[i - 2], g);
  }
}

template <typename T>
template <typename Fn>
void Network<T>::for_each_layer(Fn&& fn) {
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const std::string p = "enc" + std::to_string(i + 1) + ".";
    fn(p + "conv", enc_[i].conv);
    fn(p + "bn", enc_[i].bn);
  }
  for (std::size_t n = 0; n < tracks_.size(); ++n) {
    auto& t = tracks_[n];
    const std::string tp = "track" + std::to_string(n + 1) + ".";
    for (std::size_t j = t.dec.size(); j-- > 0;) {
      const std::string p = tp + "dec" + std::to_string(j + 1) + ".";
      fn(p + "deconv", t.dec[j].deconv);
      fn(p + "bn", t.dec[j].bn);
      fn(p + "conv", t.dec[j].conv);
      if (j >= 1) {
        const std::string q = tp + "convmod" + std::to_string(j) + ".";
        fn(q + "conv", t.conv[j - 1].conv);
        fn(q + "bn", t.conv[j - 1].bn);
      }
    }
    if (t.has_map) fn(tp + "map", t.map);
  }
}

template <typename T>
template <typename Fn>
void Network<T>::for_each_layer(Fn&& fn) const {
  const_cast<Network<T>*>(this)->for_each_layer(
      [&](const std::string& name, Layer<T>& l) { fn(name, static_cast<const Layer<T>&>(l)); });
}

template <typename T>
void Network<T>::zero_grad() {
  for_each_layer([](const std::string&, Layer<T>& l) { l.zero_grad(); });
}

template <typename T>
std::vector<nn::ParamRef<T>> Network<T>::parameters() {
  std::vector<nn::ParamRef<T>> out;
  for_each_layer([&](const std::string& name, Layer<T>& l) {
    out.push_back({name + ".weight", &l.weight, &l.grad_weight});
    out.push_back({name + ".bias", &l.bias, &l.grad_bias});
  });
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t total = 0;
  for_each_layer([&](const std::string&, const Layer<T>& l) { total += l.parameter_count(); });
  return total;
}

template <typename T>
std::size_t Network<T>::primitive_layer_count() const {
  const std::size_t d = static_cast<std::size_t>(config_.depth);
  // encoder: conv, bn, relu, pool; decoder: deconv, bn, relu, conv;
  // conv module: conv, bn, relu; concat; map conv (optional) + log-sigmoid.
  std::size_t per_track = 4 * d + 3 * (d - 1) + (d - 1) + 1;
  if (variant_ == Variant::ForkNet) per_track += 1;
  return 4 * d + per_track * tracks_.size();
}

template <typename T>
std::size_t Network<T>::module_count_per_track() const {
  const std::size_t d = static_cast<std::size_t>(config_.depth);
  // EncMod x D, DecMod x D, ConvMod x (D-1), Concat x (D-1), Map x 1.
  return d + d + (d - 1) + (d - 1) + (variant_ == Variant::ForkNet ? 1 : 0);
}

template <typename T>
nn::Checkpoint Network<T>::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.meta["variant"] = variant_ == Variant::ForkNet ? "forknet" : "unet";
  ck.meta["degree"] = std::to_string(config_.degree);
  ck.meta["depth"] = std::to_string(config_.depth);
  ck.meta["extent"] = std::to_string(config_.extent);
  ck.meta["classes"] = std::to_string(classes_);
  ck.meta["seed"] = std::to_string(config_.seed);
  ck.meta["output_space"] = config_.output_space == nn::PredictionSpace::Log ? "log" : "probability";
  for_each_layer([&](const std::string& name, const Layer<T>& l) {
    ck.tensors.push_back({name + ".weight", l.weight.template cast<float>()});
    ck.tensors.push_back({name + ".bias", l.bias.template cast<float>()});
    if (l.kind == LayerKind::BatchNorm) {
      Tensor<float> rm(1, l.out_channels, 1, 1), rv(1, l.out_channels, 1, 1);
      for (int c = 0; c < l.out_channels; ++c) {
        rm.values()[c] = static_cast<float>(l.running_mean[c]);
        rv.values()[c] = static_cast<float>(l.running_var[c]);
      }
      ck.tensors.push_back({name + ".running_mean", std::move(rm)});
      ck.tensors.push_back({name + ".running_var", std::move(rv)});
    }
  });
  return ck;
}

template <typename T>
void Network<T>::load_parameters(const nn::Checkpoint& ck) {
  std::size_t pos = 0;
  auto take = [&](const std::string& name, const Shape& shape) -> const Tensor<float>& {
    if (pos >= ck.tensors.size()) throw Error("checkpoint manifest too short at " + name);
    const auto& t = ck.tensors[pos++];
    if (t.name != name || !(t.value.shape() == shape)) {
      throw Error("checkpoint manifest mismatch: expected " + name + " " + shape.str() + ", found " + t.name + " " +
                  t.value.shape().str());
    }
    return t.value;
  };
  for_each_layer([&](const std::string& name, Layer<T>& l) {
    l.weight = take(name + ".weight", l.weight.shape()).template cast<T>();
    l.bias = take(name + ".bias", l.bias.shape()).template cast<T>();
    if (l.kind == LayerKind::BatchNorm) {
      const auto& rm = take(name + ".running_mean", {1, l.out_channels, 1, 1});
      const auto& rv = take(name + ".running_var", {1, l.out_channels, 1, 1});
      for (int c = 0; c < l.out_channels; ++c) {
        l.running_mean[c] = static_cast<T>(rm.values()[c]);
        l.running_var[c] = static_cast<T>(rv.values()[c]);
      }
    }
  });
  if (pos != ck.tensors.size()) throw Error("checkpoint manifest has unexpected trailing tensors");
}

Network<float> network_from_checkpoint(const nn::Checkpoint& ck) {
  auto get = [&](const std::string& key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw Error("checkpoint lacks meta key '" + key + "'");
    return it->second;
  };
  ForkNetConfig cfg;
  cfg.degree = std::stoi(get("degree"));
  cfg.depth = std::stoi(get("depth"));
  cfg.extent = std::stoi(get("extent"));
  cfg.seed = std::stoull(get("seed"));
  cfg.output_space = get("output_space") == "probability" ? nn::PredictionSpace::Probability : nn::PredictionSpace::Log;
  const std::string variant = get("variant");
  Network<float> net;
  if (variant == "forknet") net = build_forknet<float>(cfg);
  else if (variant == "unet") net = build_unet<float>(cfg, std::stoi(get("classes")));
  else throw Error("checkpoint has unknown variant '" + variant + "'");
  net.load_parameters(ck);
  return net;
}

template <typename T>
std::vector<nn::Layer<T>*> Network<T>::batchnorm_layers() {
  std::vector<nn::Layer<T>*> out;
  for_each_layer([&](const std::string&, nn::Layer<T>& l) {
    if (l.kind == LayerKind::BatchNorm) out.push_back(&l);
  });
  return out;
}

template class Network<float>;
template class Network<double>;
template Network<float> build_forknet<float>(const ForkNetConfig&);
template Network<double> build_forknet<double>(const ForkNetConfig&);
template Network<float> build_unet<float>(const ForkNetConfig&, int);
template Network<double> build_unet<double>(const ForkNetConfig&, int);

}  // namespace forktms::forknet
