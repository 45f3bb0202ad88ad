#include <doctest.h>

#include <cmath>

#include "common/architecture.hpp"
#include "common/gradcheck.hpp"
#include "forktms/forknet/segment.hpp"
#include "forktms/forknet/train.hpp"
#include "forktms/metrics/metrics.hpp"
#include "forktms/volume/phantom.hpp"

using namespace forktms;
using namespace forktms::forknet;

namespace {

FloatSlice constant_map(float v, int w = 2, int h = 2) {
  FloatSlice s;
  s.width = w;
  s.height = h;
  s.data.assign(static_cast<std::size_t>(w) * h, v);
  return s;
}

ForkNetConfig small_config(int depth = 4, int extent = 64, int degree = 13) {
  ForkNetConfig c;
  c.depth = depth;
  c.extent = extent;
  c.degree = degree;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(validate(small_config(4, 60)), Error);
  CHECK_THROWS_AS(validate(small_config(1, 64)), Error);
  CHECK_THROWS_AS(validate(small_config(4, 64, 0)), Error);
  CHECK_NOTHROW(validate(small_config(6, 256)));
}

TEST_CASE("ForkNet walk matches the full-size table") {
  auto net = build_forknet<float>({});
  Tensor<float> x(1, 1, 256, 256, 0.5f);
  std::vector<ShapeRecord> walk;
  auto out = net.forward(x, Mode::Infer, nullptr, &walk);
  CHECK(testing::table_mismatches(walk, Variant::ForkNet, 13).empty());
  REQUIRE(out.size() == 13);
  CHECK(out[0].shape() == Shape{1, 1, 256, 256});
  CHECK(net.module_count_per_track() == 23);
  CHECK(net.primitive_layer_count() > net.module_count_per_track());

  bool saw_bottleneck = false, saw_enc1 = false, saw_dec1 = false;
  for (auto& r : walk) {
    if (r.module == "EncMod_6" && r.layer == "Pooling (Max)") saw_bottleneck = r.shape == Shape{1, 256, 4, 4};
    if (r.module == "EncMod_1" && r.layer == "Pooling (Max)") saw_enc1 = r.shape == Shape{1, 8, 128, 128};
    if (r.module == "DecMod_{1,7}" && r.layer == "Convolution") saw_dec1 = r.shape == Shape{1, 4, 256, 256};
  }
  CHECK(saw_bottleneck);
  CHECK(saw_enc1);
  CHECK(saw_dec1);
}

TEST_CASE("U-net walk matches its table") {
  auto net = build_unet<float>({});
  Tensor<float> x(1, 1, 256, 256, 0.5f);
  std::vector<ShapeRecord> walk;
  auto out = net.forward(x, Mode::Infer, nullptr, &walk);
  CHECK(testing::table_mismatches(walk, Variant::UNet, 1).empty());
  REQUIRE(out.size() == 1);
  CHECK(out[0].shape() == Shape{1, 13, 256, 256});
}

TEST_CASE("U-net parameter count equals the table manifest") {
  auto conv = [](std::size_t in, std::size_t out) { return out * in * 9 + out; };
  auto deconv = [](std::size_t in, std::size_t out) { return in * out * 4 + out; };
  auto bn = [](std::size_t c) { return 2 * c; };
  std::size_t expect = 0;
  std::size_t in = 1;
  for (int i = 1; i <= 6; ++i) {
    const std::size_t w = std::size_t{1} << (i + 2);
    expect += conv(in, w) + bn(w);
    in = w;
  }
  for (int j = 6; j >= 1; --j) {
    const std::size_t d = j == 1 ? 13 : std::size_t{1} << (j + 1);
    expect += deconv(in, d) + bn(d) + conv(d, d);
    if (j == 1) break;
    const std::size_t cat = std::size_t{1} << (j + 2);  // Concat_{j-1} width 2^(j+2)
    const std::size_t c = j - 1 == 1 ? 13 : std::size_t{1} << (j + 1);
    expect += conv(cat, c) + bn(c);
    in = c;
  }
  CHECK(build_unet<float>({}).parameter_count() == expect);
}

TEST_CASE("single-track ForkNet shares the U-net's inner levels") {
  auto fork = build_forknet<float>(small_config(4, 64, 1));
  auto unet = build_unet<float>(small_config(4, 64, 1), 13);
  CHECK(fork.output_count() == 1);
  Tensor<float> x(1, 1, 64, 64, 0.25f);
  std::vector<ShapeRecord> wf, wu;
  fork.forward(x, Mode::Infer, nullptr, &wf);
  unet.forward(x, Mode::Infer, nullptr, &wu);
  auto channels_at = [](const std::vector<ShapeRecord>& w, const std::string& prefix, int j) {
    std::vector<int> c;
    for (auto& r : w) {
      auto m = testing::split_module(r.module);
      if (m.base == prefix && m.j == j) c.push_back(r.shape.c);
    }
    return c;
  };
  for (int j = 2; j <= 4; ++j) CHECK(channels_at(wf, "DecMod", j) == channels_at(wu, "DecMod", j));
  CHECK(channels_at(wf, "ConvMod", 2) == channels_at(wu, "ConvMod", 2));
}

TEST_CASE("every track reads the same encoder pass") {
  auto net = build_forknet<float>(small_config(3, 32, 4));
  Tensor<float> x(2, 1, 32, 32);
  for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] = static_cast<float>(i % 17) / 17.0f;
  Tape<float> tape;
  net.forward(x, Mode::Train, &tape);
  REQUIRE(tape.tracks.size() == 4);
  for (auto& t : tape.tracks) CHECK(t.dec[2].in.values() == tape.enc[2].pool.values());
}

TEST_CASE("zeroed map layers give one half everywhere") {
  auto net = build_forknet<float>(small_config(2, 16, 3));
  for (auto& t : net.tracks()) {
    t.map.weight.fill(0.0f);
    t.map.bias.fill(0.0f);
  }
  FloatSlice mri = constant_map(0.3f, 16, 16);
  auto maps = segment_slice(net, mri);
  REQUIRE(maps.size() == 3);
  for (auto& m : maps) {
    for (float v : m.data) CHECK(v == doctest::Approx(0.5f));
  }
}

TEST_CASE("argmax labels") {
  std::vector<FloatSlice> maps = {constant_map(0.2f), constant_map(0.9f), constant_map(0.1f)};
  CHECK(argmax_labels(maps).data == std::vector<std::uint8_t>(4, 2));

  std::vector<FloatSlice> tied = {constant_map(0.4f), constant_map(0.4f)};
  CHECK(argmax_labels(tied).data == std::vector<std::uint8_t>(4, 1));

  ArgmaxOptions bg;
  bg.background_rule = true;
  CHECK(argmax_labels(tied, bg).data == std::vector<std::uint8_t>(4, 0));
  CHECK(argmax_labels(maps, bg).data == std::vector<std::uint8_t>(4, 2));
  CHECK_THROWS_AS(argmax_labels({}), Error);
}

TEST_CASE("argmax is invariant under increasing transforms") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<FloatSlice> maps(5, constant_map(0.0f, 6, 5));
  for (auto& m : maps) {
    for (auto& v : m.data) v = u(rng);
  }
  auto base = argmax_labels(maps);
  for (auto& m : maps) {
    for (auto& v : m.data) v = std::exp(3.0f * v) - 2.0f;
  }
  CHECK(argmax_labels(maps).data == base.data);
}

TEST_CASE("end-to-end gradient of the reduced net") {
  auto probes = testing::end_to_end_gradient();
  double worst = 0.0;
  std::string where;
  for (auto& p : probes) {
    if (p.error > worst) worst = p.error, where = p.parameter;
  }
  CAPTURE(where);
  CHECK(worst < 1e-4);
}

TEST_CASE("split is deterministic") {
  auto [a, b] = split_dataset(100, 0.9, 17);
  auto [c, d] = split_dataset(100, 0.9, 17);
  CHECK(a == c);
  CHECK(b == d);
  CHECK(a.size() == 90);
  CHECK(b.size() == 10);
  auto [e, f] = split_dataset(100, 0.9, 18);
  CHECK(a != e);
}

TEST_CASE("training shape errors") {
  auto net = build_forknet<float>(small_config(2, 16, 2));
  CHECK_THROWS_AS(train(net, {}, {}), Error);
  std::vector<TrainingSample> ds(1);
  ds[0].image = constant_map(0.1f, 8, 8);
  ds[0].labels.width = 8;
  ds[0].labels.height = 8;
  ds[0].labels.data.assign(64, 1);
  CHECK_THROWS_AS(train(net, ds, {}), Error);
}

TEST_CASE("overfits a single phantom slice") {
  auto p = volume::generate_phantom(5, {64, 64, 64});
  auto all = make_slice_dataset({p.mri}, {p.labels}, volume::Axis::Axial);
  std::vector<TrainingSample> one = {all[32]};
  auto net = build_forknet<float>(small_config());
  TrainSchedule s;
  s.epochs = 200;
  s.batch = 1;
  s.lr = 1e-2;
  s.split = 1.0;
  s.seed = 1;
  train(net, one, s);

  ArgmaxOptions bg;
  bg.background_rule = true;
  auto labels = argmax_labels(segment_slice(net, one[0].image), bg);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.data.size(); ++i) hit += labels.data[i] == one[0].labels.data[i];
  CHECK(static_cast<double>(hit) / labels.data.size() >= 0.95);
}

TEST_CASE("corpus loss falls over the first 50 steps and is reproducible") {
  std::vector<volume::ScalarVolume> mri;
  std::vector<volume::LabelVolume> labels;
  for (int i = 0; i < 2; ++i) {
    auto p = volume::generate_phantom(100 + i, {32, 32, 32});
    mri.push_back(p.mri);
    labels.push_back(p.labels);
  }
  auto ds = make_slice_dataset(mri, labels, volume::Axis::Axial);
  TrainSchedule s;
  s.epochs = 2;
  s.lr = 3e-3;
  s.seed = 9;
  auto net = build_forknet<float>(small_config(3, 32));
  auto report = train(net, ds, s);
  REQUIRE(report.step_loss.size() >= 50);
  CHECK(report.step_loss[49] < report.step_loss[0]);
  CHECK(report.epoch_loss.size() == 2);

  auto again = build_forknet<float>(small_config(3, 32));
  CHECK(train(again, ds, s).step_loss == report.step_loss);
}

TEST_CASE("checkpoint restores an identical network") {
  auto net = build_forknet<float>(small_config(2, 16, 3));
  auto copy = network_from_checkpoint(net.to_checkpoint());
  CHECK(copy.parameter_count() == net.parameter_count());
  Tensor<float> x(1, 1, 16, 16, 0.7f);
  auto a = net.forward(x, Mode::Infer);
  auto b = copy.forward(x, Mode::Infer);
  for (std::size_t n = 0; n < a.size(); ++n) CHECK(a[n].values() == b[n].values());
}
