#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "forktms/pipeline/stages.hpp"
#include "forktms/volume/io.hpp"
#include "forktms/volume/phantom.hpp"

using namespace forktms;
using namespace forktms::pipeline;
namespace fs = std::filesystem;

namespace {

PipelineConfig tiny(const std::string& name) {
  PipelineConfig c;
  c.out = fs::temp_directory_path() / ("forktms_test_pipeline_" + name);
  fs::remove_all(c.out);
  c.phantom_count = 3;
  c.phantom_dims = 32;
  c.depth = 2;
  c.extent = 32;
  c.degree = 13;
  c.epochs = 1;
  c.lr = 3e-3;
  c.coil.segments = 32;
  c.coil.turns = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FORKTMS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text and overrides") {
  auto c = parse_config("# experiment\nseed = 7\nviews = axial, coronal\nfusion.fuzzy = axial-priority\n");
  CHECK(c.seed == 7);
  CHECK(c.views.size() == 2);
  CHECK(c.fuzzy == fusion::FuzzyPolicy::AxialPriority);
  apply_override(c, "epochs=12");
  apply_override(c, "lr_schedule = cosine");
  CHECK(c.epochs == 12);
  CHECK(c.lr_schedule == forknet::LrSchedule::Cosine);
  auto again = parse_config(format_config(c));
  CHECK(format_config(again) == format_config(c));
  CHECK_THROWS_AS(apply_override(c, "colour=red"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "epochs=many"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "epochs"), ConfigError);
  CHECK_THROWS_AS(parse_config("variant = resnet\n"), ConfigError);
  CHECK(network_config(c, volume::Axis::Sagittal).seed != network_config(c, volume::Axis::Axial).seed);
}

TEST_CASE("environment overrides the output directory") {
  PipelineConfig c;
  setenv("FORKTMS_OUT", "/tmp/elsewhere", 1);
  apply_environment(c);
  unsetenv("FORKTMS_OUT");
  CHECK(c.out == "/tmp/elsewhere");
}

TEST_CASE("label corruption is nested and seeded") {
  auto p = volume::generate_phantom(1, {32, 32, 32});
  auto c0 = corrupt_labels(p.labels, 0.0, 5);
  CHECK(c0.data() == p.labels.data());
  auto c5 = corrupt_labels(p.labels, 0.05, 5);
  auto c20 = corrupt_labels(p.labels, 0.20, 5);
  CHECK(corrupt_labels(p.labels, 0.05, 5).data() == c5.data());
  std::size_t tissue = 0, changed5 = 0, changed20 = 0;
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    const auto t = p.labels.data()[i];
    if (t == 0) {
      CHECK(c20.data()[i] == 0);
      continue;
    }
    ++tissue;
    if (c5.data()[i] != t) {
      ++changed5;
      CHECK(c20.data()[i] == c5.data()[i]);
    }
    changed20 += c20.data()[i] != t;
  }
  CHECK(static_cast<double>(changed5) / tissue == doctest::Approx(0.05).epsilon(0.1));
  CHECK(static_cast<double>(changed20) / tissue == doctest::Approx(0.20).epsilon(0.1));
  CHECK_THROWS_AS(corrupt_labels(p.labels, 1.5, 5), Error);
}

TEST_CASE("staged contract, leakage audit and determinism") {
  auto cfg = tiny("staged");
  const Layout paths = layout(cfg);
  stage_phantom(cfg);
  for (int i = 0; i < 3; ++i) CHECK(fs::exists(paths.corpus_labels(i)));

  SUBCASE("axial only, then fusion refuses") {
    stage_train(cfg, volume::Axis::Axial);
    auto views = stage_segment(cfg);
    REQUIRE(views.size() == 1);
    CHECK(fs::exists(paths.view_labels(volume::Axis::Axial)));
    CHECK_FALSE(fs::exists(paths.view_labels(volume::Axis::Sagittal)));
    CHECK_THROWS_WITH_AS(stage_fuse(cfg), doctest::Contains("missing view"), StageError);
  }

  SUBCASE("identical views fuse to full agreement") {
    auto truth = volume::load_label(paths.corpus_labels(2));
    fs::create_directories(paths.view_labels(volume::Axis::Axial).parent_path());
    for (auto v : volume::kAllAxes) volume::save_volume(paths.view_labels(v), truth);
    auto s = stage_fuse(cfg);
    CHECK(s.all_three == 100.0);
    CHECK(s.two == 0.0);
    CHECK(s.fuzzy == 0.0);
    CHECK(volume::load_label(paths.fused()).data() == truth.data());
  }

  SUBCASE("segment, fuse and simulate never read ground truth") {
    for (auto v : volume::kAllAxes) stage_train(cfg, v);
    std::vector<fs::path> reads;
    volume::set_read_observer([&](const fs::path& p) { reads.push_back(p); });
    stage_segment(cfg);
    stage_fuse(cfg);
    stage_simulate(cfg);
    volume::set_read_observer({});
    CHECK(!reads.empty());
    for (const auto& p : reads) {
      CAPTURE(p.string());
      CHECK(p.filename().string().rfind("labels_", 0) != 0);
    }

    const std::string fused = slurp(paths.fused());
    const std::string field = slurp(paths.field("psi"));
    stage_segment(cfg);
    stage_fuse(cfg);
    stage_simulate(cfg);
    CHECK(slurp(paths.fused()) == fused);
    CHECK(slurp(paths.field("psi")) == field);

    auto report = stage_evaluate(cfg);
    CHECK(report.tissues.size() == 13);
    for (auto& t : report.tissues) CHECK(t.truth_voxels > 0);
    CHECK(report.mae >= 0.0);
    CHECK(report.mae_hot >= 0.0);
    CHECK(report.mae_self == 0.0);
    CHECK(fs::exists(paths.report_kv()));
  }
}

TEST_CASE("training is reproducible") {
  auto cfg = tiny("repro");
  stage_phantom(cfg);
  stage_train(cfg, volume::Axis::Coronal);
  const auto first = slurp(layout(cfg).checkpoint(volume::Axis::Coronal));
  stage_phantom(cfg);
  stage_train(cfg, volume::Axis::Coronal);
  CHECK(slurp(layout(cfg).checkpoint(volume::Axis::Coronal)) == first);
}

TEST_CASE("cli exit codes") {
  auto cfg = tiny("cli");
  const std::string out = "--out " + cfg.out.string() + " ";
  CHECK(run_cli(out + "config") == 0);
  CHECK(run_cli(out + "--set colour=red config") == 1);
  CHECK(run_cli(out + "--config /nonexistent/experiment.cfg config") == 1);
  CHECK(run_cli(out + "no-such-stage") == 1);
  CHECK(run_cli(out + "fuse") == 2);
  CHECK(run_cli(out + "evaluate") == 2);
}
