// forktms: phantom -> train -> segment -> fuse -> simulate -> evaluate.
//
//   forktms [--config FILE] [--set key=value ...] [--jobs N] [--out DIR] <stage> [stage options]
//
// Exit status: 0 success, 1 configuration error, 2 stage failure.

#include <CLI11.hpp>
#include <cstdio>
#include <optional>

#include "forktms/parallel.hpp"
#include "forktms/pipeline/stages.hpp"
#include "forktms/simd/dispatch.hpp"

namespace fp = forktms::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Three-view head segmentation and TMS field dosimetry"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = -1;
  std::string out_dir;
  app.add_option("--config", config_path, "key = value experiment file");
  app.add_option("--set", overrides, "override one config key (key=value)")->take_all();
  app.add_option("--jobs", jobs, "cap on worker threads (0 = all cores)");
  app.add_option("--out", out_dir, "output directory");

  auto* phantom = app.add_subcommand("phantom", "write the seeded phantom corpus");
  auto* train = app.add_subcommand("train", "train one network per view");
  std::vector<std::string> train_views;
  train->add_option("--view", train_views, "axial, sagittal, coronal (default: config views)");
  auto* segment = app.add_subcommand("segment", "segment the held-out MRI with each available view");
  auto* fuse = app.add_subcommand("fuse", "fuse R^alpha, R^beta, R^gamma into R^psi");
  auto* simulate = app.add_subcommand("simulate", "solve |E| for a label volume");
  std::string sim_labels;
  std::string sim_name = "psi";
  simulate->add_option("--labels", sim_labels, "label volume (default: R^psi)");
  simulate->add_option("--name", sim_name, "output field name");
  auto* evaluate = app.add_subcommand("evaluate", "Dice, Hausdorff and MAE against the ground truth");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  auto* show = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  fp::PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = fp::load_config(config_path);
    fp::apply_environment(cfg);
    for (const auto& o : overrides) fp::apply_override(cfg, o);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (jobs >= 0) cfg.jobs = jobs;
    if (!train_views.empty()) {
      cfg.views.clear();
      for (const auto& v : train_views) cfg.views.push_back(forktms::volume::parse_axis(v));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }
  forktms::max_jobs() = cfg.jobs;
  std::fprintf(stderr, "simd %s, jobs %d\n", std::string(forktms::simd::to_string(forktms::simd::active_level())).c_str(),
               forktms::effective_jobs());

  try {
    if (phantom->parsed()) fp::stage_phantom(cfg);
    else if (train->parsed())
      for (auto v : cfg.views) fp::stage_train(cfg, v);
    else if (segment->parsed()) fp::stage_segment(cfg);
    else if (fuse->parsed()) fp::stage_fuse(cfg);
    else if (simulate->parsed())
      fp::stage_simulate(cfg, sim_labels.empty() ? std::nullopt : std::optional<std::filesystem::path>(sim_labels),
                         sim_name);
    else if (evaluate->parsed()) fp::stage_evaluate(cfg);
    else if (pipeline->parsed()) fp::run_pipeline(cfg);
    else if (show->parsed()) std::fputs(fp::format_config(cfg).c_str(), stdout);
  } catch (const fp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  return 0;
}
