#include "forktms/pipeline/stages.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "forktms/nn/checkpoint.hpp"
#include "forktms/volume/io.hpp"
#include "forktms/volume/phantom.hpp"

namespace forktms::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto timed(const std::string& stage, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  auto log_time = [&] {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[%s] done in %.2f s\n", stage.c_str(), s);
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      log_time();
    } else {
      auto result = fn();
      log_time();
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void save(const fs::path& path, const auto& volume) {
  fs::create_directories(path.parent_path());
  volume::save_volume(path, volume);
}

int held_out(const PipelineConfig& cfg) {
  if (cfg.phantom_count < 2) throw ConfigError("phantom.count must be >= 2");
  return cfg.phantom_count - 1;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void stage_phantom(const PipelineConfig& cfg) {
  timed("phantom", [&] {
    const Layout paths = layout(cfg);
    volume::PhantomConfig pc;
    pc.noise = cfg.phantom_noise;
    const volume::Dims dims{cfg.phantom_dims, cfg.phantom_dims, cfg.phantom_dims};
    for (int i = 0; i < cfg.phantom_count; ++i) {
      const auto ph = volume::generate_phantom(cfg.seed * 1000 + i, dims, pc);
      save(paths.corpus_mri(i), ph.mri);
      save(paths.corpus_labels(i), ph.labels);
    }
    std::fprintf(stderr, "[phantom] %d volumes of %d^3 in %s\n", cfg.phantom_count, cfg.phantom_dims,
                 (paths.root / "corpus").string().c_str());
  });
}

forknet::TrainReport stage_train(const PipelineConfig& cfg, volume::Axis view) {
  const std::string stage = std::string("train:") + volume::axis_name(view);
  return timed(stage, [&] {
    const Layout paths = layout(cfg);
    std::vector<volume::ScalarVolume> mri;
    std::vector<volume::LabelVolume> labels;
    for (int i = 0; i < held_out(cfg); ++i) {
      mri.push_back(volume::load_scalar(paths.corpus_mri(i)));
      labels.push_back(volume::load_label(paths.corpus_labels(i)));
    }
    const auto dataset = forknet::make_slice_dataset(mri, labels, view);
    const auto ncfg = network_config(cfg, view);
    auto net = cfg.variant == forknet::Variant::ForkNet ? forknet::build_forknet<float>(ncfg)
                                                        : forknet::build_unet<float>(ncfg, cfg.degree);
    forknet::TrainSchedule sched;
    sched.epochs = cfg.epochs;
    sched.batch = cfg.batch;
    sched.lr = cfg.lr;
    sched.schedule = cfg.lr_schedule;
    sched.precise_bn_batches = cfg.precise_bn;
    sched.split = cfg.split;
    sched.seed = cfg.seed + 7919 * static_cast<std::uint64_t>(view);
    sched.space = cfg.output_space;
    sched.on_epoch = [&](int epoch, double loss, double val) {
      std::fprintf(stderr, "[%s] epoch %d loss %.6f val %.6f\n", stage.c_str(), epoch, loss, val);
    };
    auto report = forknet::train(net, dataset, sched);
    auto ckpt = net.to_checkpoint();
    ckpt.meta["view"] = volume::axis_name(view);
    ckpt.meta["epochs"] = std::to_string(cfg.epochs);
    fs::create_directories(paths.checkpoint(view).parent_path());
    nn::save_checkpoint(paths.checkpoint(view), ckpt);
    return report;
  });
}

std::vector<volume::Axis> stage_segment(const PipelineConfig& cfg) {
  return timed("segment", [&] {
    const Layout paths = layout(cfg);
    std::vector<volume::Axis> done;
    std::optional<volume::ScalarVolume> mri;
    for (auto view : cfg.views) {
      if (!fs::exists(paths.checkpoint(view))) {
        std::fprintf(stderr, "[segment] no %s checkpoint, skipping R^%s\n", volume::axis_name(view),
                     view_symbol(view));
        continue;
      }
      if (!mri) mri = volume::load_scalar(paths.corpus_mri(held_out(cfg)));
      auto net = forknet::network_from_checkpoint(nn::load_checkpoint(paths.checkpoint(view)));
      forknet::ArgmaxOptions opts;
      opts.background_rule = cfg.background_rule;
      save(paths.view_labels(view), forknet::segment_volume(net, *mri, view, opts, 8, cfg.slice_bn ? nn::Mode::Sample : nn::Mode::Infer));
      std::fprintf(stderr, "[segment] wrote R^%s\n", view_symbol(view));
      done.push_back(view);
    }
    if (done.empty()) throw Error("no checkpoint found for any configured view");
    return done;
  });
}

fusion::AgreementStats stage_fuse(const PipelineConfig& cfg) {
  return timed("fuse", [&] {
    const Layout paths = layout(cfg);
    std::vector<volume::LabelVolume> views;
    for (auto v : volume::kAllAxes) {
      if (!fs::exists(paths.view_labels(v)))
        throw Error(std::string("missing view: R^") + view_symbol(v) + " (" + paths.view_labels(v).string() + ")");
      views.push_back(volume::load_label(paths.view_labels(v)));
    }
    fusion::FusionOptions opts;
    opts.window = cfg.fusion_window;
    opts.fuzzy = cfg.fuzzy;
    opts.shape = cfg.window_shape;
    const auto result = fusion::fuse_views({views[0], views[1], views[2]}, opts);
    save(paths.fused(), result.fused);
    char text[256];
    std::snprintf(text, sizeof text, "all_three=%.17g\ntwo=%.17g\nfuzzy=%.17g\nvoxels=%zu\n", result.stats.all_three,
                  result.stats.two, result.stats.fuzzy, result.stats.voxels);
    write_text(paths.fusion_stats(), text);
    std::fprintf(stderr, "[fuse] agreement all %.3f%% two %.3f%% fuzzy %.3f%%\n", result.stats.all_three,
                 result.stats.two, result.stats.fuzzy);
    return result.stats;
  });
}

coil::Coil make_coil(const PipelineConfig& cfg, const volume::LabelVolume& grid) {
  if (!cfg.coil_file.empty()) {
    const auto setup = coil::load_coil_file(cfg.coil_file);
    return coil::build_figure_eight(setup.pose, setup.params);
  }
  const auto d = grid.dims();
  const auto s = grid.spacing();
  coil::CoilPose pose;
  pose.center = Vec3{d.nx * s.sx / 2, d.ny * s.sy / 2, d.nz * s.sz + cfg.coil_offset_mm} * 1e-3;
  pose.normal = {0.0, 0.0, 1.0};
  pose.handle = {0.0, 1.0, 0.0};
  return coil::build_figure_eight(pose, cfg.coil);
}

FieldSolution simulate_labels(const PipelineConfig& cfg, const volume::LabelVolume& labels) {
  const auto sigma = solver::assign_conductivity(labels);
  const auto coil = make_coil(cfg, labels);
  const coil::GridSpec grid{labels.dims(), labels.spacing(), {0.0, 0.0, 0.0}};
  const auto a0 = coil::vector_potential(coil, grid);
  solver::SolverOptions opts;
  opts.tol = cfg.solver_tol;
  opts.max_iter = cfg.solver_max_iter;
  const auto psi = solver::solve_potential(sigma, a0, coil.omega(), opts);
  FieldSolution out;
  out.e = solver::electric_field(psi, a0, coil.omega(), &sigma);
  out.magnitude = out.e.magnitude();
  out.log = psi.log;
  return out;
}

solver::SolveLog stage_simulate(const PipelineConfig& cfg, const std::optional<fs::path>& labels,
                                const std::string& name) {
  return timed("simulate", [&] {
    const Layout paths = layout(cfg);
    const fs::path src = labels ? *labels : paths.fused();
    if (!fs::exists(src)) throw Error("missing file: " + src.string());
    const auto sol = simulate_labels(cfg, volume::load_label(src));
    save(paths.field(name), sol.magnitude);
    write_text(paths.solve_log(name), sol.log.text());
    std::fprintf(stderr, "[simulate] E_%s: %ld iterations, relative residual %.3e\n", name.c_str(),
                 sol.log.iterations, sol.log.relative_residual);
    return sol.log;
  });
}

metrics::Mask roi_mask(const PipelineConfig& cfg, const volume::LabelVolume& truth) {
  if (!cfg.roi_file.empty()) {
    auto m = volume::load_label(cfg.roi_file);
    if (!m.same_grid(truth)) throw Error("dims mismatch: ROI file vs labels");
    return m;
  }
  metrics::Mask m(truth.dims(), truth.spacing(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (int id : cfg.roi_labels)
      if (truth.data()[i] == id) m.data()[i] = 1;
  return m;
}

metrics::MetricsReport stage_evaluate(const PipelineConfig& cfg) {
  return timed("evaluate", [&] {
    const Layout paths = layout(cfg);
    const auto truth = volume::load_label(paths.corpus_labels(held_out(cfg)));
    const auto test = volume::load_label(paths.fused());
    auto report = metrics::evaluate_labels(truth, test);
    report.subject = cfg.subject;
    report.variant = "psi";

    const auto ref = simulate_labels(cfg, truth);
    save(paths.field("truth"), ref.magnitude);
    write_text(paths.solve_log("truth"), ref.log.text());
    const auto e_psi = volume::load_scalar(paths.field("psi"));
    const auto roi = roi_mask(cfg, truth);
    report.mae = metrics::mae(ref.magnitude, e_psi, roi, cfg.metrics_raw);
    report.mae_hot = metrics::mae_hotspot(ref.magnitude, e_psi, roi, cfg.hotspot_fraction, cfg.metrics_raw);
    report.mae_self = metrics::mae(ref.magnitude, ref.magnitude, roi, cfg.metrics_raw);

    write_text(paths.report_text(), report.text());
    write_text(paths.report_kv(), report.key_values());
    std::fputs(report.text().c_str(), stdout);
    return report;
  });
}

metrics::MetricsReport run_pipeline(const PipelineConfig& cfg) {
  return timed("pipeline", [&] {
    stage_phantom(cfg);
    for (auto v : cfg.views) stage_train(cfg, v);
    stage_segment(cfg);
    stage_fuse(cfg);
    stage_simulate(cfg);
    return stage_evaluate(cfg);
  });
}

volume::LabelVolume corrupt_labels(const volume::LabelVolume& labels, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("corruption rate must lie in [0, 1]");
  volume::LabelVolume out = labels;
  const double scale = 1.0 / 18446744073709551616.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t l = out.data()[i];
    if (l == volume::kBackground) continue;
    const std::uint64_t h = splitmix(seed ^ splitmix(i));
    if (static_cast<double>(h) * scale >= rate) continue;
    const int shift = 1 + static_cast<int>(splitmix(h) % (volume::kTissueCount - 1));
    out.data()[i] = static_cast<std::uint8_t>((l - 1 + shift) % volume::kTissueCount + 1);
  }
  return out;
}

}  // namespace forktms::pipeline
