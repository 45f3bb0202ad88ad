#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forktms/coil/coil.hpp"
#include "forktms/forknet/train.hpp"
#include "forktms/fusion/fusion.hpp"
#include "forktms/volume/volume.hpp"

namespace forktms::pipeline {

struct ConfigError : Error {
  using Error::Error;
};

// One experiment record. Text form is `key = value` per line, `#` comments.
struct PipelineConfig {
  std::filesystem::path out = "forktms-out";
  std::string subject = "phantom";
  std::uint64_t seed = 1;

  // phantom corpus: volumes 0..count-2 train, the last one is held out
  int phantom_count = 20;
  int phantom_dims = 64;
  double phantom_noise = 0.005;

  forknet::Variant variant = forknet::Variant::ForkNet;
  int degree = 13;
  int depth = 4;
  int extent = 64;
  nn::PredictionSpace output_space = nn::PredictionSpace::Log;
  int epochs = 12;
  int batch = 2;
  double lr = 3e-3;
  forknet::LrSchedule lr_schedule = forknet::LrSchedule::Cosine;
  int precise_bn = 0;  // batches averaged into BN statistics after each epoch
  double split = 0.9;
  std::vector<volume::Axis> views = {volume::Axis::Axial, volume::Axis::Sagittal, volume::Axis::Coronal};
  bool background_rule = true;  // air exists in phantoms
  bool slice_bn = true;         // segment with per-slice BN statistics instead of running ones

  int fusion_window = 3;
  fusion::FuzzyPolicy fuzzy = fusion::FuzzyPolicy::Neighborhood;
  fusion::WindowShape window_shape = fusion::WindowShape::Cube;

  std::filesystem::path coil_file;  // empty: default pose above the head
  double coil_offset_mm = 6.0;      // default pose: gap above the top of the grid
  coil::CoilParams coil;

  double solver_tol = 1e-6;
  long solver_max_iter = -1;

  bool metrics_raw = false;
  double hotspot_fraction = 0.7;
  std::vector<int> roi_labels = {9};
  std::filesystem::path roi_file;

  int jobs = 0;
};

PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies one `key=value` override. Throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);
void apply_override(PipelineConfig& cfg, const std::string& assignment);
std::string format_config(const PipelineConfig& cfg);

/// Honours FORKTMS_OUT when set.
void apply_environment(PipelineConfig& cfg);

forknet::ForkNetConfig network_config(const PipelineConfig& cfg, volume::Axis view);

// Artifact layout under cfg.out.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path corpus_mri(int i) const;
  std::filesystem::path corpus_labels(int i) const;
  std::filesystem::path checkpoint(volume::Axis view) const;
  std::filesystem::path view_labels(volume::Axis view) const;
  std::filesystem::path fused() const;
  std::filesystem::path fusion_stats() const;
  std::filesystem::path field(const std::string& name) const;
  std::filesystem::path solve_log(const std::string& name) const;
  std::filesystem::path report_text() const;
  std::filesystem::path report_kv() const;
};

Layout layout(const PipelineConfig& cfg);

/// "alpha", "beta", "gamma" for axial, sagittal, coronal.
const char* view_symbol(volume::Axis view);

}  // namespace forktms::pipeline
