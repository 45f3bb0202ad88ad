#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forktms/coil/coil.hpp"
#include "forktms/forknet/train.hpp"
#include "forktms/fusion/fusion.hpp"
#include "forktms/metrics/metrics.hpp"
#include "forktms/pipeline/config.hpp"
#include "forktms/solver/solver.hpp"

namespace forktms::pipeline {

// Failure inside a stage; what() carries the "[stage] " prefix.
struct StageError : Error {
  StageError(const std::string& stage, const std::string& message) : Error("[" + stage + "] " + message) {}
};

/// Writes the seeded phantom corpus (MRI + labels per volume).
void stage_phantom(const PipelineConfig& cfg);

/// Trains one view's network on corpus volumes 0..count-2.
forknet::TrainReport stage_train(const PipelineConfig& cfg, volume::Axis view);

/// Segments the held-out MRI with every configured view whose checkpoint
/// exists; returns the views written.
std::vector<volume::Axis> stage_segment(const PipelineConfig& cfg);

/// Fuses R^alpha, R^beta, R^gamma into R^psi. Refuses with "missing view"
/// unless all three exist.
fusion::AgreementStats stage_fuse(const PipelineConfig& cfg);

/// Solves |E| for a label volume (R^psi by default) and writes it as
/// fields/E_<name>.vol.
solver::SolveLog stage_simulate(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& labels = {},
                                const std::string& name = "psi");

/// Reads the ground truth, solves its field and compares against R^psi.
metrics::MetricsReport stage_evaluate(const PipelineConfig& cfg);

/// phantom -> train (x views) -> segment -> fuse -> simulate -> evaluate
metrics::MetricsReport run_pipeline(const PipelineConfig& cfg);

// Shared helpers.

coil::Coil make_coil(const PipelineConfig& cfg, const volume::LabelVolume& grid);

struct FieldSolution {
  coil::VectorField e;
  volume::ScalarVolume magnitude;
  solver::SolveLog log;
};

FieldSolution simulate_labels(const PipelineConfig& cfg, const volume::LabelVolume& labels);

/// Region used for MAE: roi_file if set, else voxels whose truth label is in
/// roi_labels.
metrics::Mask roi_mask(const PipelineConfig& cfg, const volume::LabelVolume& truth);

/// Reassigns a seeded fraction `rate` of tissue voxels to a different tissue.
/// Corrupted sets are nested: every voxel changed at rate r is also changed,
/// identically, at any rate above r.
volume::LabelVolume corrupt_labels(const volume::LabelVolume& labels, double rate, std::uint64_t seed);

}  // namespace forktms::pipeline
