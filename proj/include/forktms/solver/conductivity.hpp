#pragma once

#include <map>
#include <string>

#include "forktms/volume/volume.hpp"

namespace forktms::solver {

// S/m per voxel, element-constant in the FEM; 0 marks air.
using ConductivityVolume = volume::Volume<double>;

// Tissue IDs:
//   1 skin  2 muscle  3 fat  4 bone (cortical)  5 bone (cancellous)  6 dura
//   7 blood vessels  8 CSF  9 GM  10 WM  11 cerebellum  12 vitreous humor
//   13 mucous tissue
enum Tissue : int {
  kSkin = 1,
  kMuscle,
  kFat,
  kBoneCortical,
  kBoneCancellous,
  kDura,
  kBloodVessels,
  kCsf,
  kGreyMatter,
  kWhiteMatter,
  kCerebellum,
  kVitreousHumor,
  kMucousTissue,
};

const char* tissue_name(int id);

using ConductivityTable = std::map<int, double>;

/// Isotropic conductivities at 10 kHz for the 13 tissues.
const ConductivityTable& default_conductivity_table();

/// Voxelwise lookup; background maps to 0. Throws on an unmapped label.
ConductivityVolume assign_conductivity(const volume::LabelVolume& labels,
                                       const ConductivityTable& table = default_conductivity_table());

}  // namespace forktms::solver
