#include "forktms/solver/conductivity.hpp"

#include <string>

namespace forktms::solver {

const char* tissue_name(int id) {
  switch (id) {
    case 0: return "background";
    case kSkin: return "skin";
    case kMuscle: return "muscle";
    case kFat: return "fat";
    case kBoneCortical: return "bone (cortical)";
    case kBoneCancellous: return "bone (cancellous)";
    case kDura: return "dura";
    case kBloodVessels: return "blood vessels";
    case kCsf: return "CSF";
    case kGreyMatter: return "GM";
    case kWhiteMatter: return "WM";
    case kCerebellum: return "cerebellum";
    case kVitreousHumor: return "vitreous humor";
    case kMucousTissue: return "mucous tissue";
    default: return "unknown";
  }
}

const ConductivityTable& default_conductivity_table() {
  static const ConductivityTable table = {
      {kSkin, 0.10},        {kMuscle, 0.34},        {kFat, 0.04},         {kBoneCortical, 0.02},
      {kBoneCancellous, 0.08}, {kDura, 0.5},        {kBloodVessels, 0.70}, {kCsf, 2.00},
      {kGreyMatter, 0.10},  {kWhiteMatter, 0.07},   {kCerebellum, 0.13},  {kVitreousHumor, 1.50},
      {kMucousTissue, 0.07},
  };
  return table;
}

ConductivityVolume assign_conductivity(const volume::LabelVolume& labels, const ConductivityTable& table) {
  double lut[256];
  bool known[256] = {};
  lut[0] = 0.0;
  known[0] = true;
  for (const auto& [id, s] : table) {
    if (id < 0 || id > 255) continue;
    if (!(s >= 0.0)) throw Error("invalid conductivity for label " + std::to_string(id));
    lut[id] = s;
    known[id] = true;
  }
  ConductivityVolume out(labels.dims(), labels.spacing(), 0.0);
  const auto& src = labels.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!known[src[i]]) throw Error("unmapped label: " + std::to_string(int(src[i])));
    dst[i] = lut[src[i]];
  }
  return out;
}

}  // namespace forktms::solver
