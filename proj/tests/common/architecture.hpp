#pragma once

// Expected per-row output sizes of the full-size networks (input 2^8, six
// levels), written out from closed-form size formulas.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "forktms/forknet/network.hpp"

namespace forktms::testing {

inline int pow2(int e) { return 1 << e; }

struct ModuleName {
  std::string base;
  int j = 0;
  int n = 0;
};

inline ModuleName split_module(const std::string& m) {
  ModuleName out;
  const auto us = m.find('_');
  out.base = m.substr(0, us);
  if (us == std::string::npos) return out;
  std::string rest = m.substr(us + 1);
  if (!rest.empty() && rest.front() == '{') {
    std::sscanf(rest.c_str(), "{%d,%d}", &out.j, &out.n);
  } else {
    out.j = std::stoi(rest);
  }
  return out;
}

// Channels x side for one walker row; {-1, -1} if the row is unknown.
inline std::pair<int, int> table_size(forknet::Variant variant, const ModuleName& m, const std::string& layer) {
  const bool unet = variant == forknet::Variant::UNet;
  const int j = m.j;
  if (m.base == "Input") return {1, pow2(8)};
  if (m.base == "EncMod") {
    if (layer == "Pooling (Max)") return {pow2(j + 2), pow2(8 - j)};
    return {pow2(j + 2), pow2(9 - j)};
  }
  if (m.base == "DecMod") return {unet && j == 1 ? 13 : pow2(j + 1), pow2(9 - j)};
  if (m.base == "ConvMod") return {unet && j == 1 ? 13 : pow2(j + 2), pow2(8 - j)};
  if (m.base == "Concat") return {pow2(j + 3), pow2(8 - j)};
  if (m.base == "Map") return {1, pow2(8)};
  if (m.base == "Output") return {13, pow2(8)};
  return {-1, -1};
}

// Rows of the walk that disagree with the table, plus a count check: every
// module of every track must appear.
inline std::vector<std::string> table_mismatches(const std::vector<forknet::ShapeRecord>& walk,
                                                 forknet::Variant variant, int tracks) {
  std::vector<std::string> bad;
  std::map<std::string, int> modules;
  for (const auto& r : walk) {
    const auto m = split_module(r.module);
    const auto [c, side] = table_size(variant, m, r.layer);
    if (r.shape.c != c || r.shape.h != side || r.shape.w != side || r.shape.n != 1) {
      bad.push_back(r.module + " " + r.layer + ": got " + r.shape.str() + ", table " + std::to_string(c) + "x" +
                    std::to_string(side) + "x" + std::to_string(side));
    }
    ++modules[m.base];
  }
  const bool fork = variant == forknet::Variant::ForkNet;
  const std::map<std::string, int> expect = {
      {"Input", 1},
      {"EncMod", 6 * 3},
      {"DecMod", 6 * 3 * tracks},
      {"ConvMod", 5 * 2 * tracks},
      {"Concat", 5 * tracks},
      {"Map", fork ? 2 * tracks : 0},
      {"Output", fork ? 0 : 1},
  };
  for (const auto& [name, count] : expect) {
    const int got = modules.count(name) ? modules.at(name) : 0;
    if (got != count) bad.push_back(name + ": " + std::to_string(got) + " rows, expected " + std::to_string(count));
  }
  return bad;
}

}  // namespace forktms::testing
