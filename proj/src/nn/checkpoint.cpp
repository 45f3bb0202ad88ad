#include "forktms/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace forktms::nn {
namespace {

constexpr const char* kMagic = "forktms-checkpoint 1";

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << kMagic << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw Error("checkpoint meta entries must be single-token keys and single-line values");
    }
    out << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& t : ckpt.tensors) {
    const auto& s = t.value.shape();
    out << "tensor " << t.name << ' ' << s.n << ' ' << s.c << ' ' << s.h << ' ' << s.w << '\n';
  }
  out << "payload\n";
  for (const auto& t : ckpt.tensors) {
    for (float f : t.value.values()) {
      std::uint32_t raw;
      std::memcpy(&raw, &f, 4);
      raw = to_le(raw);
      out.write(reinterpret_cast<const char*>(&raw), 4);
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw Error("not a checkpoint: " + path.string());
  Checkpoint ckpt;
  bool payload = false;
  while (std::getline(in, line)) {
    if (line == "payload") {
      payload = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (tag == "tensor") {
      NamedTensor t;
      Shape s;
      if (!(ls >> t.name >> s.n >> s.c >> s.h >> s.w)) throw Error("malformed checkpoint manifest line: " + line);
      t.value = Tensor<float>(s);
      ckpt.tensors.push_back(std::move(t));
    } else {
      throw Error("malformed checkpoint manifest line: " + line);
    }
  }
  if (!payload) throw Error("checkpoint lacks payload section: " + path.string());
  for (auto& t : ckpt.tensors) {
    for (float& f : t.value.values()) {
      std::uint32_t raw;
      if (!in.read(reinterpret_cast<char*>(&raw), 4)) throw Error("short file: checkpoint payload truncated");
      raw = to_le(raw);
      std::memcpy(&f, &raw, 4);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error("size mismatch: trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace forktms::nn
