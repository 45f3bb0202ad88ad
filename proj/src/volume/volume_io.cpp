#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>

#include "forktms/volume/io.hpp"

namespace forktms::volume {
namespace {

std::mutex& observer_mutex() {
  static std::mutex m;
  return m;
}
std::function<void(const std::filesystem::path&)>& observer() {
  static std::function<void(const std::filesystem::path&)> fn;
  return fn;
}

void notify_read(const std::filesystem::path& p) {
  std::lock_guard lock(observer_mutex());
  if (observer()) observer()(p);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("missing file: cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary | std::ios::ate);
  if (!in) throw Error("missing file: cannot open " + p.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<char> buf(size);
  in.read(buf.data(), static_cast<std::streamsize>(size));
  if (!in) throw Error("short file: failed reading " + p.string());
  return buf;
}

void write_bytes(const std::filesystem::path& p, const char* data, std::size_t n) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw Error("failed writing " + p.string());
}

void write_header(const std::filesystem::path& payload, const Header& h) {
  const auto text = format_header(h);
  write_bytes(header_path_for(payload), text.data(), text.size());
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

std::filesystem::path header_path_for(const std::filesystem::path& payload) {
  auto p = payload;
  p += ".hdr";
  return p;
}

Header parse_header(const std::string& text) {
  Header h;
  bool have_dims = false, have_spacing = false, have_kind = false;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("malformed header line: '" + line + "'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "dims") {
      const auto parts = split_commas(value);
      if (parts.size() != 3) throw Error("dims mismatch: expected three extents");
      try {
        h.dims = {std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])};
      } catch (const std::exception&) {
        throw Error("dims mismatch: non-integer extent in '" + value + "'");
      }
      if (h.dims.nx < 1 || h.dims.ny < 1 || h.dims.nz < 1) throw Error("dims mismatch: extents must be >= 1");
      have_dims = true;
    } else if (key == "spacing") {
      const auto parts = split_commas(value);
      if (parts.size() != 3) throw Error("malformed spacing: expected three values");
      try {
        h.spacing = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
      } catch (const std::exception&) {
        throw Error("malformed spacing '" + value + "'");
      }
      have_spacing = true;
    } else if (key == "kind") {
      if (value == "scalar") h.kind = ElementKind::Scalar;
      else if (value == "label") h.kind = ElementKind::Label;
      else throw Error("unknown element kind '" + value + "'");
      have_kind = true;
    } else if (key == "order") {
      if (value != "little-endian,x-fastest") throw Error("unsupported order '" + value + "'");
    } else {
      throw Error("unknown header key '" + key + "'");
    }
  }
  if (!have_dims) throw Error("dims mismatch: header lacks dims");
  if (!have_spacing) throw Error("malformed header: lacks spacing");
  if (!have_kind) throw Error("unknown element kind: header lacks kind");
  return h;
}

std::string format_header(const Header& h) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "dims=" << h.dims.nx << ',' << h.dims.ny << ',' << h.dims.nz << '\n';
  ss << "spacing=" << h.spacing.sx << ',' << h.spacing.sy << ',' << h.spacing.sz << '\n';
  ss << "kind=" << (h.kind == ElementKind::Scalar ? "scalar" : "label") << '\n';
  ss << "order=little-endian,x-fastest\n";
  return ss.str();
}

AnyVolume load_volume(const std::filesystem::path& payload, const std::filesystem::path& header) {
  const Header h = parse_header(read_text(header));
  notify_read(payload);
  const auto bytes = read_bytes(payload);
  const std::size_t voxels = h.dims.count();
  const std::size_t element = h.kind == ElementKind::Scalar ? 4 : 1;
  if (bytes.size() != voxels * element) {
    throw Error("size mismatch: " + payload.string() + " holds " + std::to_string(bytes.size()) +
                " bytes, header implies " + std::to_string(voxels * element));
  }
  if (h.kind == ElementKind::Label) {
    std::vector<std::uint8_t> data(voxels);
    std::memcpy(data.data(), bytes.data(), voxels);
    LabelVolume v(h.dims, h.spacing, std::move(data));
    check_labels(v);
    return v;
  }
  std::vector<float> data(voxels);
  for (std::size_t i = 0; i < voxels; ++i) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes.data() + 4 * i, 4);
    raw = to_le(raw);
    std::memcpy(&data[i], &raw, 4);
  }
  return ScalarVolume(h.dims, h.spacing, std::move(data));
}

AnyVolume load_volume(const std::filesystem::path& payload) {
  return load_volume(payload, header_path_for(payload));
}

ScalarVolume load_scalar(const std::filesystem::path& payload) {
  auto v = load_volume(payload);
  if (auto* s = std::get_if<ScalarVolume>(&v)) return std::move(*s);
  throw Error("unknown element kind: expected scalar volume in " + payload.string());
}

LabelVolume load_label(const std::filesystem::path& payload) {
  auto v = load_volume(payload);
  if (auto* s = std::get_if<LabelVolume>(&v)) return std::move(*s);
  throw Error("unknown element kind: expected label volume in " + payload.string());
}

void save_volume(const std::filesystem::path& payload, const ScalarVolume& v) {
  std::vector<char> bytes(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t raw;
    std::memcpy(&raw, &v.data()[i], 4);
    raw = to_le(raw);
    std::memcpy(bytes.data() + 4 * i, &raw, 4);
  }
  write_bytes(payload, bytes.data(), bytes.size());
  write_header(payload, {v.dims(), v.spacing(), ElementKind::Scalar});
}

void save_volume(const std::filesystem::path& payload, const LabelVolume& v) {
  write_bytes(payload, reinterpret_cast<const char*>(v.data().data()), v.size());
  write_header(payload, {v.dims(), v.spacing(), ElementKind::Label});
}

void set_read_observer(std::function<void(const std::filesystem::path&)> fn) {
  std::lock_guard lock(observer_mutex());
  observer() = std::move(fn);
}

}  // namespace forktms::volume
