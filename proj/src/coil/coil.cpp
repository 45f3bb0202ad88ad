#include "forktms/coil/coil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "forktms/parallel.hpp"

namespace forktms::coil {
namespace {

constexpr double kPi = 3.14159265358979323846;

// One closed loop of `segments` chords, counter-clockwise about e1 x e2
// when sense = +1.
void add_loop(std::vector<Segment>& wire, const Vec3& c, const Vec3& e1, const Vec3& e2, double r, int segments,
              int sense) {
  auto point = [&](int k) {
    const double th = sense * 2.0 * kPi * static_cast<double>(k) / segments;
    return c + r * std::cos(th) * e1 + r * std::sin(th) * e2;
  };
  for (int k = 0; k < segments; ++k) wire.push_back({point(k), point(k + 1)});
}

double point_segment_distance(const Vec3& p, const Segment& s) {
  const Vec3 d = s.b - s.a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - s.a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (s.a + t * d));
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

Vec3 parse_vec(const std::string& key, const std::string& v) {
  const auto xs = parse_list(v);
  if (xs.size() != 3) throw Error("coil file: '" + key + "' needs three comma-separated values");
  return {xs[0], xs[1], xs[2]};
}

}  // namespace

Coil build_figure_eight(const CoilPose& pose, const CoilParams& params) {
  if (params.segments < 16) throw Error("segments too few: need >= 16 per turn, got " + std::to_string(params.segments));
  if (params.turns < 1) throw Error("coil needs at least one turn");
  if (!(params.inner_diameter > 0.0) || !(params.outer_diameter >= params.inner_diameter)) {
    throw Error("coil diameters must satisfy 0 < inner <= outer");
  }
  const double nn = norm(pose.normal);
  if (!(nn > 1e-12)) throw Error("degenerate pose: zero normal");
  const Vec3 n = pose.normal * (1.0 / nn);
  Vec3 h = pose.handle - dot(pose.handle, n) * n;
  if (!(norm(h) > 1e-12)) throw Error("degenerate pose: handle parallel to normal");
  h *= 1.0 / norm(h);
  const Vec3 u = cross(n, h);

  Coil coil;
  coil.pose = pose;
  coil.params = params;
  coil.wing_axis = u;
  coil.handle_axis = h;
  const double r_out = 0.5 * params.outer_diameter;
  const double r_in = 0.5 * params.inner_diameter;
  coil.wing_center[0] = pose.center + r_out * u;
  coil.wing_center[1] = pose.center - r_out * u;

  std::vector<double> radii;
  if (params.model == WingModel::SingleLoop || params.turns == 1) {
    radii.push_back(0.5 * (r_in + r_out));
  } else {
    for (int t = 0; t < params.turns; ++t) radii.push_back(r_in + (r_out - r_in) * t / (params.turns - 1));
  }
  // (h, u, n) is right-handed, so cos*h + sin*u runs counter-clockwise about n.
  for (double r : radii) add_loop(coil.wire, coil.wing_center[0], h, u, r, params.segments, +1);
  coil.wing_split = coil.wire.size();
  for (double r : radii) add_loop(coil.wire, coil.wing_center[1], h, u, r, params.segments, -1);
  return coil;
}

Coil build_loop(const Vec3& center, const Vec3& normal, double radius, int segments, double current) {
  if (segments < 16) throw Error("segments too few: need >= 16 per turn, got " + std::to_string(segments));
  const double nn = norm(normal);
  if (!(nn > 1e-12)) throw Error("degenerate pose: zero normal");
  const Vec3 n = normal * (1.0 / nn);
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 e1 = cross(helper, n);
  e1 *= 1.0 / norm(e1);
  const Vec3 e2 = cross(n, e1);
  Coil coil;
  coil.pose = {center, n, e1};
  coil.params.current = current;
  coil.params.segments = segments;
  coil.params.turns = 1;
  coil.params.outer_diameter = coil.params.inner_diameter = 2.0 * radius;
  coil.wing_center[0] = coil.wing_center[1] = center;
  coil.wing_axis = e2;
  coil.handle_axis = e1;
  add_loop(coil.wire, center, e1, e2, radius, segments, +1);
  coil.wing_split = coil.wire.size();
  return coil;
}

Coil wing_only(const Coil& coil, int wing) {
  if (wing != 0 && wing != 1) throw Error("wing index must be 0 or 1");
  Coil out = coil;
  if (wing == 0) {
    out.wire.assign(coil.wire.begin(), coil.wire.begin() + static_cast<std::ptrdiff_t>(coil.wing_split));
  } else {
    out.wire.assign(coil.wire.begin() + static_cast<std::ptrdiff_t>(coil.wing_split), coil.wire.end());
  }
  out.wing_split = out.wire.size();
  return out;
}

volume::ScalarVolume VectorField::magnitude() const {
  std::vector<float> m(size());
  for (std::size_t i = 0; i < size(); ++i) m[i] = static_cast<float>(std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]));
  return volume::ScalarVolume(dims, spacing, std::move(m));
}

Vec3 voxel_center(const GridSpec& g, int i, int j, int k) {
  return g.origin + Vec3{(i + 0.5) * g.spacing.sx * 1e-3, (j + 0.5) * g.spacing.sy * 1e-3, (k + 0.5) * g.spacing.sz * 1e-3};
}

Vec3 vector_potential_at(const Coil& coil, const Vec3& r, double guard) {
  Vec3 acc;
  for (const auto& s : coil.wire) {
    const Vec3 dl = s.b - s.a;
    const Vec3 mid = 0.5 * (s.a + s.b);
    const double dist = norm(r - mid);
    if (dist - 0.5 * norm(dl) <= guard && point_segment_distance(r, s) <= guard) {
      throw Error("singular segment distance: evaluation point within the wire guard radius");
    }
    acc += dl * (1.0 / dist);
  }
  return acc * (kMu0 * coil.params.current / (4.0 * kPi));
}

VectorField vector_potential(const Coil& coil, const GridSpec& grid, double guard) {
  if (guard < 0.0) {
    const double sx = grid.spacing.sx * 1e-3, sy = grid.spacing.sy * 1e-3, sz = grid.spacing.sz * 1e-3;
    guard = 0.5 * std::sqrt(sx * sx + sy * sy + sz * sz);
  }
  VectorField field(grid.dims, grid.spacing);
  const auto& d = grid.dims;
  parallel_for(0, d.nz, [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k)
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) {
          const std::size_t idx = static_cast<std::size_t>(i) + static_cast<std::size_t>(d.nx) * (j + static_cast<std::size_t>(d.ny) * k);
          field.set(idx, vector_potential_at(coil, voxel_center(grid, i, j, k), guard));
        }
  });
  return field;
}

CoilSetup parse_coil_file(const std::string& text) {
  CoilSetup s;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("coil file: malformed line '" + line + "'");
    auto trim = [](std::string v) {
      v.erase(0, v.find_first_not_of(" \t\r"));
      v.erase(v.find_last_not_of(" \t\r") + 1);
      return v;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "center") s.pose.center = parse_vec(key, value);
      else if (key == "normal") s.pose.normal = parse_vec(key, value);
      else if (key == "handle") s.pose.handle = parse_vec(key, value);
      else if (key == "turns") s.params.turns = std::stoi(value);
      else if (key == "segments") s.params.segments = std::stoi(value);
      else if (key == "current") s.params.current = std::stod(value);
      else if (key == "frequency") s.params.frequency = std::stod(value);
      else if (key == "outer_diameter") s.params.outer_diameter = std::stod(value);
      else if (key == "inner_diameter") s.params.inner_diameter = std::stod(value);
      else if (key == "model") {
        if (value == "spiral") s.params.model = WingModel::Spiral;
        else if (value == "single-loop") s.params.model = WingModel::SingleLoop;
        else throw Error("coil file: unknown model '" + value + "'");
      } else {
        throw Error("coil file: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw Error("coil file: bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw Error("coil file: bad value for '" + key + "'");
    }
  }
  return s;
}

CoilSetup load_coil_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: cannot open coil file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_coil_file(ss.str());
}

std::string format_coil_file(const CoilSetup& s) {
  std::ostringstream o;
  o.precision(17);
  auto vec = [&](const Vec3& v) { o << v.x << ',' << v.y << ',' << v.z << '\n'; };
  o << "center=";
  vec(s.pose.center);
  o << "normal=";
  vec(s.pose.normal);
  o << "handle=";
  vec(s.pose.handle);
  o << "turns=" << s.params.turns << '\n';
  o << "segments=" << s.params.segments << '\n';
  o << "current=" << s.params.current << '\n';
  o << "frequency=" << s.params.frequency << '\n';
  o << "outer_diameter=" << s.params.outer_diameter << '\n';
  o << "inner_diameter=" << s.params.inner_diameter << '\n';
  o << "model=" << (s.params.model == WingModel::Spiral ? "spiral" : "single-loop") << '\n';
  return o.str();
}

}  // namespace forktms::coil
