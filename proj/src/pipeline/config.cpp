#include "forktms/pipeline/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace forktms::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad value for " + key + ": '" + v + "'");
}

std::string axis_list(const std::vector<volume::Axis>& views) {
  std::string s;
  for (auto v : views) s += (s.empty() ? "" : ",") + std::string(volume::axis_name(v));
  return s;
}

}  // namespace

void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
  const std::string& v = value;
  try {
    if (key == "out") c.out = v;
    else if (key == "subject") c.subject = v;
    else if (key == "seed") c.seed = number<std::uint64_t>(key, v);
    else if (key == "phantom.count") c.phantom_count = number<int>(key, v);
    else if (key == "phantom.dims") c.phantom_dims = number<int>(key, v);
    else if (key == "phantom.noise") c.phantom_noise = number<double>(key, v);
    else if (key == "variant") {
      if (v == "forknet") c.variant = forknet::Variant::ForkNet;
      else if (v == "unet") c.variant = forknet::Variant::UNet;
      else throw ConfigError("bad value for variant: '" + v + "' (forknet|unet)");
    } else if (key == "degree") c.degree = number<int>(key, v);
    else if (key == "depth") c.depth = number<int>(key, v);
    else if (key == "extent") c.extent = number<int>(key, v);
    else if (key == "output_space") {
      if (v == "log") c.output_space = nn::PredictionSpace::Log;
      else if (v == "probability") c.output_space = nn::PredictionSpace::Probability;
      else throw ConfigError("bad value for output_space: '" + v + "' (log|probability)");
    } else if (key == "epochs") c.epochs = number<int>(key, v);
    else if (key == "batch") c.batch = number<int>(key, v);
    else if (key == "lr") c.lr = number<double>(key, v);
    else if (key == "lr_schedule") {
      if (v == "constant") c.lr_schedule = forknet::LrSchedule::Constant;
      else if (v == "cosine") c.lr_schedule = forknet::LrSchedule::Cosine;
      else throw ConfigError("bad value for lr_schedule: '" + v + "' (constant|cosine)");
    } else if (key == "precise_bn") c.precise_bn = number<int>(key, v);
    else if (key == "split") c.split = number<double>(key, v);
    else if (key == "views") {
      c.views.clear();
      for (const auto& a : split_list(v)) c.views.push_back(volume::parse_axis(a));
    } else if (key == "background_rule") c.background_rule = boolean(key, v);
    else if (key == "slice_bn") c.slice_bn = boolean(key, v);
    else if (key == "fusion.window") c.fusion_window = number<int>(key, v);
    else if (key == "fusion.fuzzy") {
      if (v == "neighborhood") c.fuzzy = fusion::FuzzyPolicy::Neighborhood;
      else if (v == "axial-priority") c.fuzzy = fusion::FuzzyPolicy::AxialPriority;
      else throw ConfigError("bad value for fusion.fuzzy: '" + v + "' (neighborhood|axial-priority)");
    } else if (key == "fusion.shape") {
      if (v == "cube") c.window_shape = fusion::WindowShape::Cube;
      else if (v == "view-plane") c.window_shape = fusion::WindowShape::ViewPlane;
      else throw ConfigError("bad value for fusion.shape: '" + v + "' (cube|view-plane)");
    } else if (key == "coil.file") c.coil_file = v;
    else if (key == "coil.offset_mm") c.coil_offset_mm = number<double>(key, v);
    else if (key == "coil.frequency") c.coil.frequency = number<double>(key, v);
    else if (key == "coil.turns") c.coil.turns = number<int>(key, v);
    else if (key == "coil.segments") c.coil.segments = number<int>(key, v);
    else if (key == "coil.current") c.coil.current = number<double>(key, v);
    else if (key == "solver.tol") c.solver_tol = number<double>(key, v);
    else if (key == "solver.max_iter") c.solver_max_iter = number<long>(key, v);
    else if (key == "metrics.raw") c.metrics_raw = boolean(key, v);
    else if (key == "metrics.hotspot") c.hotspot_fraction = number<double>(key, v);
    else if (key == "metrics.roi") {
      c.roi_labels.clear();
      for (const auto& a : split_list(v)) c.roi_labels.push_back(number<int>(key, a));
    } else if (key == "metrics.roi_file") c.roi_file = v;
    else if (key == "jobs") c.jobs = number<int>(key, v);
    else throw ConfigError("unknown config key: " + key);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("bad value for " + key + ": " + e.what());
  }
}

void apply_override(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment);
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "out = " << c.out.string() << "\nsubject = " << c.subject << "\nseed = " << c.seed << "\n"
    << "phantom.count = " << c.phantom_count << "\nphantom.dims = " << c.phantom_dims
    << "\nphantom.noise = " << c.phantom_noise << "\n"
    << "variant = " << (c.variant == forknet::Variant::ForkNet ? "forknet" : "unet") << "\ndegree = " << c.degree
    << "\ndepth = " << c.depth << "\nextent = " << c.extent
    << "\noutput_space = " << (c.output_space == nn::PredictionSpace::Log ? "log" : "probability")
    << "\nepochs = " << c.epochs << "\nbatch = " << c.batch << "\nlr = " << c.lr
    << "\nlr_schedule = " << (c.lr_schedule == forknet::LrSchedule::Cosine ? "cosine" : "constant")
    << "\nprecise_bn = " << c.precise_bn << "\nsplit = " << c.split
    << "\nviews = " << axis_list(c.views) << "\nbackground_rule = " << (c.background_rule ? "true" : "false")
    << "\nslice_bn = " << (c.slice_bn ? "true" : "false") << "\n"
    << "fusion.window = " << c.fusion_window
    << "\nfusion.fuzzy = " << (c.fuzzy == fusion::FuzzyPolicy::Neighborhood ? "neighborhood" : "axial-priority")
    << "\nfusion.shape = " << (c.window_shape == fusion::WindowShape::Cube ? "cube" : "view-plane") << "\n"
    << "coil.file = " << c.coil_file.string() << "\ncoil.offset_mm = " << c.coil_offset_mm
    << "\ncoil.frequency = " << c.coil.frequency << "\ncoil.turns = " << c.coil.turns
    << "\ncoil.segments = " << c.coil.segments << "\ncoil.current = " << c.coil.current << "\n"
    << "solver.tol = " << c.solver_tol << "\nsolver.max_iter = " << c.solver_max_iter << "\n"
    << "metrics.raw = " << (c.metrics_raw ? "true" : "false") << "\nmetrics.hotspot = " << c.hotspot_fraction
    << "\nmetrics.roi = ";
  for (std::size_t i = 0; i < c.roi_labels.size(); ++i) o << (i ? "," : "") << c.roi_labels[i];
  o << "\nmetrics.roi_file = " << c.roi_file.string() << "\njobs = " << c.jobs << "\n";
  return o.str();
}

void apply_environment(PipelineConfig& cfg) {
  if (const char* out = std::getenv("FORKTMS_OUT"); out && *out) cfg.out = out;
}

forknet::ForkNetConfig network_config(const PipelineConfig& c, volume::Axis view) {
  forknet::ForkNetConfig n;
  n.degree = c.degree;
  n.depth = c.depth;
  n.extent = c.extent;
  n.output_space = c.output_space;
  n.seed = c.seed * 3 + static_cast<std::uint64_t>(view);
  return n;
}

const char* view_symbol(volume::Axis view) {
  switch (view) {
    case volume::Axis::Axial: return "alpha";
    case volume::Axis::Sagittal: return "beta";
    case volume::Axis::Coronal: return "gamma";
  }
  return "?";
}

Layout layout(const PipelineConfig& cfg) { return Layout{cfg.out}; }

namespace {
std::string two_digits(int i) {
  char b[16];
  std::snprintf(b, sizeof b, "%02d", i);
  return b;
}
}  // namespace

std::filesystem::path Layout::corpus_mri(int i) const { return root / "corpus" / ("mri_" + two_digits(i) + ".vol"); }
std::filesystem::path Layout::corpus_labels(int i) const {
  return root / "corpus" / ("labels_" + two_digits(i) + ".vol");
}
std::filesystem::path Layout::checkpoint(volume::Axis v) const {
  return root / "models" / (std::string(volume::axis_name(v)) + ".ckpt");
}
std::filesystem::path Layout::view_labels(volume::Axis v) const {
  return root / "segment" / ("R_" + std::string(view_symbol(v)) + ".vol");
}
std::filesystem::path Layout::fused() const { return root / "fuse" / "R_psi.vol"; }
std::filesystem::path Layout::fusion_stats() const { return root / "fuse" / "agreement.txt"; }
std::filesystem::path Layout::field(const std::string& name) const { return root / "fields" / ("E_" + name + ".vol"); }
std::filesystem::path Layout::solve_log(const std::string& name) const {
  return root / "fields" / ("E_" + name + ".solve.txt");
}
std::filesystem::path Layout::report_text() const { return root / "report" / "metrics.txt"; }
std::filesystem::path Layout::report_kv() const { return root / "report" / "metrics.kv"; }

}  // namespace forktms::pipeline
