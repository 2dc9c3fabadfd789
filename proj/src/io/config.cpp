#include "gsfield/io/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gsf {
namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
  size_t used = 0;
  double out;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw std::invalid_argument("trailing characters in number '" + v + "'");
  return out;
}

long long parse_int(const std::string& v) {
  size_t used = 0;
  long long out;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw std::invalid_argument("trailing characters in integer '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct KeyHandler {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

KeyHandler dbl(const std::string& name, std::function<double&(RunConfig&)> ref) {
  return {name,
          [ref](RunConfig& c, const std::string& v) { ref(c) = parse_double(v); },
          [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); }};
}

KeyHandler integer(const std::string& name, std::function<int&(RunConfig&)> ref) {
  return {name,
          [ref](RunConfig& c, const std::string& v) { ref(c) = static_cast<int>(parse_int(v)); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

KeyHandler boolean(const std::string& name, std::function<bool&(RunConfig&)> ref) {
  return {name,
          [ref](RunConfig& c, const std::string& v) { ref(c) = parse_bool(v); },
          [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)) ? "true" : "false"; }};
}

KeyHandler text(const std::string& name, std::function<std::string&(RunConfig&)> ref) {
  return {name,
          [ref](RunConfig& c, const std::string& v) { ref(c) = v; },
          [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }};
}

const std::vector<KeyHandler>& registry() {
  static const std::vector<KeyHandler> keys = [] {
    std::vector<KeyHandler> r;
    r.push_back(text("dataset.format", [](RunConfig& c) -> std::string& { return c.dataset_format; }));
    r.push_back(text("dataset.path", [](RunConfig& c) -> std::string& { return c.dataset_path; }));
    r.push_back(text("output.dir", [](RunConfig& c) -> std::string& { return c.output_dir; }));

    r.push_back(dbl("camera.fx", [](RunConfig& c) -> double& { return c.intrinsics.fx; }));
    r.push_back(dbl("camera.fy", [](RunConfig& c) -> double& { return c.intrinsics.fy; }));
    r.push_back(dbl("camera.cx", [](RunConfig& c) -> double& { return c.intrinsics.cx; }));
    r.push_back(dbl("camera.cy", [](RunConfig& c) -> double& { return c.intrinsics.cy; }));
    r.push_back(integer("camera.width", [](RunConfig& c) -> int& { return c.intrinsics.width; }));
    r.push_back(integer("camera.height", [](RunConfig& c) -> int& { return c.intrinsics.height; }));
    r.push_back(dbl("camera.depth_scale", [](RunConfig& c) -> double& { return c.intrinsics.depth_scale; }));
    r.push_back(dbl("camera.near", [](RunConfig& c) -> double& { return c.intrinsics.near_plane; }));
    r.push_back(dbl("camera.far", [](RunConfig& c) -> double& { return c.intrinsics.far_plane; }));

    r.push_back(dbl("loss.w_color", [](RunConfig& c) -> double& { return c.mapper.weights.w_color; }));
    r.push_back(dbl("loss.w_ssim", [](RunConfig& c) -> double& { return c.mapper.weights.w_ssim; }));
    r.push_back(dbl("loss.w_geo", [](RunConfig& c) -> double& { return c.mapper.weights.w_geo; }));
    r.push_back(dbl("loss.w_align", [](RunConfig& c) -> double& { return c.mapper.weights.w_align; }));
    r.push_back(dbl("loss.w_iso", [](RunConfig& c) -> double& { return c.mapper.weights.w_iso; }));
    r.push_back(dbl("loss.w_var", [](RunConfig& c) -> double& { return c.mapper.weights.w_var; }));
    r.push_back(dbl("loss.t_color", [](RunConfig& c) -> double& { return c.mapper.weights.t_color; }));
    r.push_back(dbl("loss.t_geo", [](RunConfig& c) -> double& { return c.mapper.weights.t_geo; }));
    r.push_back(dbl("loss.iso_epsilon", [](RunConfig& c) -> double& { return c.mapper.weights.iso_epsilon; }));
    r.push_back(dbl("loss.opacity_floor", [](RunConfig& c) -> double& { return c.mapper.weights.opacity_floor; }));
    r.push_back(boolean("loss.normalize_by_valid", [](RunConfig& c) -> bool& { return c.mapper.weights.normalize_by_valid; }));

    r.push_back(dbl("tracker.lr_rotation", [](RunConfig& c) -> double& { return c.tracker.lr_rotation; }));
    r.push_back(dbl("tracker.lr_translation", [](RunConfig& c) -> double& { return c.tracker.lr_translation; }));
    r.push_back(integer("tracker.iterations", [](RunConfig& c) -> int& { return c.tracker.iterations; }));
    r.push_back(integer("tracker.ba_window", [](RunConfig& c) -> int& { return c.tracker.ba_window; }));
    r.push_back(integer("tracker.ba_iterations", [](RunConfig& c) -> int& { return c.tracker.ba_iterations; }));
    r.push_back(integer("tracker.keyframe_interval", [](RunConfig& c) -> int& { return c.tracker.keyframe_interval; }));
    r.push_back(integer("tracker.recent_keyframes", [](RunConfig& c) -> int& { return c.tracker.recent_keyframes; }));
    r.push_back(boolean("tracker.freeze_oldest_pose", [](RunConfig& c) -> bool& { return c.tracker.freeze_oldest_pose; }));
    r.push_back(dbl("tracker.degraded_loss_ratio", [](RunConfig& c) -> double& { return c.tracker.degraded_loss_ratio; }));

    r.push_back(integer("mapper.iterations", [](RunConfig& c) -> int& { return c.mapper.iterations; }));
    r.push_back(integer("mapper.init_iterations", [](RunConfig& c) -> int& { return c.mapper.init_iterations; }));
    r.push_back(integer("mapper.sh_coeffs", [](RunConfig& c) -> int& { return c.mapper.sh_coeffs; }));
    r.push_back(integer("mapper.init_stride", [](RunConfig& c) -> int& { return c.mapper.init_stride; }));
    r.push_back(integer("mapper.spawn_stride", [](RunConfig& c) -> int& { return c.mapper.spawn_stride; }));
    r.push_back(dbl("mapper.spawn_opacity_threshold", [](RunConfig& c) -> double& { return c.mapper.spawn_opacity_threshold; }));
    r.push_back(dbl("mapper.init_opacity", [](RunConfig& c) -> double& { return c.mapper.init_opacity; }));
    r.push_back(dbl("mapper.scene_extent", [](RunConfig& c) -> double& { return c.mapper.scene_extent; }));
    r.push_back(dbl("mapper.lr_mean", [](RunConfig& c) -> double& { return c.mapper.lr_mean; }));
    r.push_back(dbl("mapper.lr_sh", [](RunConfig& c) -> double& { return c.mapper.lr_sh; }));
    r.push_back(dbl("mapper.lr_opacity", [](RunConfig& c) -> double& { return c.mapper.lr_opacity; }));
    r.push_back(dbl("mapper.lr_scale", [](RunConfig& c) -> double& { return c.mapper.lr_scale; }));
    r.push_back(dbl("mapper.lr_rotation", [](RunConfig& c) -> double& { return c.mapper.lr_rotation; }));

    r.push_back(dbl("densify.grad_threshold", [](RunConfig& c) -> double& { return c.mapper.densify.grad_threshold; }));
    r.push_back(integer("densify.interval", [](RunConfig& c) -> int& { return c.mapper.densify.interval; }));
    r.push_back(dbl("densify.split_factor", [](RunConfig& c) -> double& { return c.mapper.densify.split_factor; }));
    r.push_back(dbl("densify.size_fraction", [](RunConfig& c) -> double& { return c.mapper.densify.size_fraction; }));
    r.push_back(dbl("densify.cull_opacity", [](RunConfig& c) -> double& { return c.mapper.densify.cull_opacity; }));

    r.push_back(dbl("uncertainty.tau", [](RunConfig& c) -> double& { return c.mapper.uncertainty.tau; }));
    r.push_back(dbl("uncertainty.reduced_opacity", [](RunConfig& c) -> double& { return c.mapper.uncertainty.reduced_opacity; }));

    r.push_back(dbl("raster.alpha_clamp", [](RunConfig& c) -> double& { return c.mapper.raster.alpha_clamp; }));
    r.push_back(dbl("raster.alpha_skip", [](RunConfig& c) -> double& { return c.mapper.raster.alpha_skip; }));
    r.push_back(dbl("raster.termination_threshold", [](RunConfig& c) -> double& { return c.mapper.raster.termination_threshold; }));
    r.push_back(dbl("raster.footprint_sigma", [](RunConfig& c) -> double& { return c.mapper.raster.footprint_sigma; }));
    r.push_back(dbl("raster.dilation", [](RunConfig& c) -> double& { return c.mapper.raster.dilation; }));
    r.push_back(integer("raster.tile_size", [](RunConfig& c) -> int& { return c.mapper.raster.tile_size; }));
    r.push_back(boolean("raster.uncertainty_full_gradient", [](RunConfig& c) -> bool& { return c.mapper.raster.uncertainty_full_gradient; }));

    r.push_back({"scene.kind",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "room") c.scene.kind = SceneKind::room;
                   else if (v == "flat_wall") c.scene.kind = SceneKind::flat_wall;
                   else throw std::invalid_argument("scene.kind must be room or flat_wall");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.scene.kind == SceneKind::room ? "room" : "flat_wall");
                 }});
    r.push_back(integer("scene.count", [](RunConfig& c) -> int& { return c.scene.primitive_count; }));
    r.push_back(dbl("scene.extent", [](RunConfig& c) -> double& { return c.scene.extent; }));
    r.push_back(integer("scene.wall_layers", [](RunConfig& c) -> int& { return c.scene.wall_layers; }));

    r.push_back({"trajectory.kind",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "orbit") c.trajectory.kind = TrajectoryKind::orbit;
                   else if (v == "lateral") c.trajectory.kind = TrajectoryKind::lateral;
                   else throw std::invalid_argument("trajectory.kind must be orbit or lateral");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.trajectory.kind == TrajectoryKind::orbit ? "orbit" : "lateral");
                 }});
    r.push_back(integer("trajectory.frames", [](RunConfig& c) -> int& { return c.trajectory.frames; }));
    r.push_back(dbl("trajectory.radius", [](RunConfig& c) -> double& { return c.trajectory.radius; }));
    r.push_back(dbl("trajectory.sweep", [](RunConfig& c) -> double& { return c.trajectory.sweep_radians; }));
    r.push_back(dbl("trajectory.length", [](RunConfig& c) -> double& { return c.trajectory.length; }));
    r.push_back(dbl("trajectory.height", [](RunConfig& c) -> double& { return c.trajectory.height; }));

    r.push_back(dbl("noise.depth_sigma", [](RunConfig& c) -> double& { return c.noise.depth_sigma; }));
    r.push_back(dbl("noise.color_sigma", [](RunConfig& c) -> double& { return c.noise.color_sigma; }));
    r.push_back(dbl("noise.outlier_fraction", [](RunConfig& c) -> double& { return c.noise.outlier_fraction; }));
    r.push_back(dbl("noise.outlier_sigma", [](RunConfig& c) -> double& { return c.noise.outlier_sigma; }));

    r.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   c.seed = static_cast<uint64_t>(parse_int(v));
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    r.push_back(integer("threads", [](RunConfig& c) -> int& { return c.threads; }));
    return r;
  }();
  return keys;
}

void apply_key(RunConfig& config, const std::string& key, const std::string& value) {
  for (const KeyHandler& h : registry()) {
    if (h.name == key) {
      h.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (dataset_format != "synthetic" && dataset_format != "tum")
    throw std::invalid_argument("dataset.format must be synthetic or tum");
  if (dataset_format == "tum") {
    if (dataset_path.empty()) throw std::invalid_argument("dataset.path is required for tum format");
    if (!std::filesystem::exists(dataset_path))
      throw std::invalid_argument("dataset.path does not exist: " + dataset_path);
  }
  if (threads < 0) throw std::invalid_argument("threads must be non-negative");
  intrinsics.validate();
  mapper.validate();
  tracker.validate();
  if (scene.primitive_count < 1) throw std::invalid_argument("scene.count must be positive");
  if (trajectory.frames < 1) throw std::invalid_argument("trajectory.frames must be positive");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      apply_key(config, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key=value, got '" + assignment + "'");
  apply_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  for (const KeyHandler& h : registry()) out << h.name << " = " << h.get(config) << "\n";
  return out.str();
}

}  // namespace gsf
