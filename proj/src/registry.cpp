#include <algorithm>

#include "cvkit/csv.hpp"
#include "cvkit/pipeline.hpp"

namespace cvkit::pipeline {

DataKind kind_of(const Value& value) {
  if (const auto* seq = std::get_if<PoseSequence>(&value)) {
    return seq->dims() == 3 ? DataKind::pose3d : DataKind::pose2d;
  }
  if (std::holds_alternative<TableData>(value)) return DataKind::table;
  return DataKind::none;
}

namespace {

ParamSpec req(std::string name, ParamType type, std::string label) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = type;
  p.required = true;
  p.label = std::move(label);
  return p;
}

ParamSpec opt(std::string name, ParamType type, std::optional<std::string> def, std::string label,
              std::vector<std::string> variants = {}) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = type;
  p.default_value = std::move(def);
  p.label = std::move(label);
  p.variants = std::move(variants);
  return p;
}

ProcessorManifest make(std::string id, Category category, DataKind in, DataKind out, std::string op,
                       std::vector<ParamSpec> params) {
  ProcessorManifest m;
  m.id = std::move(id);
  m.category = category;
  m.input_kind = in;
  m.output_kind = out;
  m.exec = {ExecSpec::Mode::builtin, std::move(op)};
  m.params = std::move(params);
  m.origin = "builtin";
  return m;
}

std::vector<ParamSpec> arena_params() {
  return {req("x_min", ParamType::real, "Arena x min (mm)"),
          req("x_max", ParamType::real, "Arena x max (mm)"),
          req("y_min", ParamType::real, "Arena y min (mm)"),
          req("y_max", ParamType::real, "Arena y max (mm)")};
}

std::vector<ParamSpec> concat(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::vector<ProcessorManifest> builtin_manifests() {
  using C = Category;
  using K = DataKind;
  using T = ParamType;
  std::vector<ProcessorManifest> out;

  // Kind-polymorphic operations: the plain id works on 3D data, `_2d` on 2D.
  auto both = [&](const std::string& id, C cat, K out3, K out2, const std::vector<ParamSpec>& params) {
    out.push_back(make(id, cat, K::pose3d, out3, id, params));
    out.push_back(make(id + "_2d", cat, K::pose2d, out2, id, params));
  };

  const std::vector<ParamSpec> load = {
      opt("path", T::path, std::nullopt, "Pose file (defaults to the pipeline source)"),
      opt("format", T::enumeration, "cvkit", "File format", {"cvkit", "flat_csv", "dlc_csv"}),
      opt("fps", T::real, std::nullopt, "Frame rate for formats without one"),
      opt("threshold", T::real, std::nullopt, "Score threshold for formats without one")};
  out.push_back(make("load_pose", C::utility, K::none, K::pose2d, "load_pose", load));
  out.push_back(make("load_pose_3d", C::utility, K::none, K::pose3d, "load_pose", load));

  const std::vector<ParamSpec> save = {
      opt("path", T::path, std::nullopt, "Output file (defaults to the pipeline sink)"),
      opt("format", T::enumeration, "cvkit", "File format", {"cvkit", "flat_csv"})};
  out.push_back(make("save_pose", C::utility, K::pose3d, K::pose3d, "save_pose", save));
  out.push_back(make("save_pose_2d", C::utility, K::pose2d, K::pose2d, "save_pose", save));

  both("kalman_filter", C::filter, K::pose3d, K::pose2d,
       {opt("process_noise", T::real, "0.01", "Process noise q"),
        opt("measurement_noise", T::real, "1", "Measurement noise r"),
        opt("initial_variance", T::real, "100", "Initial variance")});
  both("linear_interpolate", C::filter, K::pose3d, K::pose2d,
       {opt("max_gap", T::integer, "10", "Longest gap filled (frames)")});
  both("moving_average", C::filter, K::pose3d, K::pose2d,
       {opt("window", T::integer, "5", "Window length (odd)")});
  both("velocity_filter", C::filter, K::pose3d, K::pose2d,
       {req("max_speed", T::real, "Maximum speed (units per frame)")});
  both("statistical_distance_filter", C::filter, K::pose3d, K::pose2d,
       {opt("window", T::integer, "5", "Window length"),
        opt("z_max", T::real, "3", "Maximum distance in RMS scatters")});

  out.push_back(make("reconstruct_3d", C::generative, K::pose2d, K::pose3d, "reconstruct_3d",
                     {req("dlt", T::path, "DLT coefficient file"),
                      opt("views", T::string, std::nullopt,
                          "Pose files of cameras 1..n-1, separated by |")}));
  out.push_back(make("reproject_2d", C::generative, K::pose3d, K::pose2d, "reproject_2d",
                     {req("dlt", T::path, "DLT coefficient file"),
                      opt("camera", T::integer, "0", "Camera column")}));

  both("input_statistics", C::utility, K::table, K::table, {});
  out.push_back(make("save_table", C::utility, K::table, K::table, "save_table",
                     {opt("path", T::path, std::nullopt, "Output file (defaults to the pipeline sink)")}));

  const ParamSpec anchor = req("anchor", T::string, "Anchor part");
  const ParamSpec base = req("base", T::string, "Head base part");
  const ParamSpec tip = req("tip", T::string, "Head tip part");
  const ParamSpec nx = opt("nx", T::integer, "20", "Bins along x");
  const ParamSpec ny = opt("ny", T::integer, "20", "Bins along y");

  out.push_back(make("view_direction", C::generative, K::pose3d, K::table, "view_direction", {base, tip}));
  out.push_back(make("gaze_heatmap", C::generative, K::pose3d, K::table, "gaze_heatmap",
                     {base, tip, req("walls", T::path, "Wall geometry file"),
                      req("sigma", T::real, "Attention sigma (mm)")}));
  both("occupancy_map", C::generative, K::table, K::table, concat(concat({anchor}, arena_params()), {nx, ny}));
  out.push_back(make("rearing", C::generative, K::pose3d, K::table, "rearing",
                     concat(concat({anchor, req("z_min", T::real, "Height threshold (mm)"),
                                    opt("min_frames", T::integer, "5", "Minimum run length")},
                                   arena_params()),
                            {nx, ny})));
  both("ebc_rate_map", C::generative, K::table, K::table,
       concat(concat({anchor, base, tip, req("spikes", T::path, "Spike time file")}, arena_params()),
              {req("max_dist", T::real, "Maximum boundary distance (mm)"),
               opt("angle_bins", T::integer, "120", "Angle bins"),
               opt("dist_bins", T::integer, "0", "Distance bins (0: max_dist / 12.5)"),
               opt("min_occupancy_s", T::real, "0.2", "Minimum occupancy (s)")}));
  both("spike_locations", C::generative, K::table, K::table,
       {anchor, base, tip, req("spikes", T::path, "Spike time file")});
  return out;
}

const ProcessorManifest* Registry::find(std::string_view id) const {
  for (const auto& m : manifests) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

const ProcessorManifest& Registry::at(std::string_view id) const {
  const auto* m = find(id);
  if (!m) fail(ErrorCode::UnknownProcessor, "no processor named '" + std::string(id) + "'");
  return *m;
}

Registry scan_registry(const std::vector<std::filesystem::path>& dirs) {
  Registry reg;
  reg.manifests = builtin_manifests();
  for (const auto& dir : dirs) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
      fail(ErrorCode::IoFailure, "not a readable directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".manifest") files.push_back(entry.path());
    }
    if (ec) fail(ErrorCode::IoFailure, "cannot list " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      ProcessorManifest m = load_manifest(file);
      if (const auto* first = reg.find(m.id)) {
        reg.warnings.push_back("duplicate processor id '" + m.id + "' in " + file.string() +
                               " ignored; first defined by " + first->origin);
        continue;
      }
      reg.manifests.push_back(std::move(m));
    }
  }
  return reg;
}

}  // namespace cvkit::pipeline
