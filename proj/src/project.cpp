#include "cvkit/project.hpp"

#include <set>

#include <json.hpp>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::service {

using nlohmann::json;

void Project::validate() const {
  std::set<std::string> names;
  for (const auto& c : cameras) {
    if (c.name.empty()) fail(ErrorCode::InvalidProject, "camera without a name");
    if (c.name.find_first_of(",/\n") != std::string::npos) {
      fail(ErrorCode::InvalidProject, "camera name '" + c.name + "' contains a separator");
    }
    if (!names.insert(c.name).second) fail(ErrorCode::InvalidProject, "duplicate camera name '" + c.name + "'");
  }
  try {
    if (arena) arena->validate();
    for (const auto& w : walls) w.validate();
  } catch (const Error& e) {
    fail(ErrorCode::InvalidProject, e.what());
  }
}

const ProjectCamera* Project::camera(std::string_view name) const {
  for (const auto& c : cameras) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<geometry::CameraProfile> Project::calibrated_cameras() const {
  std::vector<geometry::CameraProfile> out;
  for (const auto& c : cameras) {
    if (c.profile) out.push_back(*c.profile);
  }
  return out;
}

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw json::type_error::create(302, "expected a 3-vector", &j);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string project_to_json(const Project& p) {
  json j;
  j["name"] = p.name;
  j["part_order"] = p.part_order;
  j["plugin_dirs"] = p.plugin_dirs;
  j["cameras"] = json::array();
  for (const auto& c : p.cameras) {
    json cj{{"name", c.name}, {"stream", c.stream}, {"backend", c.backend}};
    if (c.profile) {
      cj["dlt"] = std::vector<double>(c.profile->dlt.data(), c.profile->dlt.data() + 11);
      cj["width"] = c.profile->width;
      cj["height"] = c.profile->height;
    }
    j["cameras"].push_back(std::move(cj));
  }
  if (p.arena) {
    j["arena"] = {{"x_min", p.arena->x_min}, {"x_max", p.arena->x_max},
                  {"y_min", p.arena->y_min}, {"y_max", p.arena->y_max}};
  }
  j["walls"] = json::array();
  for (const auto& w : p.walls) {
    j["walls"].push_back({{"name", w.name},
                          {"origin", vec3(w.origin)},
                          {"u_axis", vec3(w.u_axis)},
                          {"v_axis", vec3(w.v_axis)},
                          {"width", w.width},
                          {"height", w.height},
                          {"nu", w.nu},
                          {"nv", w.nv}});
  }
  return j.dump(2) + "\n";
}

Project project_from_json(std::string_view text) {
  Project p;
  try {
    const json j = json::parse(text);
    p.name = j.value("name", "");
    p.part_order = j.value("part_order", std::vector<std::string>{});
    p.plugin_dirs = j.value("plugin_dirs", std::vector<std::string>{});
    for (const auto& cj : j.value("cameras", json::array())) {
      ProjectCamera c;
      c.name = cj.at("name").get<std::string>();
      c.stream = cj.value("stream", "");
      c.backend = cj.value("backend", "image-directory");
      if (cj.contains("dlt")) {
        const auto dlt = cj.at("dlt").get<std::vector<double>>();
        if (dlt.size() != 11) fail(ErrorCode::InvalidProject, "camera " + c.name + ": dlt needs 11 values");
        geometry::CameraProfile prof;
        prof.name = c.name;
        for (int k = 0; k < 11; ++k) prof.dlt[k] = dlt[static_cast<std::size_t>(k)];
        prof.width = cj.value("width", 0);
        prof.height = cj.value("height", 0);
        c.profile = prof;
      }
      p.cameras.push_back(std::move(c));
    }
    if (j.contains("arena")) {
      const auto& a = j.at("arena");
      p.arena = behavior::Arena{a.at("x_min").get<double>(), a.at("x_max").get<double>(),
                                a.at("y_min").get<double>(), a.at("y_max").get<double>()};
    }
    for (const auto& wj : j.value("walls", json::array())) {
      behavior::Wall w;
      w.name = wj.at("name").get<std::string>();
      w.origin = vec3(wj.at("origin"));
      w.u_axis = vec3(wj.at("u_axis"));
      w.v_axis = vec3(wj.at("v_axis"));
      w.width = wj.at("width").get<double>();
      w.height = wj.at("height").get<double>();
      w.nu = wj.value("nu", 1);
      w.nv = wj.value("nv", 1);
      p.walls.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidProject, std::string("project.json: ") + e.what());
  }
  p.validate();
  return p;
}

Project load_project(const std::filesystem::path& dir) {
  const auto file = dir / kProjectFile;
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) fail(ErrorCode::InvalidProject, "no " + file.string());
  return project_from_json(csv::read_file(file));
}

void save_project(const Project& p, const std::filesystem::path& dir) {
  p.validate();
  csv::write_file_atomic(dir / kProjectFile, project_to_json(p));
}

}  // namespace cvkit::service
