#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvkit/behavior.hpp"
#include "cvkit/geometry.hpp"

// Annotation/analysis project stored as `project.json` in its directory.
namespace cvkit::service {

struct ProjectCamera {
  std::string name;
  std::string stream;  // frame source, relative to the project directory
  std::string backend = "image-directory";
  std::optional<geometry::CameraProfile> profile;
};

struct Project {
  std::string name;
  std::vector<ProjectCamera> cameras;
  std::vector<std::string> part_order;
  std::optional<behavior::Arena> arena;
  std::vector<behavior::Wall> walls;
  std::vector<std::string> plugin_dirs;  // relative to the project directory

  /// Throws InvalidProject (duplicate or empty camera names, bad geometry).
  void validate() const;
  const ProjectCamera* camera(std::string_view name) const;
  /// Profiles of every calibrated camera, in project order.
  std::vector<geometry::CameraProfile> calibrated_cameras() const;
};

std::string project_to_json(const Project& p);
Project project_from_json(std::string_view text);  // InvalidProject

inline constexpr const char* kProjectFile = "project.json";

Project load_project(const std::filesystem::path& dir);
void save_project(const Project& p, const std::filesystem::path& dir);

}  // namespace cvkit::service
