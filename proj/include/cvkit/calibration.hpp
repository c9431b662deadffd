#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cvkit/geometry.hpp"

// EasyWand interop and calibration-frame selection over multi-camera 2D
// annotations.
namespace cvkit::geometry {

/// part name -> pixel position
using FramePoints = std::map<std::string, Eigen::Vector2d>;

struct CameraAnnotations {
  std::string camera;
  std::map<std::int64_t, FramePoints> frames;
};

/// Frames annotated (at least one part) in every camera, ascending.
std::vector<std::int64_t> synchronized_frames(const std::vector<CameraAnnotations>& cams);

/// Greedy farthest-point sampling over synchronized frames, described by the
/// concatenation of every camera's points for the parts annotated in all of
/// them. Seeds with the frame nearest the centroid; ties go to the lower frame
/// index. Returned ascending.
std::vector<std::int64_t> select_calibration_frames(const std::vector<CameraAnnotations>& cams,
                                                    std::size_t k);

/// EasyWand DLT coefficient file: 11 rows, one column per camera, no header.
std::vector<CameraProfile> parse_dlt_coefficients(std::string_view text);
std::vector<CameraProfile> load_dlt_coefficients(const std::filesystem::path& path);
std::string format_dlt_coefficients(const std::vector<CameraProfile>& cams);
void write_dlt_coefficients(const std::vector<CameraProfile>& cams, const std::filesystem::path& path);

struct EasyWandManifest {
  std::vector<std::string> cameras;
  std::vector<std::int64_t> frames;
};

/// Writes `manifest.csv` (frame_index column), `cameras.csv` (camera column)
/// and one `<camera>_points.csv` (frame,part,u,v) per camera into `dir`.
/// An empty `frames` exports every synchronized frame.
EasyWandManifest export_easywand_package(const std::vector<CameraAnnotations>& cams,
                                         const std::vector<std::int64_t>& frames,
                                         const std::filesystem::path& dir);
EasyWandManifest read_easywand_manifest(const std::filesystem::path& dir);
std::vector<CameraAnnotations> read_easywand_points(const std::filesystem::path& dir);

}  // namespace cvkit::geometry
