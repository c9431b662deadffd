#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "cvkit/calibration.hpp"
#include "cvkit/geometry.hpp"

// Multi-camera 2D keypoint annotations with provenance.
namespace cvkit::annotate {

enum class Provenance { annotated, interpolated, projected };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view name);  // InvalidParameter

struct AnnotationPoint {
  std::string camera;
  std::int64_t frame = 0;
  std::string part;
  Eigen::Vector2d uv = Eigen::Vector2d::Zero();
  Provenance provenance = Provenance::annotated;

  bool operator==(const AnnotationPoint&) const = default;
};

/// At most one point per (camera, frame, part).
class AnnotationStore {
 public:
  using Key = std::tuple<std::string, std::int64_t, std::string>;

  /// Replaces any point with the same key.
  void put(AnnotationPoint point);
  bool erase(const std::string& camera, std::int64_t frame, const std::string& part);
  const AnnotationPoint* find(const std::string& camera, std::int64_t frame, const std::string& part) const;
  /// Ordered by camera, frame, part.
  std::vector<AnnotationPoint> points() const;
  std::size_t size() const { return points_.size(); }
  std::vector<std::string> cameras() const;

  /// Points grouped per camera for calibration, optionally annotated only.
  std::vector<geometry::CameraAnnotations> by_camera(bool annotated_only = true) const;

  bool operator==(const AnnotationStore&) const = default;

 private:
  std::map<Key, AnnotationPoint> points_;
};

/// `camera,frame,part,u,v,provenance`
std::string format_annotations_csv(const AnnotationStore& store);
AnnotationStore parse_annotations_csv(std::string_view text);
/// A missing file is an empty store.
AnnotationStore load_annotations(const std::filesystem::path& path);
void save_annotations(const AnnotationStore& store, const std::filesystem::path& path);

/// Linearly fills frames strictly between two annotated endpoints of one
/// part; points with provenance annotated are never replaced. Returns the
/// number of points written. Throws MissingEndpoints.
std::size_t interpolate_annotations(AnnotationStore& store, const std::string& camera,
                                    const std::string& part, std::int64_t frame_a, std::int64_t frame_b);

struct Reprojection {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double residual = 0.0;  // rms pixels over the annotated views
  std::vector<std::string> source_cameras;
  std::vector<AnnotationPoint> proposals;  // provenance projected
};

/// Triangulates (frame, part) from the cameras holding an annotated point
/// and projects it into every other camera. Throws InsufficientViews or
/// RankDeficient.
Reprojection reprojection_assist(const AnnotationStore& store, const std::vector<geometry::CameraProfile>& cams,
                                 std::int64_t frame, const std::string& part);

}  // namespace cvkit::annotate
