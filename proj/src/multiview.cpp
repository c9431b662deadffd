#include "cvkit/multiview.hpp"

namespace cvkit::geometry {

PoseSequence triangulate_views(const std::vector<CameraProfile>& cams, const std::vector<PoseSequence>& views) {
  if (views.empty()) fail(ErrorCode::InsufficientViews, "no camera views");
  if (views.size() > cams.size()) {
    fail(ErrorCode::InvalidParameter, std::to_string(views.size()) + " views but only " +
                                          std::to_string(cams.size()) + " calibrated cameras");
  }
  const PoseSequence& cam0 = views.front();
  for (const auto& v : views) {
    if (v.dims() != 2 || v.part_order() != cam0.part_order() || v.size() != cam0.size()) {
      fail(ErrorCode::ShapeMismatch, "camera views differ in dims, parts or length");
    }
    for (std::size_t f = 0; f < v.size(); ++f) {
      if (v[f].frame_index != cam0[f].frame_index) {
        fail(ErrorCode::ShapeMismatch, "camera views are not frame-synchronized");
      }
    }
  }
  const double threshold = cam0.score_threshold();
  std::vector<Skeleton> out;
  out.reserve(cam0.size());
  for (std::size_t f = 0; f < cam0.size(); ++f) {
    Skeleton s;
    s.frame_index = cam0[f].frame_index;
    s.behaviors = cam0[f].behaviors;
    for (std::size_t p = 0; p < cam0.part_order().size(); ++p) {
      Part part{cam0.part_order()[p], Eigen::VectorXd::Zero(3), 0.0};
      std::vector<Observation> obs;
      for (std::size_t c = 0; c < views.size(); ++c) {
        const Part& q = views[c][f].parts[p];
        obs.push_back({c, Eigen::Vector2d(q.coords[0], q.coords[1]), q.score});
      }
      try {
        const auto r = dlt_reconstruct(cams, obs, threshold);
        double score = 0.0;
        for (auto c : r.cameras_used) score += obs[c].score;
        part.coords = r.point;
        part.score = score / static_cast<double>(r.cameras_used.size());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientViews && e.code() != ErrorCode::RankDeficient &&
            e.code() != ErrorCode::DegenerateDenominator) {
          throw;
        }
      }
      s.parts.push_back(std::move(part));
    }
    out.push_back(std::move(s));
  }
  return PoseSequence(cam0.part_order(), 3, cam0.fps(), threshold, std::move(out));
}

PoseSequence reproject_view(const CameraProfile& cam, const PoseSequence& seq) {
  if (seq.dims() != 3) fail(ErrorCode::Not3D, "reprojection needs 3D poses");
  std::vector<Skeleton> out;
  out.reserve(seq.size());
  for (std::size_t f = 0; f < seq.size(); ++f) {
    Skeleton s;
    s.frame_index = seq[f].frame_index;
    s.behaviors = seq[f].behaviors;
    for (std::size_t p = 0; p < seq.part_order().size(); ++p) {
      const Part& q = seq[f].parts[p];
      Part part{q.name, Eigen::VectorXd::Zero(2), 0.0};
      if (seq.is_valid(f, p)) {
        try {
          part.coords = dlt_project(cam.dlt, Eigen::Vector3d(q.coords));
          part.score = q.score;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateDenominator) throw;
        }
      }
      s.parts.push_back(std::move(part));
    }
    out.push_back(std::move(s));
  }
  return PoseSequence(seq.part_order(), 2, seq.fps(), seq.score_threshold(), std::move(out));
}

}  // namespace cvkit::geometry
