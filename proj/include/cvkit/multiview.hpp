#pragma once

#include <vector>

#include "cvkit/geometry.hpp"
#include "cvkit/pose.hpp"

// Whole-sequence triangulation and reprojection over calibrated cameras.
namespace cvkit::geometry {

/// views[c] is camera c's 2D sequence; all views share parts, length and
/// frame indices. A part that cannot be triangulated on a frame (too few
/// valid views, degenerate rays) comes out invalid. Scores are the mean over
/// contributing views; the threshold and fps come from views[0].
PoseSequence triangulate_views(const std::vector<CameraProfile>& cams,
                               const std::vector<PoseSequence>& views);

/// Projects every valid 3D part into one camera; scores carry over.
PoseSequence reproject_view(const CameraProfile& cam, const PoseSequence& seq);

}  // namespace cvkit::geometry
