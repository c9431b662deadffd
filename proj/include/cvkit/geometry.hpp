#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvkit/errors.hpp"
#include "cvkit/pose.hpp"

// DLT camera model, triangulation and rigid transforms. The numeric kernels
// are templates over the scalar type; CameraProfile and friends are the
// double instantiations used by the rest of the toolkit.
namespace cvkit::geometry {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Mat34 = Eigen::Matrix<Scalar, 3, 4>;
/// L1..L11 of the 11-parameter DLT.
template <typename Scalar> using Dlt = Eigen::Matrix<Scalar, 11, 1>;

/// Smallest |L9·X + L10·Y + L11·Z + 1| accepted by dlt_project.
inline constexpr double kMinDenominator = 1e-6;
/// dlt_reconstruct rejects systems whose condition number exceeds this.
inline constexpr double kMaxConditionNumber = 1e12;

template <typename Scalar>
struct BasicCameraProfile {
  std::string name;
  Dlt<Scalar> dlt = Dlt<Scalar>::Zero();
  int width = 0;
  int height = 0;
};
using CameraProfile = BasicCameraProfile<double>;

struct WorkingVolume {
  Eigen::Vector3d min;
  Eigen::Vector3d max;

  WorkingVolume(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi);
  bool contains(const Eigen::Vector3d& p) const;
};

// ---------------------------------------------------------------------------
// Projection

template <typename Scalar>
Scalar dlt_denominator(const Dlt<Scalar>& L, const Vec3<Scalar>& p) {
  return L[8] * p.x() + L[9] * p.y() + L[10] * p.z() + Scalar(1);
}

/// u = (L1X+L2Y+L3Z+L4)/(L9X+L10Y+L11Z+1), v likewise with L5..L8.
/// No clamping to the image; throws DegenerateDenominator near the singular plane.
template <typename Scalar>
Vec2<Scalar> dlt_project(const Dlt<Scalar>& L, const Vec3<Scalar>& p) {
  using std::abs;
  const Scalar den = dlt_denominator(L, p);
  if (abs(den) < Scalar(kMinDenominator)) {
    fail(ErrorCode::DegenerateDenominator, "point lies on the camera's singular plane");
  }
  const Scalar u = (L[0] * p.x() + L[1] * p.y() + L[2] * p.z() + L[3]) / den;
  const Scalar v = (L[4] * p.x() + L[5] * p.y() + L[6] * p.z() + L[7]) / den;
  return {u, v};
}

template <typename Scalar>
Vec2<Scalar> dlt_project(const BasicCameraProfile<Scalar>& cam, const Vec3<Scalar>& p) {
  return dlt_project(cam.dlt, p);
}

/// 3×4 projection matrix with P(2,3) = 1 and its DLT vector.
template <typename Scalar>
Mat34<Scalar> dlt_to_projection(const Dlt<Scalar>& L) {
  Mat34<Scalar> P;
  P << L[0], L[1], L[2], L[3], L[4], L[5], L[6], L[7], L[8], L[9], L[10], Scalar(1);
  return P;
}

template <typename Scalar>
Dlt<Scalar> projection_to_dlt(const Mat34<Scalar>& P) {
  using std::abs;
  const Scalar s = P(2, 3);
  if (abs(s) < std::numeric_limits<Scalar>::epsilon() * P.norm()) {
    fail(ErrorCode::DegenerateDenominator, "projection matrix has no DLT form (P34 = 0)");
  }
  Dlt<Scalar> L;
  L << P(0, 0), P(0, 1), P(0, 2), P(0, 3), P(1, 0), P(1, 1), P(1, 2), P(1, 3), P(2, 0), P(2, 1),
      P(2, 2);
  return L / s;
}

// ---------------------------------------------------------------------------
// Triangulation

struct Observation {
  std::size_t camera = 0;
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  double score = 1.0;
};

template <typename Scalar>
struct BasicReconstruction {
  Vec3<Scalar> point;
  Scalar rms_residual;  // pixels, over contributing views
  std::vector<std::size_t> cameras_used;
};
using Reconstruction = BasicReconstruction<double>;

/// Weighted linear least squares over two equations per view,
///   (u·L9 − L1)X + (u·L10 − L2)Y + (u·L11 − L3)Z = L4 − u   (v analogous),
/// each row scaled by sqrt(score). Views with score < threshold are dropped.
template <typename Scalar>
BasicReconstruction<Scalar> dlt_reconstruct(std::span<const BasicCameraProfile<Scalar>> cams,
                                            std::span<const Observation> obs,
                                            double threshold = kDefaultScoreThreshold) {
  std::vector<const Observation*> used;
  std::vector<std::size_t> cameras;
  for (const auto& o : obs) {
    if (o.camera >= cams.size()) {
      fail(ErrorCode::OutOfRange, "observation references camera " + std::to_string(o.camera));
    }
    if (!(o.score >= threshold) || !(o.score > 0.0)) continue;
    used.push_back(&o);
    cameras.push_back(o.camera);
  }
  std::vector<std::size_t> distinct = cameras;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    fail(ErrorCode::InsufficientViews, std::to_string(distinct.size()) +
                                           " distinct camera(s) above the score threshold");
  }

  const auto rows = static_cast<Eigen::Index>(2 * used.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> A(rows, 3);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b(rows);
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto& L = cams[used[i]->camera].dlt;
    const Scalar u = Scalar(used[i]->point.x());
    const Scalar v = Scalar(used[i]->point.y());
    const Scalar w = Scalar(std::sqrt(used[i]->score));
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.row(r) << u * L[8] - L[0], u * L[9] - L[1], u * L[10] - L[2];
    b[r] = L[3] - u;
    A.row(r + 1) << v * L[8] - L[4], v * L[9] - L[5], v * L[10] - L[6];
    b[r + 1] = L[7] - v;
    A.row(r) *= w;
    A.row(r + 1) *= w;
    b[r] *= w;
    b[r + 1] *= w;
  }

  Eigen::JacobiSVD<decltype(A)> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar smax = sv[0];
  const Scalar smin = sv[sv.size() - 1];
  if (!(smin > Scalar(0)) || smax / smin > Scalar(kMaxConditionNumber)) {
    fail(ErrorCode::RankDeficient, "triangulation system is rank deficient (parallel rays?)");
  }
  BasicReconstruction<Scalar> out;
  out.point = svd.solve(b);
  out.cameras_used = std::move(cameras);

  Scalar sq = 0;
  for (const auto* o : used) {
    const Vec2<Scalar> proj = dlt_project(cams[o->camera].dlt, out.point);
    sq += (proj - o->point.template cast<Scalar>()).squaredNorm();
  }
  using std::sqrt;
  out.rms_residual = sqrt(sq / Scalar(used.size()));
  return out;
}

inline Reconstruction dlt_reconstruct(const std::vector<CameraProfile>& cams,
                                      const std::vector<Observation>& obs,
                                      double threshold = kDefaultScoreThreshold) {
  return dlt_reconstruct<double>(std::span<const CameraProfile>(cams),
                                 std::span<const Observation>(obs), threshold);
}

// ---------------------------------------------------------------------------
// Calibration from 3D-2D correspondences

struct Correspondence {
  Eigen::Vector3d world;
  Eigen::Vector2d image;
};

struct DltFit {
  CameraProfile camera;
  double mean_reprojection_error = 0.0;  // pixels
};

/// Least-squares L1..L11 from >= 6 non-coplanar correspondences. Points are
/// normalized (centroid, isotropic scale) before the orthogonal solve.
DltFit fit_dlt(std::span<const Correspondence> points, std::string name = "camera");

// ---------------------------------------------------------------------------
// Rigid transforms

template <typename Scalar>
struct BasicRigidTransform {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  static BasicRigidTransform identity() { return {}; }

  /// Checks RᵀR = I (1e-9) and det R = +1.
  static BasicRigidTransform make(const Mat3<Scalar>& R, const Vec3<Scalar>& t) {
    using std::abs;
    if ((R.transpose() * R - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() > Scalar(1e-9) ||
        abs(R.determinant() - Scalar(1)) > Scalar(1e-9)) {
      fail(ErrorCode::InvalidTransform, "rotation is not a proper orthonormal matrix");
    }
    return {R, t};
  }

  Vec3<Scalar> operator()(const Vec3<Scalar>& p) const { return rotation * p + translation; }

  /// (a * b)(p) = a(b(p))
  friend BasicRigidTransform operator*(const BasicRigidTransform& a, const BasicRigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }

  BasicRigidTransform inverse() const {
    const Mat3<Scalar> rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};
using RigidTransform = BasicRigidTransform<double>;

/// Transform sending `origin` to 0, `x_axis_point` onto +X and
/// `xy_plane_point` into the z = 0 plane with y >= 0. Right-handed.
template <typename Scalar>
BasicRigidTransform<Scalar> align_axes(const Vec3<Scalar>& origin, const Vec3<Scalar>& x_axis_point,
                                       const Vec3<Scalar>& xy_plane_point) {
  const Vec3<Scalar> a = x_axis_point - origin;
  const Vec3<Scalar> b = xy_plane_point - origin;
  const Scalar scale = std::max(a.norm(), b.norm());
  if (!(a.norm() > Scalar(1e-12) * std::max(scale, Scalar(1)))) {
    fail(ErrorCode::CollinearPoints, "x-axis point coincides with origin");
  }
  const Vec3<Scalar> e1 = a.normalized();
  const Vec3<Scalar> b_perp = b - b.dot(e1) * e1;
  if (!(b_perp.norm() > Scalar(1e-12) * std::max(scale, Scalar(1)))) {
    fail(ErrorCode::CollinearPoints, "alignment points are collinear");
  }
  const Vec3<Scalar> e2 = b_perp.normalized();
  const Vec3<Scalar> e3 = e1.cross(e2);
  Mat3<Scalar> R;
  R.row(0) = e1.transpose();
  R.row(1) = e2.transpose();
  R.row(2) = e3.transpose();
  return {R, -(R * origin)};
}

/// Maps every part's coords through the transform; scores and behaviors kept.
PoseSequence apply_rigid(const RigidTransform& t, const PoseSequence& seq);

}  // namespace cvkit::geometry
