#include "cvkit/geometry.hpp"

namespace cvkit::geometry {

WorkingVolume::WorkingVolume(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi)
    : min(lo), max(hi) {
  if (!(min.array() < max.array()).all()) {
    fail(ErrorCode::InvalidParameter, "working volume needs min < max on every axis");
  }
}

bool WorkingVolume::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

namespace {

// Similarity that moves the centroid to 0 and scales the mean distance to sqrt(n).
template <int N>
Eigen::Matrix<double, N + 1, N + 1> normalizer(const std::vector<Eigen::Matrix<double, N, 1>>& pts) {
  Eigen::Matrix<double, N, 1> c = Eigen::Matrix<double, N, 1>::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0.0 ? std::sqrt(static_cast<double>(N)) / mean : 1.0;
  Eigen::Matrix<double, N + 1, N + 1> T = Eigen::Matrix<double, N + 1, N + 1>::Identity();
  T.template topLeftCorner<N, N>() *= s;
  T.template topRightCorner<N, 1>() = -s * c;
  return T;
}

}  // namespace

DltFit fit_dlt(std::span<const Correspondence> points, std::string name) {
  if (points.size() < 6) {
    fail(ErrorCode::TooFewPoints, "need at least 6 correspondences, got " +
                                      std::to_string(points.size()));
  }
  std::vector<Eigen::Vector3d> world;
  std::vector<Eigen::Vector2d> image;
  for (const auto& c : points) {
    world.push_back(c.world);
    image.push_back(c.image);
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& w : world) mean += w;
  mean /= static_cast<double>(world.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& w : world) cov += (w - mean) * (w - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const auto& ev = eig.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[0] <= 1e-12 * ev[2]) {
    fail(ErrorCode::CoplanarPoints, "calibration points are coplanar");
  }

  const Eigen::Matrix4d T3 = normalizer<3>(world);
  const Eigen::Matrix3d T2 = normalizer<2>(image);

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 11);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d X = (T3 * world[i].homogeneous()).head<3>();
    const Eigen::Vector2d x = (T2 * image[i].homogeneous()).head<2>();
    A.block<1, 3>(2 * i, 0) = X.transpose();
    A(2 * i, 3) = 1.0;
    A.block<1, 3>(2 * i, 8) = -x.x() * X.transpose();
    b[2 * i] = x.x();
    A.block<1, 3>(2 * i + 1, 4) = X.transpose();
    A(2 * i + 1, 7) = 1.0;
    A.block<1, 3>(2 * i + 1, 8) = -x.y() * X.transpose();
    b[2 * i + 1] = x.y();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 11) fail(ErrorCode::CoplanarPoints, "degenerate correspondence configuration");
  const Dlt<double> normalized = qr.solve(b);

  const Mat34<double> P = T2.inverse() * dlt_to_projection(normalized) * T3;
  DltFit fit;
  fit.camera.name = std::move(name);
  fit.camera.dlt = projection_to_dlt(P);

  double err = 0.0;
  for (std::size_t i = 0; i < world.size(); ++i) {
    err += (dlt_project(fit.camera.dlt, world[i]) - image[i]).norm();
  }
  fit.mean_reprojection_error = err / static_cast<double>(world.size());
  return fit;
}

PoseSequence apply_rigid(const RigidTransform& t, const PoseSequence& seq) {
  if (seq.dims() != 3) fail(ErrorCode::Not3D, "rigid transforms need 3D poses");
  std::vector<Skeleton> out = seq.skeletons();
  for (auto& s : out) {
    for (auto& p : s.parts) {
      p.coords = t(Eigen::Vector3d(p.coords));
    }
  }
  return seq.with_skeletons(std::move(out));
}

}  // namespace cvkit::geometry
