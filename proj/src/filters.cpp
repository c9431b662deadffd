#include "cvkit/filters.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cvkit/errors.hpp"

namespace cvkit::filters {

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 transition() {
  Mat3 F;
  F << 1.0, 1.0, 0.5,
       0.0, 1.0, 1.0,
       0.0, 0.0, 1.0;
  return F;
}

// Discrete white-jerk process noise for Δ = 1, scaled by q.
Mat3 white_jerk(double q) {
  Mat3 Q;
  Q << 1.0 / 20.0, 1.0 / 8.0, 1.0 / 6.0,
       1.0 / 8.0,  1.0 / 3.0, 1.0 / 2.0,
       1.0 / 6.0,  1.0 / 2.0, 1.0;
  return q * Q;
}

std::vector<Skeleton> copy_frames(const PoseSequence& seq) { return seq.skeletons(); }

}  // namespace

void KalmanParams::validate() const {
  if (!(process_noise > 0.0) || !(measurement_noise > 0.0) || !(initial_variance > 0.0)) {
    fail(ErrorCode::InvalidParameter, "Kalman parameters must be strictly positive");
  }
}

PoseSequence kalman_filter(const PoseSequence& seq, const KalmanParams& params) {
  params.validate();
  if (seq.empty()) fail(ErrorCode::EmptySequence, "kalman_filter needs at least one frame");

  const Mat3 F = transition();
  const Mat3 Q = white_jerk(params.process_noise);
  const double threshold = seq.score_threshold();
  const double below = std::nextafter(threshold, 0.0);
  const int dims = seq.dims();
  auto out = copy_frames(seq);

  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    // Every axis shares the same covariance; state columns are axes.
    Eigen::Matrix3Xd x(3, dims);
    Mat3 P;
    bool started = false;
    double posterior_var = params.initial_variance;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      Part& part = out[i].parts[j];
      const bool valid = seq.is_valid(i, j);
      if (!started) {
        if (!valid) continue;
        x.setZero();
        x.row(0) = part.coords.transpose();
        P = Mat3::Identity() * params.initial_variance;
        posterior_var = P(0, 0);
        started = true;
        continue;
      }
      x = F * x;
      P = F * P * F.transpose() + Q;
      if (valid) {
        const double R = params.measurement_noise / part.score;
        const double S = P(0, 0) + R;
        const Eigen::Vector3d K = P.col(0) / S;
        const Eigen::RowVectorXd innovation = part.coords.transpose() - x.row(0);
        x += K * innovation;
        // Joseph form keeps P symmetric positive definite.
        Mat3 IKH = Mat3::Identity();
        IKH.col(0) -= K;
        P = IKH * P * IKH.transpose() + K * K.transpose() * R;
        posterior_var = P(0, 0);
        part.coords = x.row(0).transpose();
      } else {
        part.coords = x.row(0).transpose();
        part.score = std::min(threshold * (posterior_var / P(0, 0)), below);
        if (part.score < 0.0) part.score = 0.0;
      }
    }
  }
  return seq.with_skeletons(std::move(out));
}

PoseSequence linear_interpolate(const PoseSequence& seq, int max_gap) {
  if (max_gap < 1) fail(ErrorCode::InvalidParameter, "max_gap must be >= 1");
  auto out = copy_frames(seq);
  const std::size_t n = seq.size();
  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    std::size_t i = 0;
    while (i < n) {
      if (seq.is_valid(i, j)) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      while (i < n && !seq.is_valid(i, j)) ++i;
      // Run [start, i) is invalid; it needs valid frames on both sides.
      if (start == 0 || i == n) continue;
      const std::size_t gap = i - start;
      if (gap > static_cast<std::size_t>(max_gap)) continue;
      const Part& a = seq[start - 1].parts[j];
      const Part& b = seq[i].parts[j];
      const double span = static_cast<double>(gap + 1);
      for (std::size_t k = start; k < i; ++k) {
        const double t = static_cast<double>(k - start + 1) / span;
        Part& p = out[k].parts[j];
        p.coords = a.coords + t * (b.coords - a.coords);
        p.score = 0.5 * (a.score + b.score);
      }
    }
  }
  return seq.with_skeletons(std::move(out));
}

PoseSequence moving_average(const PoseSequence& seq, int window) {
  if (window < 1 || window % 2 == 0) {
    fail(ErrorCode::EvenWindow, "window must be a positive odd number, got " + std::to_string(window));
  }
  auto out = copy_frames(seq);
  const auto n = static_cast<long>(seq.size());
  const long half = window / 2;
  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    for (long i = 0; i < n; ++i) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(seq.dims());
      int count = 0;
      for (long k = std::max(0L, i - half); k <= std::min(n - 1, i + half); ++k) {
        if (!seq.is_valid(static_cast<std::size_t>(k), j)) continue;
        sum += seq[static_cast<std::size_t>(k)].parts[j].coords;
        ++count;
      }
      if (count > 0) out[static_cast<std::size_t>(i)].parts[j].coords = sum / count;
    }
  }
  return seq.with_skeletons(std::move(out));
}

PoseSequence velocity_filter(const PoseSequence& seq, double max_speed) {
  if (!(max_speed > 0.0)) fail(ErrorCode::InvalidParameter, "max_speed must be > 0");
  auto out = copy_frames(seq);
  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (!seq.is_valid(i, j)) continue;
      if (!last) {
        last = i;
        continue;
      }
      const double gap = static_cast<double>(seq[i].frame_index - seq[*last].frame_index);
      const double speed = part_distance(seq[i].parts[j], seq[*last].parts[j]) / gap;
      if (speed > max_speed) {
        out[i].parts[j].score = 0.0;
      } else {
        last = i;
      }
    }
  }
  return seq.with_skeletons(std::move(out));
}

PoseSequence statistical_distance_filter(const PoseSequence& seq, int window, double z_max) {
  if (window < 3) fail(ErrorCode::InvalidParameter, "window must be >= 3");
  if (!(z_max > 0.0)) fail(ErrorCode::InvalidParameter, "z_max must be > 0");
  auto out = copy_frames(seq);
  const auto n = static_cast<long>(seq.size());
  const long half = window / 2;
  const int dims = seq.dims();
  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    for (long i = 0; i < n; ++i) {
      const auto fi = static_cast<std::size_t>(i);
      if (!seq.is_valid(fi, j)) continue;
      std::vector<std::size_t> neighbors;
      for (long k = std::max(0L, i - half); k <= std::min(n - 1, i + half); ++k) {
        const auto fk = static_cast<std::size_t>(k);
        if (k != i && seq.is_valid(fk, j)) neighbors.push_back(fk);
      }
      if (neighbors.size() < 3) continue;
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(dims);
      for (auto k : neighbors) mean += seq[k].parts[j].coords;
      mean /= static_cast<double>(neighbors.size());
      double sq = 0.0;
      for (auto k : neighbors) sq += (seq[k].parts[j].coords - mean).squaredNorm();
      const double scatter = std::sqrt(sq / static_cast<double>(neighbors.size()));
      if (scatter < kZeroScatter) continue;
      const double distance = (seq[fi].parts[j].coords - mean).norm();
      if (distance > z_max * scatter) out[fi].parts[j].score = 0.0;
    }
  }
  return seq.with_skeletons(std::move(out));
}

}  // namespace cvkit::filters
