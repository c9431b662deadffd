#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cvkit/behavior.hpp"
#include "cvkit/pose.hpp"

// Straightforward reference implementations used as test oracles.
namespace cvkit::test {

inline PoseSequence brute_moving_average(const PoseSequence& seq, int window) {
  std::vector<Skeleton> out = seq.skeletons();
  const int n = static_cast<int>(seq.size());
  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    for (int i = 0; i < n; ++i) {
      std::vector<Eigen::VectorXd> vals;
      for (int k = i - window / 2; k <= i + window / 2; ++k) {
        if (k >= 0 && k < n && seq.is_valid(static_cast<std::size_t>(k), j)) {
          vals.push_back(seq[static_cast<std::size_t>(k)].parts[j].coords);
        }
      }
      if (vals.empty()) continue;
      Eigen::VectorXd m = Eigen::VectorXd::Zero(seq.dims());
      for (const auto& v : vals) m += v;
      out[static_cast<std::size_t>(i)].parts[j].coords = m / static_cast<double>(vals.size());
    }
  }
  return seq.with_skeletons(out);
}

inline PoseSequence brute_interpolate(const PoseSequence& seq, int max_gap) {
  std::vector<Skeleton> out = seq.skeletons();
  const int n = static_cast<int>(seq.size());
  for (std::size_t j = 0; j < seq.part_order().size(); ++j) {
    for (int i = 0; i < n; ++i) {
      if (seq.is_valid(static_cast<std::size_t>(i), j)) continue;
      int lo = i - 1, hi = i + 1;
      while (lo >= 0 && !seq.is_valid(static_cast<std::size_t>(lo), j)) --lo;
      while (hi < n && !seq.is_valid(static_cast<std::size_t>(hi), j)) ++hi;
      if (lo < 0 || hi >= n || hi - lo - 1 > max_gap) continue;
      const Part& a = seq[static_cast<std::size_t>(lo)].parts[j];
      const Part& b = seq[static_cast<std::size_t>(hi)].parts[j];
      const double t = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
      Part& p = out[static_cast<std::size_t>(i)].parts[j];
      p.coords = (1.0 - t) * a.coords + t * b.coords;
      p.score = (a.score + b.score) / 2.0;
    }
  }
  return seq.with_skeletons(out);
}

struct MetricOracle {
  double overall = 0.0;
  std::size_t counted = 0;
};

inline double axis_distance(const Part& a, const Part& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.coords.size(); ++k) s += (a.coords[k] - b.coords[k]) * (a.coords[k] - b.coords[k]);
  return std::sqrt(s);
}

inline MetricOracle mpjpe_oracle(const PoseSequence& pred, const PoseSequence& gt) {
  MetricOracle o;
  double total = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < gt.part_order().size(); ++j) {
      if (pred[i].parts[j].score < pred.score_threshold() || gt[i].parts[j].score < gt.score_threshold()) continue;
      total += axis_distance(pred[i].parts[j], gt[i].parts[j]);
      ++o.counted;
    }
  }
  o.overall = total / static_cast<double>(o.counted);
  return o;
}

inline MetricOracle pck_oracle(const PoseSequence& pred, const PoseSequence& gt, double x,
                               std::size_t ref_a, std::size_t ref_b) {
  MetricOracle o;
  double hits = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto& ga = gt[i].parts[ref_a];
    const auto& gb = gt[i].parts[ref_b];
    if (ga.score < gt.score_threshold() || gb.score < gt.score_threshold()) continue;
    const double tau = (x / 100.0) * axis_distance(ga, gb);
    for (std::size_t j = 0; j < gt.part_order().size(); ++j) {
      if (pred[i].parts[j].score < pred.score_threshold() || gt[i].parts[j].score < gt.score_threshold()) continue;
      if (axis_distance(pred[i].parts[j], gt[i].parts[j]) <= tau) hits += 1.0;
      ++o.counted;
    }
  }
  o.overall = hits / static_cast<double>(o.counted);
  return o;
}

/// Ray/rectangle intersection by solving origin + t·d = o + u·U + v·V.
inline std::optional<behavior::WallHit> ray_wall_oracle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                                        const behavior::Wall& wall) {
  Eigen::Matrix3d A;
  A.col(0) = dir;
  A.col(1) = -wall.u_axis;
  A.col(2) = -wall.v_axis;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
  if (!lu.isInvertible() || std::abs(dir.dot(wall.normal())) < 1e-12) return std::nullopt;
  const Eigen::Vector3d s = lu.solve(wall.origin - origin);
  if (!(s[0] > 1e-9) || s[1] < 0.0 || s[1] > wall.width || s[2] < 0.0 || s[2] > wall.height) return std::nullopt;
  return behavior::WallHit{s[0], s[1], s[2]};
}

}  // namespace cvkit::test
