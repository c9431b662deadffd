#pragma once

#include "cvkit/pose.hpp"

// Dimension-independent trajectory filters. Each one maps a PoseSequence to a
// new PoseSequence with identical length, dims, fps, part order and frame
// indices, treating every part independently.
namespace cvkit::filters {

struct KalmanParams {
  double process_noise = 0.01;       // q, scales the discrete white-jerk covariance
  double measurement_noise = 1.0;    // r, coordinate units squared
  double initial_variance = 100.0;   // p0

  void validate() const;
};

/// Constant-acceleration Kalman filter per part and axis (Δ = 1 frame).
/// Measurement variance is r / score; invalid frames are predict-only and
/// receive score = threshold · (last posterior variance / predicted
/// variance), capped below the threshold. Frames before a part's first
/// valid observation are left untouched.
PoseSequence kalman_filter(const PoseSequence& seq, const KalmanParams& params = {});

/// Fills interior runs of at most `max_gap` invalid frames by linear
/// interpolation between the bounding valid frames.
PoseSequence linear_interpolate(const PoseSequence& seq, int max_gap = 10);

/// Centered mean of the valid coordinates inside an odd window.
PoseSequence moving_average(const PoseSequence& seq, int window = 5);

/// Invalidates frames implying a speed above `max_speed` (units per frame)
/// relative to the last accepted frame.
PoseSequence velocity_filter(const PoseSequence& seq, double max_speed);

/// Invalidates frames whose distance to the leave-one-out window mean exceeds
/// `z_max` times the RMS scatter of the window's other valid coordinates.
PoseSequence statistical_distance_filter(const PoseSequence& seq, int window, double z_max);

inline constexpr double kZeroScatter = 1e-12;

}  // namespace cvkit::filters
