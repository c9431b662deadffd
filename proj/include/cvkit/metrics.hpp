#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cvkit/pose.hpp"

namespace cvkit::metrics {

/// `overall` is the mean over all counted (frame, part) pairs. Per-part and
/// per-frame entries are NaN where nothing was counted.
struct MetricReport {
  std::string name;
  double overall = 0.0;
  std::vector<std::string> parts;
  std::vector<double> per_part;
  std::vector<std::int64_t> frames;
  std::vector<double> per_frame;
  std::size_t counted_pairs = 0;
};

/// Mean Euclidean distance over pairs where both pred and gt are valid
/// (each against its own sequence's score threshold).
MetricReport mpjpe(const PoseSequence& pred, const PoseSequence& gt);

/// Fraction of counted pairs with error <= (x_percent / 100) · |gt ref_a − gt ref_b|
/// on the same frame. Frames whose reference parts are invalid in gt are skipped.
MetricReport pck(const PoseSequence& pred, const PoseSequence& gt, double x_percent,
                 std::string_view ref_a, std::string_view ref_b);

/// `scope,key,value` rows: overall, count, one per part, one per frame.
std::string format_report_csv(const MetricReport& report);

}  // namespace cvkit::metrics
