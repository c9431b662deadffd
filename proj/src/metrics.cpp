#include "cvkit/metrics.hpp"

#include <cmath>
#include <limits>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::metrics {

namespace {

void check_shapes(const PoseSequence& pred, const PoseSequence& gt) {
  if (pred.dims() != gt.dims()) fail(ErrorCode::ShapeMismatch, "dims differ");
  if (pred.part_order() != gt.part_order()) fail(ErrorCode::ShapeMismatch, "part order differs");
  if (pred.size() != gt.size()) {
    fail(ErrorCode::ShapeMismatch, "lengths differ: " + std::to_string(pred.size()) + " vs " +
                                       std::to_string(gt.size()));
  }
}

MetricReport blank_report(std::string name, const PoseSequence& gt) {
  MetricReport r;
  r.name = std::move(name);
  r.parts = gt.part_order();
  r.per_part.assign(r.parts.size(), 0.0);
  for (const auto& s : gt.skeletons()) r.frames.push_back(s.frame_index);
  r.per_frame.assign(gt.size(), 0.0);
  return r;
}

// Turns accumulated sums into means, NaN where the count is zero.
void finish(MetricReport& r, double total, const std::vector<std::size_t>& part_count,
            const std::vector<std::size_t>& frame_count) {
  if (r.counted_pairs == 0) fail(ErrorCode::NoValidPairs, "no pair is valid in both sequences");
  r.overall = total / static_cast<double>(r.counted_pairs);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < r.per_part.size(); ++j) {
    r.per_part[j] = part_count[j] ? r.per_part[j] / static_cast<double>(part_count[j]) : nan;
  }
  for (std::size_t i = 0; i < r.per_frame.size(); ++i) {
    r.per_frame[i] = frame_count[i] ? r.per_frame[i] / static_cast<double>(frame_count[i]) : nan;
  }
}

}  // namespace

MetricReport mpjpe(const PoseSequence& pred, const PoseSequence& gt) {
  check_shapes(pred, gt);
  MetricReport r = blank_report("mpjpe", gt);
  std::vector<std::size_t> part_count(r.parts.size(), 0);
  std::vector<std::size_t> frame_count(gt.size(), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < r.parts.size(); ++j) {
      if (!pred.is_valid(i, j) || !gt.is_valid(i, j)) continue;
      const double d = part_distance(pred[i].parts[j], gt[i].parts[j]);
      total += d;
      r.per_part[j] += d;
      r.per_frame[i] += d;
      ++part_count[j];
      ++frame_count[i];
      ++r.counted_pairs;
    }
  }
  finish(r, total, part_count, frame_count);
  return r;
}

MetricReport pck(const PoseSequence& pred, const PoseSequence& gt, double x_percent,
                 std::string_view ref_a, std::string_view ref_b) {
  check_shapes(pred, gt);
  const auto a = gt.part_index(ref_a);
  const auto b = gt.part_index(ref_b);
  if (!a || !b) {
    fail(ErrorCode::MissingReferencePart,
         "reference parts " + std::string(ref_a) + ", " + std::string(ref_b) + " not in sequence");
  }
  if (!(x_percent > 0.0)) fail(ErrorCode::InvalidParameter, "x_percent must be > 0");
  MetricReport r = blank_report("pck", gt);
  std::vector<std::size_t> part_count(r.parts.size(), 0);
  std::vector<std::size_t> frame_count(gt.size(), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.is_valid(i, *a) || !gt.is_valid(i, *b)) continue;
    const double tau = (x_percent / 100.0) * part_distance(gt[i].parts[*a], gt[i].parts[*b]);
    for (std::size_t j = 0; j < r.parts.size(); ++j) {
      if (!pred.is_valid(i, j) || !gt.is_valid(i, j)) continue;
      const double hit = part_distance(pred[i].parts[j], gt[i].parts[j]) <= tau ? 1.0 : 0.0;
      total += hit;
      r.per_part[j] += hit;
      r.per_frame[i] += hit;
      ++part_count[j];
      ++frame_count[i];
      ++r.counted_pairs;
    }
  }
  finish(r, total, part_count, frame_count);
  return r;
}

std::string format_report_csv(const MetricReport& report) {
  std::string out = "scope,key,value\n";
  out += "overall," + report.name + "," + csv::format_double(report.overall) + "\n";
  out += "overall,counted_pairs," + std::to_string(report.counted_pairs) + "\n";
  for (std::size_t j = 0; j < report.parts.size(); ++j) {
    out += "part," + report.parts[j] + "," + csv::format_double(report.per_part[j]) + "\n";
  }
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    out += "frame," + std::to_string(report.frames[i]) + "," +
           csv::format_double(report.per_frame[i]) + "\n";
  }
  return out;
}

}  // namespace cvkit::metrics
