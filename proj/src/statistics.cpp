#include "cvkit/statistics.hpp"

#include <cmath>
#include <limits>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::pipeline {

InputStatistics input_statistics(const PoseSequence& seq) {
  if (seq.empty()) fail(ErrorCode::EmptySequence, "input statistics of an empty sequence");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Eigen::Index d = seq.dims();
  InputStatistics out;
  out.frames = seq.size();
  out.fps = seq.fps();
  out.dims = seq.dims();
  for (std::size_t p = 0; p < seq.part_order().size(); ++p) {
    PartStatistics s;
    s.part = seq.part_order()[p];
    s.min = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
    s.max = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    double score_sum = 0.0;
    for (std::size_t f = 0; f < seq.size(); ++f) {
      const Part& part = seq[f].parts[p];
      score_sum += part.score;
      if (!seq.is_valid(f, p)) continue;
      ++s.valid_frames;
      for (Eigen::Index k = 0; k < d; ++k) {
        s.min[k] = std::min(s.min[k], part.coords[k]);
        s.max[k] = std::max(s.max[k], part.coords[k]);
        sum[k] += part.coords[k];
      }
    }
    s.valid_fraction = static_cast<double>(s.valid_frames) / static_cast<double>(seq.size());
    s.mean_score = score_sum / static_cast<double>(seq.size());
    if (s.valid_frames == 0) {
      s.min.setConstant(nan);
      s.max.setConstant(nan);
      s.mean = Eigen::VectorXd::Constant(d, nan);
    } else {
      s.mean = sum / static_cast<double>(s.valid_frames);
    }
    out.parts.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string axis_name(Eigen::Index k) {
  static const char* names[] = {"x", "y", "z"};
  return k < 3 ? names[k] : "c" + std::to_string(k);
}

}  // namespace

std::string format_statistics_csv(const InputStatistics& stats) {
  std::string out = "scope,key,value\n";
  auto row = [&](const std::string& scope, const std::string& key, const std::string& value) {
    out += scope + "," + key + "," + value + "\n";
  };
  row("sequence", "frames", std::to_string(stats.frames));
  row("sequence", "fps", csv::format_double(stats.fps));
  row("sequence", "dims", std::to_string(stats.dims));
  for (const auto& p : stats.parts) {
    row(p.part, "valid_frames", std::to_string(p.valid_frames));
    row(p.part, "valid_fraction", csv::format_double(p.valid_fraction));
    row(p.part, "mean_score", csv::format_double(p.mean_score));
    for (Eigen::Index k = 0; k < p.min.size(); ++k) {
      row(p.part, "min_" + axis_name(k), csv::format_double(p.min[k]));
      row(p.part, "max_" + axis_name(k), csv::format_double(p.max[k]));
      row(p.part, "mean_" + axis_name(k), csv::format_double(p.mean[k]));
    }
  }
  return out;
}

}  // namespace cvkit::pipeline
