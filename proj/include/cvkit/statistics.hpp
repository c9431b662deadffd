#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cvkit/pose.hpp"

namespace cvkit::pipeline {

/// Coordinate ranges and means cover valid frames only and are NaN when a
/// part has none.
struct PartStatistics {
  std::string part;
  std::size_t valid_frames = 0;
  double valid_fraction = 0.0;
  double mean_score = 0.0;
  Eigen::VectorXd min;
  Eigen::VectorXd max;
  Eigen::VectorXd mean;
};

struct InputStatistics {
  std::size_t frames = 0;
  double fps = 0.0;
  int dims = 0;
  std::vector<PartStatistics> parts;
};

/// Throws EmptySequence.
InputStatistics input_statistics(const PoseSequence& seq);

/// `scope,key,value` rows: sequence,frames / sequence,fps / sequence,dims,
/// then `<part>,valid_fraction`, `<part>,mean_score`, `<part>,min_<axis>` ...
std::string format_statistics_csv(const InputStatistics& stats);

}  // namespace cvkit::pipeline
