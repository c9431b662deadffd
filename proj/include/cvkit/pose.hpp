#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cvkit {

inline constexpr double kDefaultScoreThreshold = 0.6;
inline constexpr double kDefaultFps = 30.0;

/// One named keypoint: D coordinates plus a confidence score in [0,1].
/// Arithmetic acts on coords only; the left operand's name and score carry over.
struct Part {
  std::string name;
  Eigen::VectorXd coords;
  double score = 0.0;

  Eigen::Index dims() const { return coords.size(); }
  bool valid(double threshold) const { return score >= threshold; }
};

Part operator+(const Part& a, const Part& b);
Part operator-(const Part& a, const Part& b);
Part operator*(const Part& a, double s);
Part operator*(double s, const Part& a);

bool operator==(const Part& a, const Part& b);

/// Euclidean distance between coordinate vectors. Throws DimMismatch.
double part_distance(const Part& a, const Part& b);

/// One frame's pose. `parts` follows the owning sequence's part order.
struct Skeleton {
  std::int64_t frame_index = 0;
  std::vector<Part> parts;
  std::set<std::string> behaviors;

  const Part* find(std::string_view name) const;
  Part* find(std::string_view name);
  const Part& part(std::string_view name) const;
  Part& part(std::string_view name);

  bool operator==(const Skeleton&) const = default;
};

/// Ordered per-frame poses with shared dimensionality and part set.
/// Construction validates every invariant; instances are treated as values.
class PoseSequence {
 public:
  PoseSequence(std::vector<std::string> part_order, int dims, double fps = kDefaultFps,
               double score_threshold = kDefaultScoreThreshold,
               std::vector<Skeleton> skeletons = {});

  const std::vector<Skeleton>& skeletons() const { return skeletons_; }
  const std::vector<std::string>& part_order() const { return part_order_; }
  int dims() const { return dims_; }
  double fps() const { return fps_; }
  double score_threshold() const { return score_threshold_; }

  std::size_t size() const { return skeletons_.size(); }
  bool empty() const { return skeletons_.empty(); }
  const Skeleton& operator[](std::size_t i) const { return skeletons_[i]; }

  std::optional<std::size_t> part_index(std::string_view name) const;
  std::size_t require_part(std::string_view name) const;

  bool is_valid(std::size_t frame, std::size_t part) const {
    return skeletons_[frame].parts[part].valid(score_threshold_);
  }

  /// Same metadata, different frames (validated).
  PoseSequence with_skeletons(std::vector<Skeleton> skeletons) const;

  /// A skeleton with every part invalid (score 0, zero coords).
  Skeleton blank_skeleton(std::int64_t frame_index) const;

  /// N×D coordinates of one part, and its N scores.
  Eigen::MatrixXd part_coords(std::size_t part) const;
  Eigen::VectorXd part_scores(std::size_t part) const;

  /// Restriction to a subset of parts (keeps order of `parts`).
  PoseSequence select_parts(const std::vector<std::string>& parts) const;

  bool operator==(const PoseSequence&) const = default;

 private:
  void validate() const;

  std::vector<std::string> part_order_;
  int dims_;
  double fps_;
  double score_threshold_;
  std::vector<Skeleton> skeletons_;
};

/// Frame-by-frame equality with a coordinate tolerance; scores, names,
/// behaviors and frame indices must match exactly.
bool same_content(const PoseSequence& a, const PoseSequence& b, double coord_tol);

}  // namespace cvkit
