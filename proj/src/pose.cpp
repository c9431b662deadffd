#include "cvkit/pose.hpp"

#include <cmath>
#include <unordered_set>

#include "cvkit/errors.hpp"

namespace cvkit {

namespace {

void require_same_dims(const Part& a, const Part& b) {
  if (a.dims() != b.dims()) {
    fail(ErrorCode::DimMismatch, a.name + " has " + std::to_string(a.dims()) + " dims, " + b.name +
                                     " has " + std::to_string(b.dims()));
  }
}

}  // namespace

Part operator+(const Part& a, const Part& b) {
  require_same_dims(a, b);
  return {a.name, a.coords + b.coords, a.score};
}

Part operator-(const Part& a, const Part& b) {
  require_same_dims(a, b);
  return {a.name, a.coords - b.coords, a.score};
}

Part operator*(const Part& a, double s) { return {a.name, a.coords * s, a.score}; }
Part operator*(double s, const Part& a) { return a * s; }

bool operator==(const Part& a, const Part& b) {
  return a.name == b.name && a.score == b.score && a.coords.size() == b.coords.size() &&
         a.coords == b.coords;
}

double part_distance(const Part& a, const Part& b) {
  require_same_dims(a, b);
  // Axis-order accumulation.
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.dims(); ++i) {
    const double d = a.coords[i] - b.coords[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

const Part* Skeleton::find(std::string_view name) const {
  for (const auto& p : parts) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Part* Skeleton::find(std::string_view name) {
  for (auto& p : parts) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Part& Skeleton::part(std::string_view name) const {
  if (const Part* p = find(name)) return *p;
  fail(ErrorCode::InvalidParts, "no part named " + std::string(name));
}

Part& Skeleton::part(std::string_view name) {
  if (Part* p = find(name)) return *p;
  fail(ErrorCode::InvalidParts, "no part named " + std::string(name));
}

PoseSequence::PoseSequence(std::vector<std::string> part_order, int dims, double fps,
                           double score_threshold, std::vector<Skeleton> skeletons)
    : part_order_(std::move(part_order)),
      dims_(dims),
      fps_(fps),
      score_threshold_(score_threshold),
      skeletons_(std::move(skeletons)) {
  validate();
}

void PoseSequence::validate() const {
  if (dims_ < 2) fail(ErrorCode::InvalidSequence, "dims must be >= 2");
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) fail(ErrorCode::InvalidSequence, "fps must be > 0");
  if (!(score_threshold_ >= 0.0 && score_threshold_ <= 1.0)) {
    fail(ErrorCode::InvalidSequence, "score threshold must lie in [0,1]");
  }
  if (part_order_.empty()) fail(ErrorCode::InvalidSequence, "part order is empty");
  std::unordered_set<std::string> seen;
  for (const auto& name : part_order_) {
    if (name.empty()) fail(ErrorCode::InvalidSequence, "empty part name");
    if (!seen.insert(name).second) fail(ErrorCode::InvalidSequence, "duplicate part " + name);
  }
  std::int64_t previous = -1;
  for (const auto& s : skeletons_) {
    if (s.frame_index <= previous) {
      fail(ErrorCode::InvalidSequence,
           "frame index " + std::to_string(s.frame_index) + " is not strictly increasing");
    }
    previous = s.frame_index;
    if (s.parts.size() != part_order_.size()) {
      fail(ErrorCode::InvalidSequence, "frame " + std::to_string(s.frame_index) +
                                           " does not cover the part order");
    }
    for (std::size_t j = 0; j < s.parts.size(); ++j) {
      const Part& p = s.parts[j];
      if (p.name != part_order_[j]) {
        fail(ErrorCode::InvalidSequence, "frame " + std::to_string(s.frame_index) +
                                             " has part " + p.name + " where " + part_order_[j] +
                                             " was expected");
      }
      if (p.dims() != dims_) {
        fail(ErrorCode::InvalidSequence, "frame " + std::to_string(s.frame_index) + " part " +
                                             p.name + " has wrong dimensionality");
      }
      if (!(p.score >= 0.0 && p.score <= 1.0)) {
        fail(ErrorCode::InvalidSequence, "frame " + std::to_string(s.frame_index) + " part " +
                                             p.name + " score outside [0,1]");
      }
    }
  }
}

std::optional<std::size_t> PoseSequence::part_index(std::string_view name) const {
  for (std::size_t i = 0; i < part_order_.size(); ++i) {
    if (part_order_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t PoseSequence::require_part(std::string_view name) const {
  if (auto idx = part_index(name)) return *idx;
  fail(ErrorCode::InvalidParts, "sequence has no part named " + std::string(name));
}

PoseSequence PoseSequence::with_skeletons(std::vector<Skeleton> skeletons) const {
  return PoseSequence(part_order_, dims_, fps_, score_threshold_, std::move(skeletons));
}

Skeleton PoseSequence::blank_skeleton(std::int64_t frame_index) const {
  Skeleton s;
  s.frame_index = frame_index;
  s.parts.reserve(part_order_.size());
  for (const auto& name : part_order_) {
    s.parts.push_back({name, Eigen::VectorXd::Zero(dims_), 0.0});
  }
  return s;
}

Eigen::MatrixXd PoseSequence::part_coords(std::size_t part) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), dims_);
  for (std::size_t i = 0; i < size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = skeletons_[i].parts[part].coords.transpose();
  }
  return out;
}

Eigen::VectorXd PoseSequence::part_scores(std::size_t part) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = skeletons_[i].parts[part].score;
  }
  return out;
}

PoseSequence PoseSequence::select_parts(const std::vector<std::string>& parts) const {
  std::vector<std::size_t> idx;
  for (const auto& name : parts) idx.push_back(require_part(name));
  std::vector<Skeleton> out;
  out.reserve(size());
  for (const auto& s : skeletons_) {
    Skeleton t;
    t.frame_index = s.frame_index;
    t.behaviors = s.behaviors;
    for (auto j : idx) t.parts.push_back(s.parts[j]);
    out.push_back(std::move(t));
  }
  return PoseSequence(parts, dims_, fps_, score_threshold_, std::move(out));
}

bool same_content(const PoseSequence& a, const PoseSequence& b, double coord_tol) {
  if (a.dims() != b.dims() || a.part_order() != b.part_order() || a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& sa = a[i];
    const auto& sb = b[i];
    if (sa.frame_index != sb.frame_index || sa.behaviors != sb.behaviors) return false;
    for (std::size_t j = 0; j < sa.parts.size(); ++j) {
      if (sa.parts[j].score != sb.parts[j].score) return false;
      if ((sa.parts[j].coords - sb.parts[j].coords).cwiseAbs().maxCoeff() > coord_tol) return false;
    }
  }
  return true;
}

}  // namespace cvkit
