#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cvkit/pose.hpp"

namespace cvkit::behavior {

enum class GridUnits { seconds, score, events, hz };
std::string_view to_string(GridUnits units);
GridUnits parse_grid_units(std::string_view name);

/// 2D histogram. values(ix, iy) covers [x_edges[ix], x_edges[ix+1]) ×
/// [y_edges[iy], y_edges[iy+1]); the last bin on each axis is closed.
struct AnalysisGrid {
  std::string name;
  GridUnits units = GridUnits::score;
  Eigen::VectorXd x_edges;
  Eigen::VectorXd y_edges;
  Eigen::MatrixXd values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> masked;
  std::map<std::string, std::string> metadata;

  static AnalysisGrid uniform(std::string name, GridUnits units, double x_lo, double x_hi,
                              Eigen::Index nx, double y_lo, double y_hi, Eigen::Index ny);

  Eigen::Index nx() const { return values.rows(); }
  Eigen::Index ny() const { return values.cols(); }
  std::optional<std::pair<Eigen::Index, Eigen::Index>> locate(double x, double y) const;
  Eigen::Vector2d center(Eigen::Index ix, Eigen::Index iy) const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Gaze

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  // unit length
};

/// origin = tip, direction = normalize(tip − base). Both parts must be valid
/// under `threshold`.
Ray view_direction(const Skeleton& skel, std::string_view base, std::string_view tip,
                   double threshold = kDefaultScoreThreshold);

struct Wall {
  std::string name;
  Eigen::Vector3d origin;
  Eigen::Vector3d u_axis;  // unit, along width
  Eigen::Vector3d v_axis;  // unit, along height, orthogonal to u
  double width = 0.0;
  double height = 0.0;
  Eigen::Index nu = 1;
  Eigen::Index nv = 1;

  Eigen::Vector3d normal() const { return u_axis.cross(v_axis); }
  void validate() const;
};

struct WallHit {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// In-bounds hit with t > 1e-9, or nothing when behind, parallel or outside.
std::optional<WallHit> ray_wall_intersect(const Eigen::Vector3d& origin,
                                          const Eigen::Vector3d& dir, const Wall& wall);

/// Per frame with a valid view direction, the nearest wall hit deposits a
/// Gaussian splat exp(−d²/2σ²) into every bin center within 3σ. One grid per
/// wall, in input order.
std::vector<AnalysisGrid> gaze_heatmap(const PoseSequence& seq, std::string_view base,
                                       std::string_view tip, const std::vector<Wall>& walls,
                                       double sigma);

/// Wall CSV: name,ox,oy,oz,ux,uy,uz,vx,vy,vz,width,height,nu,nv with a header row.
std::vector<Wall> parse_walls(std::string_view text);
std::vector<Wall> load_walls(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Occupancy and rearing

struct Arena {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  void validate() const;  // DegenerateArena
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

/// Seconds spent per bin by the anchor's (x, y) over valid frames. Frames
/// outside the arena are dropped and counted in metadata["dropped_out_of_bounds"].
AnalysisGrid occupancy_map(const PoseSequence& seq, std::string_view anchor, const Arena& arena,
                           Eigen::Index nx, Eigen::Index ny);

struct RearingEvent {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // inclusive
  std::size_t frames = 0;
  Eigen::Vector2d location = Eigen::Vector2d::Zero();  // mean (x, y) over the run
};

struct RearingResult {
  std::vector<RearingEvent> events;
  AnalysisGrid counts;
};

/// Maximal runs of >= min_frames consecutive valid frames with anchor z >= z_min.
RearingResult detect_rearing(const PoseSequence& seq, std::string_view anchor, double z_min,
                             int min_frames, const Arena& arena, Eigen::Index nx, Eigen::Index ny);

// ---------------------------------------------------------------------------
// Spikes and egocentric boundary maps

struct SpikeTrain {
  std::string cell;
  std::vector<double> times;  // seconds, nondecreasing

  void validate(double duration) const;
};

/// Single column of seconds; a non-numeric first line is taken as a header.
SpikeTrain parse_spike_train(std::string_view text, std::string cell = "cell");
SpikeTrain load_spike_train(const std::filesystem::path& path);

struct EbcParams {
  Eigen::Index angle_bins = 120;
  Eigen::Index dist_bins = 0;  // 0: round(max_dist / 12.5)
  double max_dist = 0.0;       // required
  double min_occupancy_s = 0.2;
};

struct EbcMap {
  AnalysisGrid rate;         // angle (deg) × distance (mm), hz, masked below min occupancy
  Eigen::MatrixXd occupancy; // seconds per bin
  Eigen::MatrixXd spikes;    // spike count per bin
};

/// Per frame, for each egocentric angle bin (0° = head direction, CCW), casts
/// a 2D ray from the anchor to the arena boundary and bins the distance.
EbcMap ebc_rate_map(const PoseSequence& seq, std::string_view anchor, std::string_view base,
                    std::string_view tip, const SpikeTrain& spikes, const Arena& arena,
                    const EbcParams& params);

/// Head direction in the XY plane, degrees in (−180, 180].
double head_direction_deg(const Skeleton& skel, std::size_t base, std::size_t tip);

struct SpikeLocation {
  double time = 0.0;
  double x = 0.0;
  double y = 0.0;
  double head_direction_deg = 0.0;
};

struct SpikeLocationData {
  std::vector<SpikeLocation> spikes;
  std::vector<Eigen::Vector2d> trajectory;
  std::size_t dropped = 0;  // spikes on frames without a valid pose
};

SpikeLocationData spike_location_data(const PoseSequence& seq, std::string_view anchor,
                                      std::string_view base, std::string_view tip,
                                      const SpikeTrain& spikes);

// ---------------------------------------------------------------------------
// Serialization

/// Block format:
///   grid,<name> / units,<u> / x_edges,... / y_edges,... / meta,<k>,<v>*
///   values,<iy>,<v(0,iy)>,... per y bin / mask,<iy>,<0|1>,... per y bin / end
std::string format_grid_csv(const AnalysisGrid& grid);
std::string format_grids_csv(const std::vector<AnalysisGrid>& grids);
std::vector<AnalysisGrid> parse_grids_csv(std::string_view text);

/// False-color heatmap, y axis pointing up. Masked bins render black.
void render_grid_png(const AnalysisGrid& grid, const std::filesystem::path& path,
                     int pixels_per_bin = 8);

std::string format_rearing_csv(const RearingResult& result);
std::string format_spike_locations_csv(const SpikeLocationData& data);

}  // namespace cvkit::behavior
