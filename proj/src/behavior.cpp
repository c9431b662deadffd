#include "cvkit/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::behavior {

std::string_view to_string(GridUnits units) {
  switch (units) {
    case GridUnits::seconds: return "seconds";
    case GridUnits::score: return "score";
    case GridUnits::events: return "events";
    case GridUnits::hz: return "hz";
  }
  return "score";
}

GridUnits parse_grid_units(std::string_view name) {
  if (name == "seconds") return GridUnits::seconds;
  if (name == "score") return GridUnits::score;
  if (name == "events") return GridUnits::events;
  if (name == "hz") return GridUnits::hz;
  fail(ErrorCode::MalformedCsv, "unknown grid units '" + std::string(name) + "'");
}

AnalysisGrid AnalysisGrid::uniform(std::string name, GridUnits units, double x_lo, double x_hi,
                                   Eigen::Index nx, double y_lo, double y_hi, Eigen::Index ny) {
  if (nx < 1 || ny < 1) fail(ErrorCode::BadBins, "grid needs at least one bin per axis");
  if (!(x_lo < x_hi) || !(y_lo < y_hi)) fail(ErrorCode::BadBins, "grid extent must be positive");
  AnalysisGrid g;
  g.name = std::move(name);
  g.units = units;
  g.x_edges = Eigen::VectorXd::LinSpaced(nx + 1, x_lo, x_hi);
  g.y_edges = Eigen::VectorXd::LinSpaced(ny + 1, y_lo, y_hi);
  g.values = Eigen::MatrixXd::Zero(nx, ny);
  g.masked = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(nx, ny, false);
  return g;
}

namespace {

std::optional<Eigen::Index> locate_axis(const Eigen::VectorXd& edges, double x) {
  const auto n = edges.size() - 1;
  if (!(x >= edges[0]) || !(x <= edges[n])) return std::nullopt;
  if (x == edges[n]) return n - 1;
  const double* begin = edges.data();
  const double* it = std::upper_bound(begin, begin + edges.size(), x);
  return static_cast<Eigen::Index>(it - begin) - 1;
}

constexpr double kDeg = 180.0 / std::numbers::pi;

}  // namespace

std::optional<std::pair<Eigen::Index, Eigen::Index>> AnalysisGrid::locate(double x, double y) const {
  auto ix = locate_axis(x_edges, x);
  auto iy = locate_axis(y_edges, y);
  if (!ix || !iy) return std::nullopt;
  return std::make_pair(*ix, *iy);
}

Eigen::Vector2d AnalysisGrid::center(Eigen::Index ix, Eigen::Index iy) const {
  return {0.5 * (x_edges[ix] + x_edges[ix + 1]), 0.5 * (y_edges[iy] + y_edges[iy + 1])};
}

void AnalysisGrid::validate() const {
  if (x_edges.size() != values.rows() + 1 || y_edges.size() != values.cols() + 1) {
    fail(ErrorCode::BadBins, "edge count does not match values");
  }
  for (Eigen::Index i = 1; i < x_edges.size(); ++i) {
    if (!(x_edges[i] > x_edges[i - 1])) fail(ErrorCode::BadBins, "x edges not increasing");
  }
  for (Eigen::Index i = 1; i < y_edges.size(); ++i) {
    if (!(y_edges[i] > y_edges[i - 1])) fail(ErrorCode::BadBins, "y edges not increasing");
  }
  if ((values.array() < 0.0).any()) fail(ErrorCode::BadBins, "negative grid value");
}

// ---------------------------------------------------------------------------

Ray view_direction(const Skeleton& skel, std::string_view base, std::string_view tip,
                   double threshold) {
  const Part* b = skel.find(base);
  const Part* t = skel.find(tip);
  if (!b || !t) fail(ErrorCode::InvalidParts, "missing view parts");
  if (!b->valid(threshold) || !t->valid(threshold)) {
    fail(ErrorCode::InvalidParts, "view parts invalid at frame " + std::to_string(skel.frame_index));
  }
  if (b->dims() != 3) fail(ErrorCode::Not3D, "view direction needs 3D parts");
  const Eigen::Vector3d d = t->coords - b->coords;
  const double n = d.norm();
  if (!(n > 0.0)) fail(ErrorCode::CoincidentParts, "base and tip coincide");
  return {t->coords, d / n};
}

void Wall::validate() const {
  if (std::abs(u_axis.dot(v_axis)) > 1e-9) fail(ErrorCode::InvalidParameter, "wall axes not orthogonal");
  if (std::abs(u_axis.norm() - 1.0) > 1e-9 || std::abs(v_axis.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidParameter, "wall axes must be unit vectors");
  }
  if (!(width > 0.0) || !(height > 0.0)) fail(ErrorCode::InvalidParameter, "wall size must be > 0");
  if (nu < 1 || nv < 1) fail(ErrorCode::BadBins, "wall grid needs at least one bin");
}

std::optional<WallHit> ray_wall_intersect(const Eigen::Vector3d& origin,
                                          const Eigen::Vector3d& dir, const Wall& wall) {
  const Eigen::Vector3d n = wall.normal();
  const double denom = dir.dot(n);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (wall.origin - origin).dot(n) / denom;
  if (!(t > 1e-9)) return std::nullopt;
  const Eigen::Vector3d rel = origin + t * dir - wall.origin;
  const double u = rel.dot(wall.u_axis);
  const double v = rel.dot(wall.v_axis);
  if (u < 0.0 || u > wall.width || v < 0.0 || v > wall.height) return std::nullopt;
  return WallHit{t, u, v};
}

std::vector<AnalysisGrid> gaze_heatmap(const PoseSequence& seq, std::string_view base,
                                       std::string_view tip, const std::vector<Wall>& walls,
                                       double sigma) {
  if (walls.empty()) fail(ErrorCode::NoWalls, "gaze heatmap needs at least one wall");
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidParameter, "sigma must be > 0");
  if (seq.dims() != 3) fail(ErrorCode::Not3D, "gaze heatmap needs 3D poses");
  const auto bi = seq.require_part(base);
  const auto ti = seq.require_part(tip);

  std::vector<AnalysisGrid> grids;
  for (const auto& w : walls) {
    w.validate();
    grids.push_back(AnalysisGrid::uniform(w.name, GridUnits::score, 0.0, w.width, w.nu, 0.0,
                                          w.height, w.nv));
  }
  const double radius = 3.0 * sigma;
  std::size_t misses = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!seq.is_valid(i, bi) || !seq.is_valid(i, ti)) {
      ++skipped;
      continue;
    }
    const Eigen::Vector3d d = seq[i].parts[ti].coords - seq[i].parts[bi].coords;
    if (!(d.norm() > 0.0)) {
      ++skipped;
      continue;
    }
    const Eigen::Vector3d origin = seq[i].parts[ti].coords;
    const Eigen::Vector3d dir = d.normalized();
    std::optional<WallHit> best;
    std::size_t best_wall = 0;
    for (std::size_t w = 0; w < walls.size(); ++w) {
      auto hit = ray_wall_intersect(origin, dir, walls[w]);
      if (hit && (!best || hit->t < best->t)) {
        best = hit;
        best_wall = w;
      }
    }
    if (!best) {
      ++misses;
      continue;
    }
    AnalysisGrid& g = grids[best_wall];
    const Eigen::Vector2d h(best->u, best->v);
    for (Eigen::Index ix = 0; ix < g.nx(); ++ix) {
      for (Eigen::Index iy = 0; iy < g.ny(); ++iy) {
        const double d2 = (g.center(ix, iy) - h).squaredNorm();
        if (d2 <= radius * radius) g.values(ix, iy) += std::exp(-d2 / (2.0 * sigma * sigma));
      }
    }
  }
  for (auto& g : grids) {
    g.metadata["sigma"] = csv::format_double(sigma);
    g.metadata["frames_without_hit"] = std::to_string(misses);
    g.metadata["frames_without_view"] = std::to_string(skipped);
  }
  return grids;
}

std::vector<Wall> parse_walls(std::string_view text) {
  std::vector<Wall> walls;
  const auto lines = csv::split(text, '\n');
  bool header = true;
  std::size_t row = 0;
  for (auto line : lines) {
    ++row;
    line = csv::trim(line);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("name,", 0) == 0) continue;
    }
    const auto c = csv::split(line);
    if (c.size() != 14) fail(ErrorCode::MalformedCsv, "wall row " + std::to_string(row) + " needs 14 fields");
    double v[13];
    for (int k = 0; k < 13; ++k) {
      auto x = csv::parse_double(c[static_cast<std::size_t>(k + 1)]);
      if (!x) fail(ErrorCode::MalformedCsv, "bad number in wall row " + std::to_string(row));
      v[k] = *x;
    }
    Wall w;
    w.name = c[0];
    w.origin = {v[0], v[1], v[2]};
    w.u_axis = {v[3], v[4], v[5]};
    w.v_axis = {v[6], v[7], v[8]};
    w.width = v[9];
    w.height = v[10];
    w.nu = static_cast<Eigen::Index>(v[11]);
    w.nv = static_cast<Eigen::Index>(v[12]);
    w.validate();
    walls.push_back(std::move(w));
  }
  return walls;
}

std::vector<Wall> load_walls(const std::filesystem::path& path) {
  return parse_walls(csv::read_file(path));
}

// ---------------------------------------------------------------------------

void Arena::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) {
    fail(ErrorCode::DegenerateArena, "arena needs x_min < x_max and y_min < y_max");
  }
}

AnalysisGrid occupancy_map(const PoseSequence& seq, std::string_view anchor, const Arena& arena,
                           Eigen::Index nx, Eigen::Index ny) {
  arena.validate();
  const auto a = seq.require_part(anchor);
  AnalysisGrid g = AnalysisGrid::uniform("occupancy", GridUnits::seconds, arena.x_min, arena.x_max,
                                         nx, arena.y_min, arena.y_max, ny);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nx, ny);
  std::size_t dropped = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!seq.is_valid(i, a)) continue;
    const auto& c = seq[i].parts[a].coords;
    auto bin = g.locate(c[0], c[1]);
    if (!bin) {
      ++dropped;
      continue;
    }
    counts(bin->first, bin->second) += 1.0;
    ++counted;
  }
  g.values = counts / seq.fps();
  g.metadata["dropped_out_of_bounds"] = std::to_string(dropped);
  g.metadata["counted_frames"] = std::to_string(counted);
  g.metadata["fps"] = csv::format_double(seq.fps());
  return g;
}

RearingResult detect_rearing(const PoseSequence& seq, std::string_view anchor, double z_min,
                             int min_frames, const Arena& arena, Eigen::Index nx, Eigen::Index ny) {
  if (seq.dims() != 3) fail(ErrorCode::Not3D, "rearing detection needs 3D poses");
  if (min_frames < 1) fail(ErrorCode::InvalidParameter, "min_frames must be >= 1");
  arena.validate();
  const auto a = seq.require_part(anchor);
  RearingResult result;
  result.counts = AnalysisGrid::uniform("rearing", GridUnits::events, arena.x_min, arena.x_max, nx,
                                        arena.y_min, arena.y_max, ny);
  std::size_t dropped = 0;
  auto close_run = [&](std::size_t start, std::size_t end) {  // [start, end)
    if (end - start < static_cast<std::size_t>(min_frames)) return;
    RearingEvent e;
    e.start_frame = seq[start].frame_index;
    e.end_frame = seq[end - 1].frame_index;
    e.frames = end - start;
    for (std::size_t k = start; k < end; ++k) e.location += seq[k].parts[a].coords.head<2>();
    e.location /= static_cast<double>(e.frames);
    if (auto bin = result.counts.locate(e.location.x(), e.location.y())) {
      result.counts.values(bin->first, bin->second) += 1.0;
    } else {
      ++dropped;
    }
    result.events.push_back(e);
  };
  std::optional<std::size_t> start;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const bool up = seq.is_valid(i, a) && seq[i].parts[a].coords[2] >= z_min;
    if (up && !start) start = i;
    if (!up && start) {
      close_run(*start, i);
      start.reset();
    }
  }
  if (start) close_run(*start, seq.size());
  result.counts.metadata["dropped_out_of_bounds"] = std::to_string(dropped);
  result.counts.metadata["events"] = std::to_string(result.events.size());
  return result;
}

// ---------------------------------------------------------------------------

void SpikeTrain::validate(double duration) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0) {
      fail(ErrorCode::InvalidSpikeTrain, "spike time must be finite and >= 0");
    }
    if (i && times[i] < times[i - 1]) fail(ErrorCode::InvalidSpikeTrain, "spike times decrease");
    if (times[i] > duration) {
      fail(ErrorCode::InvalidSpikeTrain, "spike at " + csv::format_double(times[i]) +
                                             " s is past the recording end");
    }
  }
}

SpikeTrain parse_spike_train(std::string_view text, std::string cell) {
  SpikeTrain train{std::move(cell), {}};
  bool first = true;
  for (auto line : csv::split(text, '\n')) {
    line = csv::trim(line);
    if (line.empty()) continue;
    auto v = csv::parse_double(line);
    if (!v) {
      if (first) {
        first = false;
        continue;
      }
      fail(ErrorCode::InvalidSpikeTrain, "bad spike time '" + line + "'");
    }
    first = false;
    train.times.push_back(*v);
  }
  return train;
}

SpikeTrain load_spike_train(const std::filesystem::path& path) {
  return parse_spike_train(csv::read_file(path), path.stem().string());
}

double head_direction_deg(const Skeleton& skel, std::size_t base, std::size_t tip) {
  const Eigen::Vector2d d = skel.parts[tip].coords.head<2>() - skel.parts[base].coords.head<2>();
  double deg = std::atan2(d.y(), d.x()) * kDeg;
  if (deg <= -180.0) deg += 360.0;
  return deg;
}

namespace {

std::size_t spike_frame(double t, double fps, std::size_t n) {
  auto i = static_cast<std::size_t>(std::floor(t * fps));
  return std::min(i, n - 1);
}

bool pose_usable(const PoseSequence& seq, std::size_t i, std::size_t a, std::size_t b,
                 std::size_t t) {
  if (!seq.is_valid(i, a) || !seq.is_valid(i, b) || !seq.is_valid(i, t)) return false;
  const Eigen::Vector2d d = seq[i].parts[t].coords.head<2>() - seq[i].parts[b].coords.head<2>();
  return d.norm() > 0.0;
}

// Distance from p (inside the rectangle) to its boundary along angle phi.
double boundary_distance(const Arena& arena, const Eigen::Vector2d& p, double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  double best = std::numeric_limits<double>::infinity();
  if (c > 0) best = std::min(best, (arena.x_max - p.x()) / c);
  if (c < 0) best = std::min(best, (arena.x_min - p.x()) / c);
  if (s > 0) best = std::min(best, (arena.y_max - p.y()) / s);
  if (s < 0) best = std::min(best, (arena.y_min - p.y()) / s);
  return best;
}

}  // namespace

EbcMap ebc_rate_map(const PoseSequence& seq, std::string_view anchor, std::string_view base,
                    std::string_view tip, const SpikeTrain& spikes, const Arena& arena,
                    const EbcParams& params) {
  arena.validate();
  if (!(params.max_dist > 0.0)) fail(ErrorCode::BadBins, "max_dist must be > 0");
  if (params.angle_bins < 1) fail(ErrorCode::BadBins, "angle_bins must be >= 1");
  const Eigen::Index dist_bins =
      params.dist_bins > 0 ? params.dist_bins
                           : std::max<Eigen::Index>(1, std::lround(params.max_dist / 12.5));
  if (params.dist_bins < 0) fail(ErrorCode::BadBins, "dist_bins must be >= 0");
  if (params.min_occupancy_s < 0.0) fail(ErrorCode::InvalidParameter, "min_occupancy_s must be >= 0");
  if (seq.empty()) fail(ErrorCode::EmptySequence, "EBC map needs frames");
  const double duration = static_cast<double>(seq.size()) / seq.fps();
  spikes.validate(duration);
  const auto ai = seq.require_part(anchor);
  const auto bi = seq.require_part(base);
  const auto ti = seq.require_part(tip);

  const double width = 360.0 / static_cast<double>(params.angle_bins);
  EbcMap out;
  out.rate = AnalysisGrid::uniform("ebc:" + spikes.cell, GridUnits::hz, -0.5 * width,
                                   360.0 - 0.5 * width, params.angle_bins, 0.0, params.max_dist,
                                   dist_bins);
  Eigen::MatrixXd frames_in_bin = Eigen::MatrixXd::Zero(params.angle_bins, dist_bins);
  out.spikes = Eigen::MatrixXd::Zero(params.angle_bins, dist_bins);

  std::vector<double> spikes_per_frame(seq.size(), 0.0);
  for (double t : spikes.times) spikes_per_frame[spike_frame(t, seq.fps(), seq.size())] += 1.0;

  std::size_t unused_spikes = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Eigen::Vector2d p = seq[i].parts[ai].coords.head<2>();
    if (!pose_usable(seq, i, ai, bi, ti) || !arena.contains(p.x(), p.y())) {
      unused_spikes += static_cast<std::size_t>(spikes_per_frame[i]);
      continue;
    }
    const double hd = head_direction_deg(seq[i], bi, ti);
    for (Eigen::Index a = 0; a < params.angle_bins; ++a) {
      const double phi = (hd + static_cast<double>(a) * width) / kDeg;
      const double d = boundary_distance(arena, p, phi);
      if (!(d <= params.max_dist)) continue;
      auto bin = std::min<Eigen::Index>(
          dist_bins - 1, static_cast<Eigen::Index>(d / params.max_dist * static_cast<double>(dist_bins)));
      frames_in_bin(a, bin) += 1.0;
      out.spikes(a, bin) += spikes_per_frame[i];
    }
  }
  out.occupancy = frames_in_bin / seq.fps();
  for (Eigen::Index a = 0; a < params.angle_bins; ++a) {
    for (Eigen::Index d = 0; d < dist_bins; ++d) {
      const double occ = out.occupancy(a, d);
      if (occ < params.min_occupancy_s || occ <= 0.0) {
        out.rate.masked(a, d) = true;
        out.rate.values(a, d) = 0.0;
      } else {
        out.rate.values(a, d) = out.spikes(a, d) / occ;
      }
    }
  }
  out.rate.metadata["min_occupancy_s"] = csv::format_double(params.min_occupancy_s);
  out.rate.metadata["masked_bins"] = std::to_string(out.rate.masked.count());
  out.rate.metadata["spikes"] = std::to_string(spikes.times.size());
  out.rate.metadata["spikes_without_pose"] = std::to_string(unused_spikes);
  return out;
}

SpikeLocationData spike_location_data(const PoseSequence& seq, std::string_view anchor,
                                      std::string_view base, std::string_view tip,
                                      const SpikeTrain& spikes) {
  if (seq.empty()) fail(ErrorCode::EmptySequence, "spike locations need frames");
  spikes.validate(static_cast<double>(seq.size()) / seq.fps());
  const auto ai = seq.require_part(anchor);
  const auto bi = seq.require_part(base);
  const auto ti = seq.require_part(tip);
  SpikeLocationData out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.is_valid(i, ai)) out.trajectory.push_back(seq[i].parts[ai].coords.head<2>());
  }
  for (double t : spikes.times) {
    const auto i = spike_frame(t, seq.fps(), seq.size());
    if (!pose_usable(seq, i, ai, bi, ti)) {
      ++out.dropped;
      continue;
    }
    const auto& c = seq[i].parts[ai].coords;
    out.spikes.push_back({t, c[0], c[1], head_direction_deg(seq[i], bi, ti)});
  }
  return out;
}

}  // namespace cvkit::behavior
