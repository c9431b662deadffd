#include <algorithm>
#include <limits>
#include <set>

#include "cvkit/calibration.hpp"
#include "cvkit/csv.hpp"

namespace cvkit::geometry {

std::vector<std::int64_t> synchronized_frames(const std::vector<CameraAnnotations>& cams) {
  if (cams.empty()) return {};
  std::vector<std::int64_t> out;
  for (const auto& [frame, points] : cams.front().frames) {
    if (points.empty()) continue;
    bool everywhere = true;
    for (std::size_t c = 1; c < cams.size() && everywhere; ++c) {
      auto it = cams[c].frames.find(frame);
      everywhere = it != cams[c].frames.end() && !it->second.empty();
    }
    if (everywhere) out.push_back(frame);
  }
  return out;
}

std::vector<std::int64_t> select_calibration_frames(const std::vector<CameraAnnotations>& cams,
                                                    std::size_t k) {
  const auto frames = synchronized_frames(cams);
  if (k == 0 || k > frames.size()) {
    fail(ErrorCode::NotEnoughAnnotatedFrames,
         "asked for " + std::to_string(k) + " frames, " + std::to_string(frames.size()) +
             " synchronized annotated frame(s) available");
  }

  // Parts present in every camera for every candidate frame.
  std::set<std::string> common;
  bool first = true;
  for (const auto& cam : cams) {
    for (auto f : frames) {
      std::set<std::string> here;
      for (const auto& [part, _] : cam.frames.at(f)) here.insert(part);
      if (first) {
        common = std::move(here);
        first = false;
      } else {
        std::set<std::string> keep;
        std::set_intersection(common.begin(), common.end(), here.begin(), here.end(),
                              std::inserter(keep, keep.end()));
        common = std::move(keep);
      }
    }
  }
  if (common.empty()) {
    fail(ErrorCode::NotEnoughAnnotatedFrames, "no part is annotated in every synchronized frame");
  }

  const auto n = static_cast<Eigen::Index>(frames.size());
  const auto dim = static_cast<Eigen::Index>(2 * common.size() * cams.size());
  Eigen::MatrixXd features(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (const auto& cam : cams) {
      const auto& pts = cam.frames.at(frames[static_cast<std::size_t>(i)]);
      for (const auto& part : common) {
        features.block<1, 2>(i, col) = pts.at(part).transpose();
        col += 2;
      }
    }
  }

  const Eigen::RowVectorXd centroid = features.colwise().mean();
  Eigen::Index seed = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (features.row(i) - centroid).norm();
    if (d < best) {
      best = d;
      seed = i;
    }
  }

  std::vector<Eigen::Index> picks{seed};
  Eigen::VectorXd min_dist(n);
  for (Eigen::Index i = 0; i < n; ++i) min_dist[i] = (features.row(i) - features.row(seed)).norm();
  while (picks.size() < k) {
    Eigen::Index next = -1;
    double far = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::find(picks.begin(), picks.end(), i) != picks.end()) continue;
      if (min_dist[i] > far) {
        far = min_dist[i];
        next = i;
      }
    }
    picks.push_back(next);
    for (Eigen::Index i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], (features.row(i) - features.row(next)).norm());
    }
  }

  std::vector<std::int64_t> out;
  for (auto i : picks) out.push_back(frames[static_cast<std::size_t>(i)]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CameraProfile> parse_dlt_coefficients(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (auto line : csv::split(text, '\n')) {
    line = csv::trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : csv::split(line)) {
      auto v = csv::parse_double(cell);
      if (!v) fail(ErrorCode::MalformedCsv, "bad coefficient '" + cell + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != 11) {
    fail(ErrorCode::MalformedCsv, "DLT file must have 11 rows, found " + std::to_string(rows.size()));
  }
  const std::size_t n = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n) {
      fail(ErrorCode::MalformedCsv, "row " + std::to_string(r + 1) + " has a different column count");
    }
  }
  std::vector<CameraProfile> cams(n);
  for (std::size_t c = 0; c < n; ++c) {
    cams[c].name = "cam" + std::to_string(c);
    for (std::size_t r = 0; r < 11; ++r) cams[c].dlt[static_cast<Eigen::Index>(r)] = rows[r][c];
  }
  return cams;
}

std::vector<CameraProfile> load_dlt_coefficients(const std::filesystem::path& path) {
  return parse_dlt_coefficients(csv::read_file(path));
}

std::string format_dlt_coefficients(const std::vector<CameraProfile>& cams) {
  std::string out;
  for (Eigen::Index r = 0; r < 11; ++r) {
    for (std::size_t c = 0; c < cams.size(); ++c) {
      if (c) out.push_back(',');
      out += csv::format_double(cams[c].dlt[r]);
    }
    out.push_back('\n');
  }
  return out;
}

void write_dlt_coefficients(const std::vector<CameraProfile>& cams,
                            const std::filesystem::path& path) {
  csv::write_file_atomic(path, format_dlt_coefficients(cams));
}

EasyWandManifest export_easywand_package(const std::vector<CameraAnnotations>& cams,
                                         const std::vector<std::int64_t>& frames,
                                         const std::filesystem::path& dir) {
  const auto synced = synchronized_frames(cams);
  std::vector<std::int64_t> chosen;
  if (frames.empty()) {
    chosen = synced;
  } else {
    for (auto f : frames) {
      if (!std::binary_search(synced.begin(), synced.end(), f)) {
        fail(ErrorCode::EmptyAnnotationSet,
             "frame " + std::to_string(f) + " is not annotated in every camera");
      }
      chosen.push_back(f);
    }
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  }
  if (chosen.empty()) fail(ErrorCode::EmptyAnnotationSet, "no synchronized annotated frames");

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string());

  EasyWandManifest manifest;
  std::string manifest_csv = "frame_index\n";
  for (auto f : chosen) manifest_csv += std::to_string(f) + "\n";
  std::string cameras_csv = "camera\n";
  for (const auto& cam : cams) {
    if (cam.camera.empty() || cam.camera.find_first_of(",/\\\n") != std::string::npos) {
      fail(ErrorCode::IoFailure, "unusable camera name '" + cam.camera + "'");
    }
    cameras_csv += cam.camera + "\n";
    std::string points = "frame,part,u,v\n";
    for (auto f : chosen) {
      for (const auto& [part, uv] : cam.frames.at(f)) {
        points += std::to_string(f) + "," + part + "," + csv::format_double(uv.x()) + "," +
                  csv::format_double(uv.y()) + "\n";
      }
    }
    csv::write_file_atomic(dir / (cam.camera + "_points.csv"), points);
    manifest.cameras.push_back(cam.camera);
  }
  csv::write_file_atomic(dir / "cameras.csv", cameras_csv);
  csv::write_file_atomic(dir / "manifest.csv", manifest_csv);
  manifest.frames = std::move(chosen);
  return manifest;
}

EasyWandManifest read_easywand_manifest(const std::filesystem::path& dir) {
  EasyWandManifest m;
  const auto frames = csv::read_lines(dir / "manifest.csv");
  if (frames.empty() || frames[0] != "frame_index") {
    fail(ErrorCode::MalformedCsv, "manifest.csv must start with frame_index");
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    auto f = csv::parse_int(frames[i]);
    if (!f) fail(ErrorCode::MalformedCsv, "bad frame index '" + frames[i] + "'");
    m.frames.push_back(*f);
  }
  const auto cams = csv::read_lines(dir / "cameras.csv");
  if (cams.empty() || cams[0] != "camera") {
    fail(ErrorCode::MalformedCsv, "cameras.csv must start with camera");
  }
  for (std::size_t i = 1; i < cams.size(); ++i) m.cameras.push_back(csv::trim(cams[i]));
  return m;
}

std::vector<CameraAnnotations> read_easywand_points(const std::filesystem::path& dir) {
  const auto manifest = read_easywand_manifest(dir);
  std::vector<CameraAnnotations> out;
  for (const auto& cam : manifest.cameras) {
    CameraAnnotations ann{cam, {}};
    const auto lines = csv::read_lines(dir / (cam + "_points.csv"));
    if (lines.empty() || lines[0] != "frame,part,u,v") {
      fail(ErrorCode::MalformedCsv, cam + "_points.csv has an unexpected header");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = csv::split(lines[i]);
      if (cells.size() != 4) fail(ErrorCode::MalformedCsv, "bad points row " + std::to_string(i + 1));
      auto f = csv::parse_int(cells[0]);
      auto u = csv::parse_double(cells[2]);
      auto v = csv::parse_double(cells[3]);
      if (!f || !u || !v) fail(ErrorCode::MalformedCsv, "bad points row " + std::to_string(i + 1));
      ann.frames[*f][cells[1]] = Eigen::Vector2d(*u, *v);
    }
    out.push_back(std::move(ann));
  }
  return out;
}

}  // namespace cvkit::geometry
