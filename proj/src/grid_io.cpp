#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cvkit/behavior.hpp"
#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::behavior {

namespace {

std::string join_vector(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(',');
    out += csv::format_double(v[i]);
  }
  return out;
}

Eigen::VectorXd parse_vector(const std::vector<std::string>& cells, std::size_t first) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(cells.size() - first));
  for (std::size_t i = first; i < cells.size(); ++i) {
    auto x = csv::parse_double(cells[i]);
    if (!x) fail(ErrorCode::MalformedCsv, "bad grid number '" + cells[i] + "'");
    v[static_cast<Eigen::Index>(i - first)] = *x;
  }
  return v;
}

}  // namespace

std::string format_grid_csv(const AnalysisGrid& grid) {
  std::string out = "grid," + grid.name + "\n";
  out += "units," + std::string(to_string(grid.units)) + "\n";
  out += "x_edges" + join_vector(grid.x_edges) + "\n";
  out += "y_edges" + join_vector(grid.y_edges) + "\n";
  for (const auto& [k, v] : grid.metadata) out += "meta," + k + "," + v + "\n";
  for (Eigen::Index iy = 0; iy < grid.ny(); ++iy) {
    out += "values," + std::to_string(iy) + join_vector(grid.values.col(iy)) + "\n";
  }
  for (Eigen::Index iy = 0; iy < grid.ny(); ++iy) {
    out += "mask," + std::to_string(iy);
    for (Eigen::Index ix = 0; ix < grid.nx(); ++ix) out += grid.masked(ix, iy) ? ",1" : ",0";
    out += "\n";
  }
  out += "end\n";
  return out;
}

std::string format_grids_csv(const std::vector<AnalysisGrid>& grids) {
  std::string out;
  for (const auto& g : grids) out += format_grid_csv(g);
  return out;
}

std::vector<AnalysisGrid> parse_grids_csv(std::string_view text) {
  std::vector<AnalysisGrid> grids;
  std::optional<AnalysisGrid> cur;
  std::vector<Eigen::VectorXd> value_rows;
  std::vector<std::vector<bool>> mask_rows;
  for (auto line : csv::split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    const auto& tag = cells[0];
    if (tag == "grid") {
      if (cur) fail(ErrorCode::MalformedCsv, "grid block not closed");
      cur.emplace();
      cur->name = cells.size() > 1 ? cells[1] : "";
      value_rows.clear();
      mask_rows.clear();
      continue;
    }
    if (!cur) fail(ErrorCode::MalformedCsv, "row outside a grid block: " + line);
    if (tag == "units") {
      cur->units = parse_grid_units(cells.at(1));
    } else if (tag == "x_edges") {
      cur->x_edges = parse_vector(cells, 1);
    } else if (tag == "y_edges") {
      cur->y_edges = parse_vector(cells, 1);
    } else if (tag == "meta") {
      if (cells.size() != 3) fail(ErrorCode::MalformedCsv, "meta rows need key and value");
      cur->metadata[cells[1]] = cells[2];
    } else if (tag == "values") {
      value_rows.push_back(parse_vector(cells, 2));
    } else if (tag == "mask") {
      std::vector<bool> row;
      for (std::size_t i = 2; i < cells.size(); ++i) row.push_back(cells[i] == "1");
      mask_rows.push_back(std::move(row));
    } else if (tag == "end") {
      const auto nx = cur->x_edges.size() - 1;
      const auto ny = cur->y_edges.size() - 1;
      if (nx < 1 || ny < 1 || static_cast<Eigen::Index>(value_rows.size()) != ny ||
          static_cast<Eigen::Index>(mask_rows.size()) != ny) {
        fail(ErrorCode::MalformedCsv, "grid " + cur->name + " has inconsistent shape");
      }
      cur->values.resize(nx, ny);
      cur->masked.resize(nx, ny);
      for (Eigen::Index iy = 0; iy < ny; ++iy) {
        const auto& vr = value_rows[static_cast<std::size_t>(iy)];
        const auto& mr = mask_rows[static_cast<std::size_t>(iy)];
        if (vr.size() != nx || static_cast<Eigen::Index>(mr.size()) != nx) {
          fail(ErrorCode::MalformedCsv, "grid " + cur->name + " row width mismatch");
        }
        cur->values.col(iy) = vr;
        for (Eigen::Index ix = 0; ix < nx; ++ix) cur->masked(ix, iy) = mr[static_cast<std::size_t>(ix)];
      }
      cur->validate();
      grids.push_back(std::move(*cur));
      cur.reset();
    } else {
      fail(ErrorCode::MalformedCsv, "unknown grid row tag '" + tag + "'");
    }
  }
  if (cur) fail(ErrorCode::MalformedCsv, "grid block not closed");
  return grids;
}

void render_grid_png(const AnalysisGrid& grid, const std::filesystem::path& path,
                     int pixels_per_bin) {
  const int nx = static_cast<int>(grid.nx());
  const int ny = static_cast<int>(grid.ny());
  const double peak = grid.values.size() ? grid.values.maxCoeff() : 0.0;
  cv::Mat levels(ny, nx, CV_8UC1);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double v = peak > 0.0 ? grid.values(ix, iy) / peak : 0.0;
      // Row 0 is the top of the image, so the highest y bin goes first.
      levels.at<std::uint8_t>(ny - 1 - iy, ix) = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
  }
  cv::Mat color;
  cv::applyColorMap(levels, color, cv::COLORMAP_JET);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (grid.masked(ix, iy)) color.at<cv::Vec3b>(ny - 1 - iy, ix) = cv::Vec3b(0, 0, 0);
    }
  }
  cv::Mat big;
  cv::resize(color, big, cv::Size(nx * pixels_per_bin, ny * pixels_per_bin), 0, 0, cv::INTER_NEAREST);
  if (!cv::imwrite(path.string(), big)) fail(ErrorCode::IoFailure, "cannot write " + path.string());
}

std::string format_rearing_csv(const RearingResult& result) {
  std::string out = "start_frame,end_frame,frames,x,y\n";
  for (const auto& e : result.events) {
    out += std::to_string(e.start_frame) + "," + std::to_string(e.end_frame) + "," +
           std::to_string(e.frames) + "," + csv::format_double(e.location.x()) + "," +
           csv::format_double(e.location.y()) + "\n";
  }
  return out;
}

std::string format_spike_locations_csv(const SpikeLocationData& data) {
  std::string out = "kind,time,x,y,head_direction_deg\n";
  for (const auto& s : data.spikes) {
    out += "spike," + csv::format_double(s.time) + "," + csv::format_double(s.x) + "," +
           csv::format_double(s.y) + "," + csv::format_double(s.head_direction_deg) + "\n";
  }
  for (const auto& p : data.trajectory) {
    out += "trajectory,," + csv::format_double(p.x()) + "," + csv::format_double(p.y()) + ",\n";
  }
  out += "meta,dropped," + std::to_string(data.dropped) + ",,\n";
  return out;
}

}  // namespace cvkit::behavior
