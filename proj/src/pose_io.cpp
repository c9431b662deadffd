#include "cvkit/pose_io.hpp"

#include <cmath>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit {

namespace {

constexpr std::string_view kBehaviorColumn = "behavior";
constexpr std::string_view kAxisNames[] = {"x", "y", "z"};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string strip_suffix(std::string_view s, std::string_view suffix) {
  return std::string(s.substr(0, s.size() - suffix.size()));
}

[[noreturn]] void bad_column(const std::string& column, std::size_t index, const std::string& why) {
  fail(ErrorCode::MalformedHeader,
       "column " + std::to_string(index) + " '" + column + "': " + why);
}

// Column layout shared by the cvkit and flat readers: one group of
// D coordinate columns plus one score column per part.
struct Layout {
  std::vector<std::string> parts;
  int dims = 0;
  bool has_behavior = false;
  std::size_t columns = 0;
};

std::set<std::string> parse_behaviors(std::string_view cell) {
  std::set<std::string> out;
  for (auto& b : csv::split(cell, ';')) {
    auto t = csv::trim(b);
    if (!t.empty()) out.insert(std::move(t));
  }
  return out;
}

std::string format_behaviors(const std::set<std::string>& behaviors) {
  std::string out;
  for (const auto& b : behaviors) {
    if (!out.empty()) out.push_back(';');
    out += b;
  }
  return out;
}

// Parses coordinate and score cells for one part. Missing or NaN cells make
// the whole part invalid: zero coords, score 0.
Part parse_part(const std::string& name, const std::vector<std::string>& cells, std::size_t first,
                int dims, std::size_t score_col, std::size_t row) {
  Part p{name, Eigen::VectorXd::Zero(dims), 0.0};
  bool missing = false;
  for (int d = 0; d < dims; ++d) {
    const auto& cell = cells[first + static_cast<std::size_t>(d)];
    if (csv::trim(cell).empty()) {
      missing = true;
      continue;
    }
    auto v = csv::parse_double(cell);
    if (!v) {
      fail(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": bad number '" + cell + "'");
    }
    if (std::isnan(*v)) {
      missing = true;
    } else {
      p.coords[d] = *v;
    }
  }
  const auto& score_cell = cells[score_col];
  if (csv::trim(score_cell).empty()) {
    missing = true;
  } else {
    auto s = csv::parse_double(score_cell);
    if (!s) {
      fail(ErrorCode::MalformedRow,
           "row " + std::to_string(row) + ": bad score '" + score_cell + "'");
    }
    if (std::isnan(*s)) {
      missing = true;
    } else {
      if (*s < 0.0 || *s > 1.0) {
        fail(ErrorCode::MalformedRow,
             "row " + std::to_string(row) + ": score outside [0,1] for " + name);
      }
      p.score = *s;
    }
  }
  if (missing) {
    p.coords.setZero();
    p.score = 0.0;
  }
  return p;
}

std::int64_t parse_frame(const std::string& cell, std::size_t row) {
  auto f = csv::parse_int(cell);
  if (!f || *f < 0) {
    fail(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": bad frame index '" + cell + "'");
  }
  return *f;
}

std::vector<Skeleton> parse_rows(const std::vector<std::string>& lines, std::size_t first_row,
                                 const Layout& layout) {
  std::vector<Skeleton> skeletons;
  for (std::size_t li = first_row; li < lines.size(); ++li) {
    const std::size_t row = li + 1;
    if (csv::trim(lines[li]).empty()) continue;
    const auto cells = csv::split(lines[li]);
    if (cells.size() != layout.columns) {
      fail(ErrorCode::InconsistentDims, "row " + std::to_string(row) + " has " +
                                            std::to_string(cells.size()) + " cells, expected " +
                                            std::to_string(layout.columns));
    }
    Skeleton s;
    s.frame_index = parse_frame(cells[0], row);
    std::size_t col = 1;
    for (const auto& name : layout.parts) {
      const std::size_t score_col = col + static_cast<std::size_t>(layout.dims);
      s.parts.push_back(parse_part(name, cells, col, layout.dims, score_col, row));
      col = score_col + 1;
    }
    if (layout.has_behavior) s.behaviors = parse_behaviors(cells[col]);
    skeletons.push_back(std::move(s));
  }
  return skeletons;
}

PoseSequence parse_cvkit(const std::vector<std::string>& lines) {
  if (lines.size() < 2) fail(ErrorCode::MalformedHeader, "cvkit file needs two header lines");
  const auto meta = csv::split(lines[0]);
  if (meta.size() != 5 || meta[0] != "cvkit" || meta[1] != "v1") {
    fail(ErrorCode::MalformedHeader, "first line must be cvkit,v1,dims=D,fps=F,threshold=T");
  }
  auto value_of = [&](std::size_t i, std::string_view key) -> std::string {
    const std::string prefix = std::string(key) + "=";
    if (meta[i].rfind(prefix, 0) != 0) bad_column(meta[i], i, "expected " + std::string(key) + "=");
    return meta[i].substr(prefix.size());
  };
  const auto dims = csv::parse_int(value_of(2, "dims"));
  const auto fps = csv::parse_double(value_of(3, "fps"));
  const auto threshold = csv::parse_double(value_of(4, "threshold"));
  if (!dims || !fps || !threshold) fail(ErrorCode::MalformedHeader, "bad cvkit metadata values");

  const auto header = csv::split(lines[1]);
  Layout layout;
  layout.dims = static_cast<int>(*dims);
  layout.columns = header.size();
  layout.has_behavior = true;
  if (layout.dims < 2) fail(ErrorCode::MalformedHeader, "dims must be >= 2");
  if (header.empty() || header[0] != "frame") bad_column(header.empty() ? "" : header[0], 0, "expected frame");
  if (header.back() != kBehaviorColumn) {
    bad_column(header.back(), header.size() - 1, "expected behavior");
  }
  const std::size_t group = static_cast<std::size_t>(layout.dims) + 1;
  const std::size_t body = header.size() - 2;
  if (body == 0 || body % group != 0) {
    fail(ErrorCode::MalformedHeader,
         "part columns do not form groups of " + std::to_string(group));
  }
  for (std::size_t col = 1; col + 1 < header.size(); col += group) {
    if (!ends_with(header[col], "_c0")) bad_column(header[col], col, "expected <part>_c0");
    const std::string name = strip_suffix(header[col], "_c0");
    for (int d = 1; d < layout.dims; ++d) {
      const std::size_t c = col + static_cast<std::size_t>(d);
      if (header[c] != name + "_c" + std::to_string(d)) {
        bad_column(header[c], c, "expected " + name + "_c" + std::to_string(d));
      }
    }
    const std::size_t sc = col + static_cast<std::size_t>(layout.dims);
    if (header[sc] != name + "_score") bad_column(header[sc], sc, "expected " + name + "_score");
    layout.parts.push_back(name);
  }
  auto skeletons = parse_rows(lines, 2, layout);
  return PoseSequence(layout.parts, layout.dims, *fps, *threshold, std::move(skeletons));
}

PoseSequence parse_flat(const std::vector<std::string>& lines, const ReadOptions& options) {
  if (lines.empty()) fail(ErrorCode::MalformedHeader, "missing header row");
  const auto header = csv::split(lines[0]);
  if (header.empty() || header[0] != "frame") bad_column(header.empty() ? "" : header[0], 0, "expected frame");
  Layout layout;
  layout.columns = header.size();
  layout.has_behavior = header.back() == kBehaviorColumn;
  const std::size_t end = header.size() - (layout.has_behavior ? 1 : 0);
  if (end < 4) fail(ErrorCode::MalformedHeader, "no part columns");
  if (!ends_with(header[1], "_x")) bad_column(header[1], 1, "expected <part>_x");
  const std::string first = strip_suffix(header[1], "_x");
  layout.dims = header[3] == first + "_z" ? 3 : 2;
  const std::size_t group = static_cast<std::size_t>(layout.dims) + 1;
  if ((end - 1) % group != 0) {
    fail(ErrorCode::MalformedHeader,
         "part columns do not form groups of " + std::to_string(group));
  }
  for (std::size_t col = 1; col < end; col += group) {
    if (!ends_with(header[col], "_x")) bad_column(header[col], col, "expected <part>_x");
    const std::string name = strip_suffix(header[col], "_x");
    for (int d = 1; d < layout.dims; ++d) {
      const std::size_t c = col + static_cast<std::size_t>(d);
      const std::string want = name + "_" + std::string(kAxisNames[d]);
      if (header[c] != want) bad_column(header[c], c, "expected " + want);
    }
    const std::size_t sc = col + static_cast<std::size_t>(layout.dims);
    if (header[sc] != name + "_score") bad_column(header[sc], sc, "expected " + name + "_score");
    layout.parts.push_back(name);
  }
  auto skeletons = parse_rows(lines, 1, layout);
  return PoseSequence(layout.parts, layout.dims, options.fps, options.score_threshold,
                      std::move(skeletons));
}

PoseSequence parse_dlc(const std::vector<std::string>& lines, const ReadOptions& options) {
  if (lines.size() < 3) fail(ErrorCode::MalformedHeader, "DeepLabCut CSV needs three header rows");
  const auto scorer = csv::split(lines[0]);
  const auto bodyparts = csv::split(lines[1]);
  const auto coords = csv::split(lines[2]);
  if (scorer.empty() || scorer[0] != "scorer") bad_column(scorer.empty() ? "" : scorer[0], 0, "expected scorer");
  if (bodyparts.size() != scorer.size() || bodyparts[0] != "bodyparts") {
    bad_column(bodyparts.empty() ? "" : bodyparts[0], 0, "expected bodyparts row of matching width");
  }
  if (coords.size() != scorer.size() || coords[0] != "coords") {
    bad_column(coords.empty() ? "" : coords[0], 0, "expected coords row of matching width");
  }
  if (scorer.size() < 4 || (scorer.size() - 1) % 3 != 0) {
    fail(ErrorCode::MalformedHeader, "bodypart columns must come in x,y,likelihood triples");
  }
  Layout layout;
  layout.dims = 2;
  layout.columns = scorer.size();
  for (std::size_t col = 1; col < scorer.size(); col += 3) {
    static constexpr std::string_view expect[] = {"x", "y", "likelihood"};
    for (std::size_t k = 0; k < 3; ++k) {
      if (coords[col + k] != expect[k]) bad_column(coords[col + k], col + k, "expected " + std::string(expect[k]));
      if (bodyparts[col + k] != bodyparts[col]) {
        bad_column(bodyparts[col + k], col + k, "bodypart label differs within triple");
      }
    }
    layout.parts.push_back(bodyparts[col]);
  }
  auto skeletons = parse_rows(lines, 3, layout);
  return PoseSequence(layout.parts, 2, options.fps, options.score_threshold, std::move(skeletons));
}

void check_writable_name(const std::string& name) {
  if (name.find_first_of(",;\n\r") != std::string::npos) {
    fail(ErrorCode::UnwritableFormat, "name contains a separator: " + name);
  }
}

void append_rows(std::string& out, const PoseSequence& seq) {
  for (const auto& s : seq.skeletons()) {
    out += std::to_string(s.frame_index);
    for (const auto& p : s.parts) {
      for (Eigen::Index d = 0; d < p.coords.size(); ++d) {
        out.push_back(',');
        out += csv::format_double(p.coords[d]);
      }
      out.push_back(',');
      out += csv::format_double(p.score);
    }
    for (const auto& b : s.behaviors) check_writable_name(b);
    out.push_back(',');
    out += format_behaviors(s.behaviors);
    out.push_back('\n');
  }
}

}  // namespace

PoseFormat parse_pose_format(std::string_view name) {
  if (name == "cvkit") return PoseFormat::cvkit;
  if (name == "flat_csv" || name == "flat") return PoseFormat::flat_csv;
  if (name == "dlc_csv" || name == "dlc") return PoseFormat::dlc_csv;
  fail(ErrorCode::UnknownFormat, "unknown pose format '" + std::string(name) + "'");
}

std::string_view to_string(PoseFormat format) {
  switch (format) {
    case PoseFormat::cvkit: return "cvkit";
    case PoseFormat::flat_csv: return "flat_csv";
    case PoseFormat::dlc_csv: return "dlc_csv";
  }
  return "unknown";
}

PoseSequence parse_pose_text(std::string_view text, PoseFormat format, const ReadOptions& options) {
  auto lines = csv::split(text, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  switch (format) {
    case PoseFormat::cvkit: return parse_cvkit(lines);
    case PoseFormat::flat_csv: return parse_flat(lines, options);
    case PoseFormat::dlc_csv: return parse_dlc(lines, options);
  }
  fail(ErrorCode::UnknownFormat, "unknown pose format");
}

std::string format_pose_text(const PoseSequence& seq, PoseFormat format) {
  for (const auto& name : seq.part_order()) check_writable_name(name);
  std::string out;
  if (format == PoseFormat::cvkit) {
    out += "cvkit,v1,dims=" + std::to_string(seq.dims()) + ",fps=" + csv::format_double(seq.fps()) +
           ",threshold=" + csv::format_double(seq.score_threshold()) + "\n";
    out += "frame";
    for (const auto& name : seq.part_order()) {
      for (int d = 0; d < seq.dims(); ++d) out += "," + name + "_c" + std::to_string(d);
      out += "," + name + "_score";
    }
  } else if (format == PoseFormat::flat_csv) {
    if (seq.dims() > 3) {
      fail(ErrorCode::UnwritableFormat, "flat_csv supports 2 or 3 dimensions, got " +
                                            std::to_string(seq.dims()));
    }
    out += "frame";
    for (const auto& name : seq.part_order()) {
      for (int d = 0; d < seq.dims(); ++d) out += "," + name + "_" + std::string(kAxisNames[d]);
      out += "," + name + "_score";
    }
  } else {
    fail(ErrorCode::UnwritableFormat, "dlc_csv is read-only");
  }
  out += ",behavior\n";
  append_rows(out, seq);
  return out;
}

PoseSequence read_pose_file(const std::filesystem::path& path, PoseFormat format,
                            const ReadOptions& options) {
  if (!std::filesystem::is_regular_file(path)) {
    fail(ErrorCode::IoFailure, "no such file " + path.string());
  }
  return parse_pose_text(csv::read_file(path), format, options);
}

void write_pose_file(const PoseSequence& seq, const std::filesystem::path& path,
                     PoseFormat format) {
  const std::string text = format_pose_text(seq, format);
  csv::write_file_atomic(path, text);
}

void translate_pose_file(const std::filesystem::path& src, PoseFormat src_format,
                         const std::filesystem::path& dst, PoseFormat dst_format,
                         const ReadOptions& options) {
  if (dst_format == PoseFormat::dlc_csv) fail(ErrorCode::UnwritableFormat, "dlc_csv is read-only");
  write_pose_file(read_pose_file(src, src_format, options), dst, dst_format);
}

}  // namespace cvkit
