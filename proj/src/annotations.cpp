#include "cvkit/annotations.hpp"

#include <set>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::annotate {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::annotated: return "annotated";
    case Provenance::interpolated: return "interpolated";
    case Provenance::projected: return "projected";
  }
  return "annotated";
}

Provenance parse_provenance(std::string_view name) {
  for (auto p : {Provenance::annotated, Provenance::interpolated, Provenance::projected}) {
    if (to_string(p) == name) return p;
  }
  fail(ErrorCode::InvalidParameter, "unknown provenance '" + std::string(name) + "'");
}

void AnnotationStore::put(AnnotationPoint point) {
  if (point.camera.empty() || point.part.empty()) {
    fail(ErrorCode::InvalidParameter, "annotation needs a camera and a part");
  }
  if (!point.uv.allFinite()) fail(ErrorCode::InvalidParameter, "annotation coordinates must be finite");
  Key key{point.camera, point.frame, point.part};
  points_[std::move(key)] = std::move(point);
}

bool AnnotationStore::erase(const std::string& camera, std::int64_t frame, const std::string& part) {
  return points_.erase(Key{camera, frame, part}) > 0;
}

const AnnotationPoint* AnnotationStore::find(const std::string& camera, std::int64_t frame,
                                             const std::string& part) const {
  auto it = points_.find(Key{camera, frame, part});
  return it == points_.end() ? nullptr : &it->second;
}

std::vector<AnnotationPoint> AnnotationStore::points() const {
  std::vector<AnnotationPoint> out;
  out.reserve(points_.size());
  for (const auto& [_, p] : points_) out.push_back(p);
  return out;
}

std::vector<std::string> AnnotationStore::cameras() const {
  std::set<std::string> names;
  for (const auto& [key, _] : points_) names.insert(std::get<0>(key));
  return {names.begin(), names.end()};
}

std::vector<geometry::CameraAnnotations> AnnotationStore::by_camera(bool annotated_only) const {
  std::vector<geometry::CameraAnnotations> out;
  for (const auto& [_, p] : points_) {
    if (annotated_only && p.provenance != Provenance::annotated) continue;
    if (out.empty() || out.back().camera != p.camera) out.push_back({p.camera, {}});
    out.back().frames[p.frame][p.part] = p.uv;
  }
  return out;
}

std::string format_annotations_csv(const AnnotationStore& store) {
  std::string out = "camera,frame,part,u,v,provenance\n";
  for (const auto& p : store.points()) {
    out += p.camera + "," + std::to_string(p.frame) + "," + p.part + "," + csv::format_double(p.uv.x()) + "," +
           csv::format_double(p.uv.y()) + "," + std::string(to_string(p.provenance)) + "\n";
  }
  return out;
}

AnnotationStore parse_annotations_csv(std::string_view text) {
  const auto lines = csv::split(text, '\n');
  if (lines.empty() || csv::trim(lines[0]) != "camera,frame,part,u,v,provenance") {
    fail(ErrorCode::MalformedHeader, "annotations header must be camera,frame,part,u,v,provenance");
  }
  AnnotationStore store;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const std::string row = "annotations row " + std::to_string(i + 1);
    if (f.size() != 6) fail(ErrorCode::MalformedRow, row + ": expected 6 fields");
    auto frame = csv::parse_int(f[1]);
    auto u = csv::parse_double(f[3]);
    auto v = csv::parse_double(f[4]);
    if (!frame || !u || !v) fail(ErrorCode::MalformedRow, row + ": bad number");
    store.put({f[0], *frame, f[2], Eigen::Vector2d(*u, *v), parse_provenance(f[5])});
  }
  return store;
}

AnnotationStore load_annotations(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  return parse_annotations_csv(csv::read_file(path));
}

void save_annotations(const AnnotationStore& store, const std::filesystem::path& path) {
  csv::write_file_atomic(path, format_annotations_csv(store));
}

std::size_t interpolate_annotations(AnnotationStore& store, const std::string& camera, const std::string& part,
                                    std::int64_t frame_a, std::int64_t frame_b) {
  if (frame_a >= frame_b) fail(ErrorCode::InvalidParameter, "frame_a must precede frame_b");
  const auto* a = store.find(camera, frame_a, part);
  const auto* b = store.find(camera, frame_b, part);
  auto annotated = [](const AnnotationPoint* p) { return p && p->provenance == Provenance::annotated; };
  if (!annotated(a) || !annotated(b)) {
    fail(ErrorCode::MissingEndpoints, camera + "/" + part + ": frames " + std::to_string(frame_a) + " and " +
                                          std::to_string(frame_b) + " must both be annotated");
  }
  const Eigen::Vector2d pa = a->uv;
  const Eigen::Vector2d pb = b->uv;
  const double span = static_cast<double>(frame_b - frame_a);
  std::size_t written = 0;
  for (std::int64_t f = frame_a + 1; f < frame_b; ++f) {
    if (annotated(store.find(camera, f, part))) continue;
    const double t = static_cast<double>(f - frame_a) / span;
    store.put({camera, f, part, (1.0 - t) * pa + t * pb, Provenance::interpolated});
    ++written;
  }
  return written;
}

Reprojection reprojection_assist(const AnnotationStore& store, const std::vector<geometry::CameraProfile>& cams,
                                 std::int64_t frame, const std::string& part) {
  std::vector<geometry::Observation> obs;
  Reprojection out;
  for (std::size_t c = 0; c < cams.size(); ++c) {
    const auto* p = store.find(cams[c].name, frame, part);
    if (p && p->provenance == Provenance::annotated) {
      obs.push_back({c, p->uv, 1.0});
      out.source_cameras.push_back(cams[c].name);
    }
  }
  if (obs.size() < 2) {
    std::string missing;
    for (const auto& cam : cams) {
      const auto* p = store.find(cam.name, frame, part);
      if (p && p->provenance == Provenance::annotated) continue;
      missing += (missing.empty() ? "" : ", ") + cam.name;
    }
    fail(ErrorCode::InsufficientViews, "frame " + std::to_string(frame) + " part " + part + ": " +
                                           std::to_string(obs.size()) + " annotated view(s); annotate one of: " +
                                           missing);
  }
  const auto r = geometry::dlt_reconstruct(cams, obs, 0.0);
  out.point = r.point;
  out.residual = r.rms_residual;
  for (std::size_t c = 0; c < cams.size(); ++c) {
    const auto* p = store.find(cams[c].name, frame, part);
    if (p && p->provenance == Provenance::annotated) continue;
    out.proposals.push_back(
        {cams[c].name, frame, part, geometry::dlt_project(cams[c].dlt, r.point), Provenance::projected});
  }
  return out;
}

}  // namespace cvkit::annotate
