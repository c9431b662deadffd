#include "cvkit/service.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cvkit/annotations.hpp"
#include "cvkit/calibration.hpp"
#include "cvkit/csv.hpp"
#include "cvkit/frame_io.hpp"
#include "cvkit/project.hpp"

namespace cvkit::service {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownProcessor:
    case ErrorCode::OutOfRange:
      return 404;
    case ErrorCode::IoFailure:
    case ErrorCode::StageFailure:
    case ErrorCode::ExternalProcessError:
    case ErrorCode::DecodeFailure:
    case ErrorCode::UnreadableSource:
    case ErrorCode::UnknownBackend:
      return 500;
    case ErrorCode::InsufficientViews:
    case ErrorCode::RankDeficient:
    case ErrorCode::MissingEndpoints:
    case ErrorCode::NotEnoughAnnotatedFrames:
    case ErrorCode::EmptyAnnotationSet:
    case ErrorCode::KindMismatch:
    case ErrorCode::InvalidPipeline:
      return 422;
    default:
      return 400;
  }
}

namespace {

constexpr const char* kAnnotationsFile = "annotations.csv";

struct HttpError {
  ErrorCode code;
  std::string message;
  json detail;
};

[[noreturn]] void not_found(const std::string& what) { throw HttpError{ErrorCode::NotFound, what, nullptr}; }

std::string message_of(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

json error_json(ErrorCode code, const std::string& message, const json& detail) {
  return {{"code", std::string(to_string(code))}, {"message", message}, {"detail", detail}};
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw HttpError{ErrorCode::InvalidParameter, std::string("request body is not JSON: ") + e.what(), nullptr};
  }
}

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') return false;
  }
  return id.front() != '.';
}

json manifest_json(const pipeline::ProcessorManifest& m) {
  json params = json::array();
  for (const auto& p : m.params) {
    params.push_back({{"name", p.name},
                      {"type", std::string(to_string(p.type))},
                      {"variants", p.variants},
                      {"required", p.required},
                      {"default", p.default_value ? json(*p.default_value) : json(nullptr)},
                      {"label", p.label}});
  }
  return {{"id", m.id},
          {"category", std::string(to_string(m.category))},
          {"input_kind", std::string(to_string(m.input_kind))},
          {"output_kind", std::string(to_string(m.output_kind))},
          {"exec", (m.exec.mode == pipeline::ExecSpec::Mode::builtin ? "builtin:" : "external:") + m.exec.target},
          {"origin", m.origin},
          {"params", params}};
}

json point_json(const annotate::AnnotationPoint& p) {
  return {{"camera", p.camera},
          {"frame", p.frame},
          {"part", p.part},
          {"u", p.uv.x()},
          {"v", p.uv.y()},
          {"provenance", std::string(to_string(p.provenance))}};
}

annotate::AnnotationPoint point_from_json(const json& j) {
  annotate::AnnotationPoint p;
  p.camera = j.at("camera").get<std::string>();
  p.frame = j.at("frame").get<std::int64_t>();
  p.part = j.at("part").get<std::string>();
  p.uv = {j.at("u").get<double>(), j.at("v").get<double>()};
  p.provenance = annotate::parse_provenance(j.value("provenance", "annotated"));
  return p;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json report_json(const pipeline::RunReport& r, const fs::path& run_dir) {
  json stages = json::array();
  for (std::size_t i = 0; i < r.stages.size(); ++i) {
    const auto& s = r.stages[i];
    json stage{{"index", i},
               {"processor", s.processor},
               {"wall_seconds", s.wall_seconds},
               {"items", s.items},
               {"artifact", s.artifact.empty() ? json(nullptr) : json(fs::relative(s.artifact, run_dir).string())}};
    if (s.input_stats) {
      json parts = json::array();
      for (const auto& p : s.input_stats->parts) {
        parts.push_back({{"part", p.part},
                         {"valid_fraction", p.valid_fraction},
                         {"mean_score", p.mean_score},
                         {"min", vector_json(p.min)},
                         {"max", vector_json(p.max)},
                         {"mean", vector_json(p.mean)}});
      }
      stage["input_stats"] = {{"frames", s.input_stats->frames},
                              {"fps", s.input_stats->fps},
                              {"dims", s.input_stats->dims},
                              {"parts", parts}};
    }
    stages.push_back(std::move(stage));
  }
  return {{"pipeline", r.pipeline}, {"stages", stages}};
}

std::int64_t to_index(const std::string& text) {
  auto v = csv::parse_int(text);
  if (!v) throw HttpError{ErrorCode::InvalidParameter, "'" + text + "' is not an integer", nullptr};
  return *v;
}

}  // namespace

struct Service::Impl {
  fs::path dir;
  pipeline::Registry registry;
  httplib::Server server;

  std::shared_mutex state_mutex;

  std::mutex frames_mutex;
  std::map<std::string, std::unique_ptr<io::FrameBackend>> backends;

  std::mutex run_mutex;
  std::condition_variable run_cv;
  std::condition_variable idle_cv;
  std::deque<std::string> run_queue;
  bool running_one = false;
  bool stopping = false;
  long next_run = 1;
  std::thread worker;

  Impl(fs::path project_dir, const std::vector<fs::path>& extra_dirs) : dir(std::move(project_dir)) {
    const Project project = load_project(dir);
    std::vector<fs::path> dirs;
    for (const auto& d : project.plugin_dirs) dirs.push_back(fs::path(d).is_absolute() ? fs::path(d) : dir / d);
    dirs.insert(dirs.end(), extra_dirs.begin(), extra_dirs.end());
    registry = pipeline::scan_registry(dirs);
    annotate::load_annotations(dir / kAnnotationsFile);
    recover_runs();
    routes();
    worker = std::thread([this] { work(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(run_mutex);
      stopping = true;
    }
    run_cv.notify_all();
    if (worker.joinable()) worker.join();
  }

  fs::path runs_dir() const { return dir / "runs"; }
  fs::path pipelines_dir() const { return dir / "pipelines"; }

  // Runs interrupted by a previous shutdown are marked failed; ids continue
  // after the highest existing one.
  void recover_runs() {
    std::error_code ec;
    if (!fs::is_directory(runs_dir(), ec)) return;
    for (const auto& entry : fs::directory_iterator(runs_dir(), ec)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("run-", 0) != 0) continue;
      if (auto n = csv::parse_int(name.substr(4))) next_run = std::max(next_run, static_cast<long>(*n) + 1);
      const fs::path status = entry.path() / "status.json";
      if (!fs::exists(status, ec)) continue;
      json s = json::parse(csv::read_file(status), nullptr, false);
      if (s.is_discarded()) continue;
      if (s.value("status", "") == "queued" || s.value("status", "") == "running") {
        s["status"] = "failed";
        s["error"] = error_json(ErrorCode::StageFailure, "interrupted by a service restart", nullptr);
        csv::write_file_atomic(status, s.dump(2) + "\n");
      }
    }
  }

  template <typename F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_json(res, error_json(e.code, e.message, e.detail), http_status(e.code));
      } catch (const pipeline::PipelineFailure& e) {
        send_json(res, error_json(e.code(), message_of(e), {{"stage", e.stage()}}), http_status(e.code()));
      } catch (const Error& e) {
        send_json(res, error_json(e.code(), message_of(e), nullptr), http_status(e.code()));
      } catch (const json::exception& e) {
        send_json(res, error_json(ErrorCode::InvalidParameter, std::string("bad request body: ") + e.what(), nullptr),
                  400);
      } catch (const std::exception& e) {
        send_json(res, error_json(ErrorCode::IoFailure, e.what(), nullptr), 500);
      }
    };
  }

  void routes() {
    server.Get("/processors", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& m : registry.manifests) list.push_back(manifest_json(m));
      send_json(res, {{"processors", list}, {"warnings", registry.warnings}});
    }));

    server.Get("/project", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      res.set_content(project_to_json(load_project(dir)), "application/json");
    }));
    server.Post("/project", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Project p = project_from_json(req.body);
      std::unique_lock lock(state_mutex);
      save_project(p, dir);
      {
        std::lock_guard frames(frames_mutex);
        backends.clear();
      }
      res.set_content(project_to_json(p), "application/json");
    }));

    server.Get(R"(/frames/([^/]+)/(-?\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string camera = req.matches[1];
      const std::int64_t index = to_index(req.matches[2]);
      Project project;
      {
        std::shared_lock lock(state_mutex);
        project = load_project(dir);
      }
      const auto* cam = project.camera(camera);
      if (!cam) not_found("no camera '" + camera + "'");
      if (index < 0) not_found("frame " + std::to_string(index));
      std::lock_guard lock(frames_mutex);
      auto& backend = backends[camera];
      if (!backend) {
        const fs::path stream = fs::path(cam->stream).is_absolute() ? fs::path(cam->stream) : dir / cam->stream;
        backend = io::BackendRegistry::global().create(cam->backend, stream);
      }
      auto frame = backend->decode(static_cast<std::size_t>(index));
      if (!frame) not_found("camera '" + camera + "' has no frame " + std::to_string(index));
      const auto png = io::encode_png(*frame);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Get("/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      const auto store = annotate::load_annotations(dir / kAnnotationsFile);
      json points = json::array();
      for (const auto& p : store.points()) {
        if (req.has_param("camera") && p.camera != req.get_param_value("camera")) continue;
        if (req.has_param("frame") && p.frame != to_index(req.get_param_value("frame"))) continue;
        if (req.has_param("part") && p.part != req.get_param_value("part")) continue;
        points.push_back(point_json(p));
      }
      send_json(res, {{"points", points}});
    }));
    server.Post("/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      std::vector<annotate::AnnotationPoint> incoming;
      if (body.contains("points")) {
        for (const auto& j : body.at("points")) incoming.push_back(point_from_json(j));
      } else {
        incoming.push_back(point_from_json(body));
      }
      std::unique_lock lock(state_mutex);
      const Project project = load_project(dir);
      auto store = annotate::load_annotations(dir / kAnnotationsFile);
      for (auto& p : incoming) {
        if (!project.cameras.empty() && !project.camera(p.camera)) {
          throw HttpError{ErrorCode::InvalidParameter, "no camera '" + p.camera + "' in the project", nullptr};
        }
        store.put(std::move(p));
      }
      annotate::save_annotations(store, dir / kAnnotationsFile);
      send_json(res, {{"stored", incoming.size()}});
    }));
    server.Delete("/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      for (const char* key : {"camera", "frame", "part"}) {
        if (!req.has_param(key)) {
          throw HttpError{ErrorCode::InvalidParameter, std::string("missing query parameter '") + key + "'", nullptr};
        }
      }
      std::unique_lock lock(state_mutex);
      auto store = annotate::load_annotations(dir / kAnnotationsFile);
      if (!store.erase(req.get_param_value("camera"), to_index(req.get_param_value("frame")),
                       req.get_param_value("part"))) {
        not_found("no such annotation");
      }
      annotate::save_annotations(store, dir / kAnnotationsFile);
      send_json(res, {{"deleted", 1}});
    }));
    server.Post("/annotations/interpolate", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      std::unique_lock lock(state_mutex);
      auto store = annotate::load_annotations(dir / kAnnotationsFile);
      const auto filled = annotate::interpolate_annotations(
          store, body.at("camera").get<std::string>(), body.at("part").get<std::string>(),
          body.at("frame_a").get<std::int64_t>(), body.at("frame_b").get<std::int64_t>());
      annotate::save_annotations(store, dir / kAnnotationsFile);
      send_json(res, {{"filled", filled}});
    }));

    server.Post("/reproject", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const auto frame = body.at("frame").get<std::int64_t>();
      const auto part = body.at("part").get<std::string>();
      const bool store_proposals = body.value("store", false);
      std::unique_lock lock(state_mutex);
      const Project project = load_project(dir);
      auto store = annotate::load_annotations(dir / kAnnotationsFile);
      const auto r = annotate::reprojection_assist(store, project.calibrated_cameras(), frame, part);
      json proposals = json::array();
      for (const auto& p : r.proposals) {
        json pj = point_json(p);
        pj["residual"] = r.residual;
        proposals.push_back(std::move(pj));
        if (store_proposals) store.put(p);
      }
      if (store_proposals) annotate::save_annotations(store, dir / kAnnotationsFile);
      send_json(res, {{"point", {r.point.x(), r.point.y(), r.point.z()}},
                      {"residual", r.residual},
                      {"source_cameras", r.source_cameras},
                      {"proposals", proposals}});
    }));

    server.Post("/calibration/select-frames", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const auto k = body.at("k").get<std::size_t>();
      std::shared_lock lock(state_mutex);
      const auto store = annotate::load_annotations(dir / kAnnotationsFile);
      send_json(res, {{"frames", geometry::select_calibration_frames(store.by_camera(), k)}});
    }));
    server.Post("/calibration/export-easywand", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const std::string sub = body.value("dir", "easywand");
      const fs::path out = fs::path(sub).is_absolute() ? fs::path(sub) : dir / sub;
      std::unique_lock lock(state_mutex);
      const auto cams = annotate::load_annotations(dir / kAnnotationsFile).by_camera();
      std::vector<std::int64_t> frames = body.value("frames", std::vector<std::int64_t>{});
      if (frames.empty() && body.contains("k")) {
        frames = geometry::select_calibration_frames(cams, body.at("k").get<std::size_t>());
      }
      const auto manifest = geometry::export_easywand_package(cams, frames, out);
      send_json(res, {{"dir", out.string()}, {"cameras", manifest.cameras}, {"frames", manifest.frames}});
    }));
    server.Post("/calibration/import-dlt", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      std::unique_lock lock(state_mutex);
      std::vector<geometry::CameraProfile> profiles;
      if (body.contains("text")) {
        profiles = geometry::parse_dlt_coefficients(body.at("text").get<std::string>());
      } else {
        const std::string path = body.at("path").get<std::string>();
        profiles = geometry::load_dlt_coefficients(fs::path(path).is_absolute() ? fs::path(path) : dir / path);
      }
      Project project = load_project(dir);
      if (profiles.size() != project.cameras.size()) {
        throw HttpError{ErrorCode::InvalidParameter,
                        std::to_string(profiles.size()) + " DLT columns for " +
                            std::to_string(project.cameras.size()) + " project cameras",
                        nullptr};
      }
      json names = json::array();
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        auto& cam = project.cameras[i];
        profiles[i].name = cam.name;
        if (cam.profile) {
          profiles[i].width = cam.profile->width;
          profiles[i].height = cam.profile->height;
        }
        cam.profile = profiles[i];
        names.push_back(cam.name);
      }
      save_project(project, dir);
      send_json(res, {{"cameras", names}});
    }));

    server.Get("/pipelines", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      json list = json::array();
      std::error_code ec;
      std::vector<fs::path> files;
      if (fs::is_directory(pipelines_dir(), ec)) {
        for (const auto& e : fs::directory_iterator(pipelines_dir(), ec)) {
          if (e.path().extension() == ".pipeline") files.push_back(e.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const std::string text = csv::read_file(f);
        json entry{{"id", f.stem().string()}, {"config", text}};
        try {
          entry["diagnostics"] = diagnostics_json(pipeline::validate_pipeline(
              pipeline::parse_pipeline_config(text, f.string()), registry));
        } catch (const Error& e) {
          entry["diagnostics"] = json::array({{{"stage", nullptr}, {"reason", message_of(e)}}});
        }
        list.push_back(std::move(entry));
      }
      send_json(res, {{"pipelines", list}});
    }));
    server.Post("/pipelines", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const auto id = body.at("id").get<std::string>();
      if (!safe_id(id)) throw HttpError{ErrorCode::InvalidParameter, "pipeline id '" + id + "' is not allowed", nullptr};
      const auto text = body.at("config").get<std::string>();
      const auto cfg = pipeline::parse_pipeline_config(text, id);
      const auto diags = pipeline::validate_pipeline(cfg, registry);
      std::unique_lock lock(state_mutex);
      fs::create_directories(pipelines_dir());
      csv::write_file_atomic(pipelines_dir() / (id + ".pipeline"), text);
      send_json(res, {{"id", id}, {"diagnostics", diagnostics_json(diags)}});
    }));
    server.Post(R"(/pipelines/([^/]+)/run)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      std::error_code ec;
      if (!safe_id(id) || !fs::exists(pipelines_dir() / (id + ".pipeline"), ec)) not_found("no pipeline '" + id + "'");
      std::string run_id;
      {
        std::lock_guard lock(run_mutex);
        char buf[32];
        std::snprintf(buf, sizeof buf, "run-%06ld", next_run++);
        run_id = buf;
        fs::create_directories(runs_dir() / run_id);
        write_status(run_id, {{"id", run_id}, {"pipeline", id}, {"status", "queued"}});
        run_queue.push_back(run_id);
      }
      run_cv.notify_one();
      send_json(res, {{"run_id", run_id}, {"status", "queued"}}, 202);
    }));
    server.Get(R"(/runs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(read_status(req.matches[1]).dump(), "application/json");
    }));
    server.Get(R"(/runs/([^/]+)/artifacts/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string run_id = req.matches[1];
      const json status = read_status(run_id);
      const auto stage = static_cast<std::size_t>(to_index(req.matches[2]));
      if (!status.contains("report") || stage >= status["report"]["stages"].size()) {
        not_found("run " + run_id + " has no artifact for stage " + std::to_string(stage));
      }
      const json& artifact = status["report"]["stages"][stage]["artifact"];
      if (artifact.is_null()) not_found("stage " + std::to_string(stage) + " produced no artifact");
      res.set_content(csv::read_file(runs_dir() / run_id / artifact.get<std::string>()), "text/csv");
    }));
  }

  static json diagnostics_json(const std::vector<pipeline::Diagnostic>& diags) {
    json out = json::array();
    for (const auto& d : diags) out.push_back({{"stage", d.stage}, {"reason", d.reason}});
    return out;
  }

  void write_status(const std::string& run_id, const json& status) {
    csv::write_file_atomic(runs_dir() / run_id / "status.json", status.dump(2) + "\n");
  }

  json read_status(const std::string& run_id) {
    std::error_code ec;
    const fs::path file = runs_dir() / run_id / "status.json";
    if (!safe_id(run_id) || !fs::exists(file, ec)) not_found("no run '" + run_id + "'");
    return json::parse(csv::read_file(file));
  }

  void execute(const std::string& run_id) {
    json status = read_status(run_id);
    const std::string pid = status["pipeline"];
    status["status"] = "running";
    write_status(run_id, status);
    const fs::path workspace = runs_dir() / run_id;
    try {
      pipeline::PipelineConfig cfg;
      {
        std::shared_lock lock(state_mutex);
        cfg = pipeline::load_pipeline_config(pipelines_dir() / (pid + ".pipeline"));
      }
      cfg.base_dir = dir;
      const auto report = pipeline::run_pipeline(cfg, registry, workspace);
      status["status"] = "done";
      status["report"] = report_json(report, workspace);
    } catch (const pipeline::PipelineFailure& e) {
      status["status"] = "failed";
      status["report"] = report_json(e.partial_report(), workspace);
      status["error"] = error_json(e.code(), message_of(e),
                                   {{"stage", e.stage()}, {"exit_code", e.exit_code()}, {"stderr", e.stderr_text()}});
    } catch (const Error& e) {
      status["status"] = "failed";
      status["error"] = error_json(e.code(), message_of(e), nullptr);
    } catch (const std::exception& e) {
      status["status"] = "failed";
      status["error"] = error_json(ErrorCode::StageFailure, e.what(), nullptr);
    }
    write_status(run_id, status);
  }

  void work() {
    std::unique_lock lock(run_mutex);
    while (true) {
      run_cv.wait(lock, [&] { return stopping || !run_queue.empty(); });
      if (stopping) return;
      const std::string id = run_queue.front();
      run_queue.pop_front();
      running_one = true;
      lock.unlock();
      try {
        execute(id);
      } catch (...) {
      }
      lock.lock();
      running_one = false;
      idle_cv.notify_all();
    }
  }
};

Service::Service(fs::path project_dir, std::vector<fs::path> plugin_dirs)
    : impl_(std::make_unique<Impl>(std::move(project_dir), plugin_dirs)) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  // SO_REUSEADDR only, never SO_REUSEPORT.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : impl_->server.bind_to_port(host, port) ? port : -1;
  if (bound < 0) fail(ErrorCode::PortInUse, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_for_runs() {
  std::unique_lock lock(impl_->run_mutex);
  impl_->idle_cv.wait(lock, [&] { return impl_->run_queue.empty() && !impl_->running_one; });
}

const pipeline::Registry& Service::registry() const { return impl_->registry; }

}  // namespace cvkit::service
