#include "cvkit/pipeline.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "cvkit/behavior.hpp"
#include "cvkit/calibration.hpp"
#include "cvkit/csv.hpp"
#include "cvkit/filters.hpp"
#include "cvkit/multiview.hpp"
#include "cvkit/pose_io.hpp"

namespace cvkit::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

fs::path PipelineConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

PipelineConfig parse_pipeline_config(std::string_view text, std::string_view origin) {
  const auto code = ErrorCode::MalformedConfig;
  const auto blocks = parse_key_value(text, origin, code);
  PipelineConfig cfg;
  for (const auto& [key, value] : blocks.front().entries) {
    if (key == "name") {
      cfg.name = value;
    } else if (key == "source") {
      cfg.source = value;
    } else if (key == "sink") {
      cfg.sink = value;
    } else {
      fail(code, std::string(origin) + ": unknown key '" + key + "'");
    }
  }
  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    const std::string where = std::string(origin) + ":" + std::to_string(block.line);
    if (block.name != "stage") fail(code, where + ": unknown block [" + block.name + "]");
    StageConfig stage;
    for (const auto& [key, value] : block.entries) {
      if (key == "id") {
        stage.processor = value;
      } else if (!stage.params.emplace(key, value).second) {
        fail(code, where + ": parameter '" + key + "' bound twice");
      }
    }
    if (stage.processor.empty()) fail(code, where + ": stage without id");
    cfg.stages.push_back(std::move(stage));
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  PipelineConfig cfg = parse_pipeline_config(csv::read_file(path), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string format_pipeline_config(const PipelineConfig& cfg) {
  std::string out;
  out += "name = " + quote_value(cfg.name) + "\n";
  if (!cfg.source.empty()) out += "source = " + quote_value(cfg.source) + "\n";
  if (!cfg.sink.empty()) out += "sink = " + quote_value(cfg.sink) + "\n";
  for (const auto& stage : cfg.stages) {
    out += "\n[stage]\nid = " + quote_value(stage.processor) + "\n";
    for (const auto& [k, v] : stage.params) out += k + " = " + quote_value(v) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool is_pose(DataKind k) { return k == DataKind::pose2d || k == DataKind::pose3d; }

bool needs_path_binding(const ProcessorManifest& m) {
  return m.exec.mode == ExecSpec::Mode::builtin &&
         (m.exec.target == "load_pose" || m.exec.target == "save_pose" || m.exec.target == "save_table");
}

}  // namespace

std::vector<Diagnostic> validate_pipeline(const PipelineConfig& cfg, const Registry& registry) {
  std::vector<Diagnostic> out;
  if (cfg.stages.empty()) {
    out.push_back({0, "pipeline has no stages"});
    return out;
  }
  std::optional<DataKind> previous;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const auto& stage = cfg.stages[i];
    const auto* m = registry.find(stage.processor);
    if (!m) {
      out.push_back({i, "unknown processor '" + stage.processor + "'"});
      previous.reset();
      continue;
    }
    if (i == 0) {
      if (m->input_kind != DataKind::none && cfg.source.empty()) {
        out.push_back({i, "first stage consumes " + std::string(to_string(m->input_kind)) +
                              " but the pipeline has no source"});
      }
    } else if (previous && *previous != m->input_kind) {
      out.push_back({i, "kind mismatch: '" + m->id + "' expects " +
                            std::string(to_string(m->input_kind)) + " but the previous stage produces " +
                            std::string(to_string(*previous))});
    }
    previous = m->output_kind;

    for (const auto& p : m->params) {
      if (p.required && !stage.params.count(p.name)) {
        out.push_back({i, "missing required parameter '" + p.name + "'"});
      }
    }
    for (const auto& [name, value] : stage.params) {
      const auto* p = m->param(name);
      if (!p) {
        out.push_back({i, "unknown parameter '" + name + "' for '" + m->id + "'"});
        continue;
      }
      const auto why = p->check(value);
      if (!why.empty()) out.push_back({i, "parameter '" + name + "': " + why});
    }
    if (needs_path_binding(*m) && !stage.params.count("path")) {
      const bool loads = m->exec.target == "load_pose";
      if ((loads ? cfg.source : cfg.sink).empty()) {
        out.push_back({i, std::string("no path given and the pipeline has no ") + (loads ? "source" : "sink")});
      }
    }
  }
  return out;
}

PipelineConfig swap_stage(const PipelineConfig& cfg, std::size_t index, const std::string& processor,
                          const std::map<std::string, std::string>& params, const Registry& registry) {
  if (index >= cfg.stages.size()) {
    fail(ErrorCode::OutOfRange, "stage " + std::to_string(index) + " of " + std::to_string(cfg.stages.size()));
  }
  const auto& incoming = registry.at(processor);
  auto kind_error = [&](const std::string& what) {
    fail(ErrorCode::KindMismatch, "stage " + std::to_string(index) + ": '" + processor + "' " + what);
  };
  if (index > 0) {
    if (const auto* prev = registry.find(cfg.stages[index - 1].processor)) {
      if (prev->output_kind != incoming.input_kind) {
        kind_error("expects " + std::string(to_string(incoming.input_kind)) + " but receives " +
                   std::string(to_string(prev->output_kind)));
      }
    }
  } else if (const auto* old = registry.find(cfg.stages[0].processor)) {
    if (old->input_kind != incoming.input_kind) {
      kind_error("expects " + std::string(to_string(incoming.input_kind)) + " but the stage it replaces took " +
                 std::string(to_string(old->input_kind)));
    }
  }
  if (index + 1 < cfg.stages.size()) {
    if (const auto* next = registry.find(cfg.stages[index + 1].processor)) {
      if (next->input_kind != incoming.output_kind) {
        kind_error("produces " + std::string(to_string(incoming.output_kind)) + " but the next stage expects " +
                   std::string(to_string(next->input_kind)));
      }
    }
  }
  PipelineConfig out = cfg;
  out.stages[index] = {processor, params};
  return out;
}

// ---------------------------------------------------------------------------
// Built-in operations

std::map<std::string, std::string> bind_params(const ProcessorManifest& manifest,
                                               const std::map<std::string, std::string>& params) {
  std::map<std::string, std::string> out = params;
  for (const auto& p : manifest.params) {
    if (p.default_value && !out.count(p.name)) out[p.name] = *p.default_value;
  }
  return out;
}

namespace {

class Args {
 public:
  Args(const std::map<std::string, std::string>& params, const ProcessorManifest& m)
      : params_(params), id_(m.id) {}

  const std::string* find(const std::string& name) const {
    auto it = params_.find(name);
    return it == params_.end() ? nullptr : &it->second;
  }
  const std::string& str(const std::string& name) const {
    const auto* v = find(name);
    if (!v) fail(ErrorCode::InvalidParameter, id_ + ": parameter '" + name + "' is not bound");
    return *v;
  }
  double real(const std::string& name) const {
    auto v = csv::parse_double(str(name));
    if (!v) fail(ErrorCode::InvalidParameter, id_ + ": parameter '" + name + "' is not a number");
    return *v;
  }
  long long integer(const std::string& name) const {
    auto v = csv::parse_int(str(name));
    if (!v) fail(ErrorCode::InvalidParameter, id_ + ": parameter '" + name + "' is not an integer");
    return *v;
  }

 private:
  const std::map<std::string, std::string>& params_;
  std::string id_;
};

int dims_of(DataKind k) { return k == DataKind::pose3d ? 3 : 2; }

const PoseSequence& pose_input(const Value& input, const ProcessorManifest& m) {
  const auto* seq = std::get_if<PoseSequence>(&input);
  if (!seq) fail(ErrorCode::KindMismatch, m.id + " expects pose data");
  if (seq->dims() != dims_of(m.input_kind)) {
    fail(ErrorCode::KindMismatch, m.id + " expects " + std::string(to_string(m.input_kind)) + " data, got " +
                                      std::to_string(seq->dims()) + "D poses");
  }
  return *seq;
}

const TableData& table_input(const Value& input, const ProcessorManifest& m) {
  const auto* t = std::get_if<TableData>(&input);
  if (!t) fail(ErrorCode::KindMismatch, m.id + " expects table data");
  return *t;
}

fs::path bound_path(const Args& a, const StageContext& ctx, const std::string& fallback, const char* what) {
  std::string p = a.find("path") ? *a.find("path") : fallback;
  if (p.empty()) fail(ErrorCode::InvalidParameter, std::string("no path and no pipeline ") + what);
  return ctx.config ? ctx.config->resolve(p) : fs::path(p);
}

fs::path param_path(const Args& a, const StageContext& ctx, const std::string& name) {
  return ctx.config ? ctx.config->resolve(a.str(name)) : fs::path(a.str(name));
}

behavior::Arena arena_of(const Args& a) {
  behavior::Arena arena{a.real("x_min"), a.real("x_max"), a.real("y_min"), a.real("y_max")};
  arena.validate();
  return arena;
}

PoseSequence reconstruct(const PoseSequence& cam0, const Args& a, const StageContext& ctx) {
  const auto cams = geometry::load_dlt_coefficients(param_path(a, ctx, "dlt"));
  std::vector<PoseSequence> views{cam0};
  if (const auto* list = a.find("views"); list && !list->empty()) {
    for (const auto& p : csv::split(*list, '|')) {
      const fs::path path = ctx.config ? ctx.config->resolve(csv::trim(p)) : fs::path(csv::trim(p));
      views.push_back(read_pose_file(path, PoseFormat::cvkit));
    }
  }
  return geometry::triangulate_views(cams, views);
}

PoseSequence reproject(const PoseSequence& seq, const Args& a, const StageContext& ctx) {
  const auto cams = geometry::load_dlt_coefficients(param_path(a, ctx, "dlt"));
  const long long c = a.integer("camera");
  if (c < 0 || static_cast<std::size_t>(c) >= cams.size()) {
    fail(ErrorCode::InvalidParameter, "camera " + std::to_string(c) + " not in the DLT file");
  }
  return geometry::reproject_view(cams[static_cast<std::size_t>(c)], seq);
}

std::string view_direction_table(const PoseSequence& seq, const Args& a) {
  const std::string& base = a.str("base");
  const std::string& tip = a.str("tip");
  seq.require_part(base);
  seq.require_part(tip);
  std::string out = "frame,ox,oy,oz,dx,dy,dz\n";
  for (const auto& skel : seq.skeletons()) {
    behavior::Ray ray;
    try {
      ray = behavior::view_direction(skel, base, tip, seq.score_threshold());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidParts || e.code() == ErrorCode::CoincidentParts) continue;
      throw;
    }
    out += std::to_string(skel.frame_index);
    for (int k = 0; k < 3; ++k) out += "," + csv::format_double(ray.origin[k]);
    for (int k = 0; k < 3; ++k) out += "," + csv::format_double(ray.direction[k]);
    out += "\n";
  }
  return out;
}

}  // namespace

Value apply_builtin(const ProcessorManifest& m, const std::map<std::string, std::string>& params,
                    const Value& input, const StageContext& ctx) {
  const Args a(params, m);
  const std::string& op = m.exec.target;
  auto note_written = [&](const fs::path& p) {
    if (ctx.written) ctx.written->push_back(fs::weakly_canonical(p));
  };

  if (op == "load_pose") {
    const fs::path path = bound_path(a, ctx, ctx.config ? ctx.config->source : std::string(), "source");
    ReadOptions options;
    if (a.find("fps")) options.fps = a.real("fps");
    if (a.find("threshold")) options.score_threshold = a.real("threshold");
    PoseSequence seq = read_pose_file(path, parse_pose_format(a.str("format")), options);
    if (seq.dims() != dims_of(m.output_kind)) {
      fail(ErrorCode::KindMismatch, m.id + " produces " + std::string(to_string(m.output_kind)) + " but " +
                                        path.string() + " holds " + std::to_string(seq.dims()) + "D poses");
    }
    return seq;
  }
  if (op == "save_pose") {
    const PoseSequence& seq = pose_input(input, m);
    const fs::path path = bound_path(a, ctx, ctx.config ? ctx.config->sink : std::string(), "sink");
    write_pose_file(seq, path, parse_pose_format(a.str("format")));
    note_written(path);
    return seq;
  }
  if (op == "save_table") {
    const TableData& t = table_input(input, m);
    const fs::path path = bound_path(a, ctx, ctx.config ? ctx.config->sink : std::string(), "sink");
    csv::write_file_atomic(path, t.csv);
    note_written(path);
    return t;
  }
  if (op == "kalman_filter") {
    filters::KalmanParams k;
    k.process_noise = a.real("process_noise");
    k.measurement_noise = a.real("measurement_noise");
    k.initial_variance = a.real("initial_variance");
    return filters::kalman_filter(pose_input(input, m), k);
  }
  if (op == "linear_interpolate") {
    return filters::linear_interpolate(pose_input(input, m), static_cast<int>(a.integer("max_gap")));
  }
  if (op == "moving_average") {
    return filters::moving_average(pose_input(input, m), static_cast<int>(a.integer("window")));
  }
  if (op == "velocity_filter") return filters::velocity_filter(pose_input(input, m), a.real("max_speed"));
  if (op == "statistical_distance_filter") {
    return filters::statistical_distance_filter(pose_input(input, m), static_cast<int>(a.integer("window")),
                                                a.real("z_max"));
  }
  if (op == "reconstruct_3d") return reconstruct(pose_input(input, m), a, ctx);
  if (op == "reproject_2d") return reproject(pose_input(input, m), a, ctx);
  if (op == "input_statistics") {
    return TableData{format_statistics_csv(input_statistics(pose_input(input, m)))};
  }
  if (op == "view_direction") return TableData{view_direction_table(pose_input(input, m), a)};
  if (op == "gaze_heatmap") {
    const auto walls = behavior::load_walls(param_path(a, ctx, "walls"));
    return TableData{behavior::format_grids_csv(
        behavior::gaze_heatmap(pose_input(input, m), a.str("base"), a.str("tip"), walls, a.real("sigma")))};
  }
  if (op == "occupancy_map") {
    return TableData{behavior::format_grid_csv(behavior::occupancy_map(
        pose_input(input, m), a.str("anchor"), arena_of(a), a.integer("nx"), a.integer("ny")))};
  }
  if (op == "rearing") {
    const auto result = behavior::detect_rearing(pose_input(input, m), a.str("anchor"), a.real("z_min"),
                                                 static_cast<int>(a.integer("min_frames")), arena_of(a),
                                                 a.integer("nx"), a.integer("ny"));
    if (!ctx.workspace.empty()) {
      const fs::path events = ctx.workspace / ("stage_" + std::to_string(ctx.index) + "_" + m.id + "_events.csv");
      csv::write_file_atomic(events, behavior::format_rearing_csv(result));
    }
    return TableData{behavior::format_grid_csv(result.counts)};
  }
  if (op == "ebc_rate_map") {
    behavior::EbcParams p;
    p.max_dist = a.real("max_dist");
    p.angle_bins = a.integer("angle_bins");
    p.dist_bins = a.integer("dist_bins");
    p.min_occupancy_s = a.real("min_occupancy_s");
    const auto spikes = behavior::load_spike_train(param_path(a, ctx, "spikes"));
    const auto map = behavior::ebc_rate_map(pose_input(input, m), a.str("anchor"), a.str("base"), a.str("tip"),
                                            spikes, arena_of(a), p);
    return TableData{behavior::format_grid_csv(map.rate)};
  }
  if (op == "spike_locations") {
    const auto spikes = behavior::load_spike_train(param_path(a, ctx, "spikes"));
    return TableData{behavior::format_spike_locations_csv(
        behavior::spike_location_data(pose_input(input, m), a.str("anchor"), a.str("base"), a.str("tip"), spikes))};
  }
  fail(ErrorCode::UnknownProcessor, "no built-in operation '" + op + "'");
}

// ---------------------------------------------------------------------------
// Execution

PipelineFailure::PipelineFailure(ErrorCode code, std::size_t stage, const std::string& message,
                                 RunReport partial, int exit_code, std::string stderr_text)
    : Error(code, message),
      stage_(stage),
      partial_(std::move(partial)),
      exit_code_(exit_code),
      stderr_(std::move(stderr_text)) {}

namespace {

using Clock = std::chrono::steady_clock;

struct ExternalFailure {
  int exit_code;
  std::string message;
  std::string stderr_text;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::string value_text(const Value& v) {
  if (const auto* seq = std::get_if<PoseSequence>(&v)) return format_pose_text(*seq, PoseFormat::cvkit);
  if (const auto* t = std::get_if<TableData>(&v)) return t->csv;
  return {};
}

std::size_t items_of(const Value& v) {
  if (const auto* seq = std::get_if<PoseSequence>(&v)) return seq->size();
  if (const auto* t = std::get_if<TableData>(&v)) {
    const auto n = static_cast<std::size_t>(std::count(t->csv.begin(), t->csv.end(), '\n'));
    return n > 0 ? n - 1 : 0;
  }
  return 0;
}

Value read_value(DataKind kind, const fs::path& path) {
  if (is_pose(kind)) {
    PoseSequence seq = read_pose_file(path, PoseFormat::cvkit);
    if (seq.dims() != dims_of(kind)) {
      fail(ErrorCode::KindMismatch, path.string() + " holds " + std::to_string(seq.dims()) + "D poses, expected " +
                                        std::string(to_string(kind)));
    }
    return seq;
  }
  if (kind == DataKind::table) return TableData{csv::read_file(path)};
  return std::monostate{};
}

Value run_external(const ProcessorManifest& m, const std::map<std::string, std::string>& params,
                   const Value& input, const PipelineConfig& cfg, const fs::path& stem,
                   const fs::path& artifact) {
  std::string input_path;
  if (m.input_kind == DataKind::none) {
    input_path = cfg.source.empty() ? std::string() : cfg.resolve(cfg.source).string();
  } else {
    const fs::path in = stem.string() + ".input.csv";
    csv::write_file_atomic(in, value_text(input));
    input_path = in.string();
  }
  std::error_code ec;
  fs::remove(artifact, ec);
  std::string command;
  const std::string& tmpl = m.exec.target;
  for (std::size_t pos = 0; pos < tmpl.size();) {
    const auto open = tmpl.find('{', pos);
    const auto close = open == std::string::npos ? std::string::npos : tmpl.find('}', open);
    if (close == std::string::npos) {
      command += tmpl.substr(pos);
      break;
    }
    command += tmpl.substr(pos, open - pos);
    const std::string slot = tmpl.substr(open + 1, close - open - 1);
    std::string value;
    if (slot == "input") {
      value = input_path;
    } else if (slot == "output") {
      value = artifact.string();
    } else if (auto it = params.find(slot); it != params.end()) {
      value = it->second;
    }
    command += shell_quote(value);
    pos = close + 1;
  }
  const fs::path err = stem.string() + ".stderr.txt";
  const fs::path out = stem.string() + ".stdout.txt";
  const std::string full = "(" + command + ") >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
  const int status = std::system(full.c_str());
  std::string stderr_text;
  try {
    stderr_text = csv::read_file(err);
  } catch (const Error&) {
  }
  if (status == -1) throw ExternalFailure{-1, "could not start the command", stderr_text};
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  if (code != 0) throw ExternalFailure{code, "command exited with code " + std::to_string(code), stderr_text};
  if (m.output_kind != DataKind::none && !fs::exists(artifact, ec)) {
    throw ExternalFailure{0, "command did not write " + artifact.string(), stderr_text};
  }
  return read_value(m.output_kind, artifact);
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg, const Registry& registry, const fs::path& workspace) {
  const auto diagnostics = validate_pipeline(cfg, registry);
  if (!diagnostics.empty()) {
    std::string msg;
    for (const auto& d : diagnostics) {
      if (!msg.empty()) msg += "; ";
      msg += "stage " + std::to_string(d.stage) + ": " + d.reason;
    }
    fail(ErrorCode::InvalidPipeline, msg);
  }
  std::error_code ec;
  fs::create_directories(workspace, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create workspace " + workspace.string() + ": " + ec.message());

  RunReport report;
  report.pipeline = cfg.name;
  std::vector<fs::path> written;
  Value value;

  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const auto& stage = cfg.stages[i];
    const auto& m = registry.at(stage.processor);
    const auto params = bind_params(m, stage.params);
    const fs::path stem = workspace / ("stage_" + std::to_string(i) + "_" + m.id);
    const fs::path artifact = stem.string() + ".csv";
    StageReport sr;
    sr.processor = m.id;
    const auto start = Clock::now();
    try {
      if (i == 0 && m.input_kind != DataKind::none) value = read_value(m.input_kind, cfg.resolve(cfg.source));
      if (const auto* seq = std::get_if<PoseSequence>(&value); seq && !seq->empty()) {
        sr.input_stats = input_statistics(*seq);
      }
      if (m.exec.mode == ExecSpec::Mode::builtin) {
        StageContext ctx{&cfg, workspace, i, &written};
        value = apply_builtin(m, params, value, ctx);
        if (!std::holds_alternative<std::monostate>(value)) csv::write_file_atomic(artifact, value_text(value));
      } else {
        value = run_external(m, params, value, cfg, stem, artifact);
      }
    } catch (const ExternalFailure& e) {
      throw PipelineFailure(ErrorCode::ExternalProcessError, i,
                            "stage " + std::to_string(i) + " (" + m.id + "): " + e.message, report, e.exit_code,
                            e.stderr_text);
    } catch (const std::exception& e) {
      throw PipelineFailure(ErrorCode::StageFailure, i, "stage " + std::to_string(i) + " (" + m.id + "): " + e.what(),
                            report);
    }
    sr.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    sr.items = items_of(value);
    if (!std::holds_alternative<std::monostate>(value)) sr.artifact = artifact;
    report.stages.push_back(std::move(sr));
  }

  if (!cfg.sink.empty() && !std::holds_alternative<std::monostate>(value)) {
    const fs::path sink = cfg.resolve(cfg.sink);
    const auto canonical = fs::weakly_canonical(sink);
    if (std::find(written.begin(), written.end(), canonical) == written.end()) {
      csv::write_file_atomic(sink, value_text(value));
    }
  }
  report.output = std::move(value);
  return report;
}

std::string format_run_report_csv(const RunReport& report) {
  std::string out = "scope,key,value\n";
  out += "pipeline,name," + report.pipeline + "\n";
  out += "pipeline,stages," + std::to_string(report.stages.size()) + "\n";
  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    const auto& s = report.stages[i];
    const std::string scope = "stage_" + std::to_string(i);
    out += scope + ",processor," + s.processor + "\n";
    out += scope + ",wall_seconds," + csv::format_double(s.wall_seconds) + "\n";
    out += scope + ",items," + std::to_string(s.items) + "\n";
    out += scope + ",artifact," + s.artifact.string() + "\n";
    if (s.input_stats) {
      for (const auto& p : s.input_stats->parts) {
        out += scope + ",valid_fraction:" + p.part + "," + csv::format_double(p.valid_fraction) + "\n";
      }
    }
  }
  return out;
}

}  // namespace cvkit::pipeline
