#include "cvkit/cli.hpp"

#include <CLI11.hpp>

#include "cvkit/annotations.hpp"
#include "cvkit/behavior.hpp"
#include "cvkit/benchmark.hpp"
#include "cvkit/calibration.hpp"
#include "cvkit/csv.hpp"
#include "cvkit/metrics.hpp"
#include "cvkit/multiview.hpp"
#include "cvkit/pipeline.hpp"
#include "cvkit/pose_io.hpp"
#include "cvkit/service.hpp"

namespace cvkit::cli {

namespace fs = std::filesystem;

namespace {

// CLI name -> built-in processor id (3D form; `_2d` is chosen for 2D input).
const std::vector<std::pair<std::string, std::string>> kFilters = {
    {"kalman", "kalman_filter"},
    {"interpolate", "linear_interpolate"},
    {"moving-average", "moving_average"},
    {"velocity", "velocity_filter"},
    {"statistical", "statistical_distance_filter"},
};

const std::vector<std::pair<std::string, std::string>> kAnalyses = {
    {"stats", "input_statistics"},     {"view-direction", "view_direction"}, {"gaze", "gaze_heatmap"},
    {"occupancy", "occupancy_map"},    {"rearing", "rearing"},               {"ebc", "ebc_rate_map"},
    {"spikes", "spike_locations"},
};

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    csv::write_file_atomic(out_path, text);
  }
}

struct ProcessorCommand {
  CLI::App* app = nullptr;
  std::string id;
  std::map<std::string, std::string> values;
};

// Options mirror the processor's manifest parameters one-to-one.
void add_param_options(ProcessorCommand& cmd, const pipeline::ProcessorManifest& m) {
  for (const auto& p : m.params) {
    std::string help = p.label;
    if (p.default_value) help += " [default: " + *p.default_value + "]";
    cmd.app->add_option("--" + p.name, cmd.values[p.name], help);
  }
}

std::map<std::string, std::string> bound_params(const ProcessorCommand& cmd) {
  std::map<std::string, std::string> params;
  for (const auto& [name, value] : cmd.values) {
    if (cmd.app->count("--" + name) > 0) params[name] = value;
  }
  return params;
}

const pipeline::ProcessorManifest& variant_for(const pipeline::Registry& reg, const std::string& id, int dims) {
  if (dims == 2) {
    if (const auto* m = reg.find(id + "_2d")) return *m;
  }
  return reg.at(id);
}

pipeline::Value run_processor(const pipeline::Registry& reg, const ProcessorCommand& cmd, const PoseSequence& seq) {
  const auto& m = variant_for(reg, cmd.id, seq.dims());
  auto params = bound_params(cmd);
  for (const auto& p : m.params) {
    if (p.required && !params.count(p.name)) {
      throw CLI::RequiredError("--" + p.name);
    }
    if (auto it = params.find(p.name); it != params.end()) {
      const auto why = p.check(it->second);
      if (!why.empty()) throw CLI::ValidationError("--" + p.name, why);
    }
  }
  return pipeline::apply_builtin(m, pipeline::bind_params(m, params), seq, {});
}

void render_pngs(const std::string& table, const std::string& png) {
  const auto grids = behavior::parse_grids_csv(table);
  if (grids.size() == 1) {
    behavior::render_grid_png(grids.front(), png);
    return;
  }
  const fs::path base(png);
  for (const auto& g : grids) {
    behavior::render_grid_png(g, base.parent_path() / (base.stem().string() + "_" + g.name + base.extension().string()));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cvkit: multi-view pose toolkit", "cvkit"};
  app.require_subcommand(1);
  const auto registry = pipeline::scan_registry();

  // convert
  std::string c_in, c_out, c_from = "cvkit", c_to = "cvkit";
  std::optional<double> c_fps, c_threshold;
  auto* convert = app.add_subcommand("convert", "Translate a pose file between formats");
  convert->add_option("--in", c_in, "Input pose file")->required();
  convert->add_option("--from", c_from, "Input format: cvkit, flat_csv, dlc_csv");
  convert->add_option("--out", c_out, "Output file (stdout when omitted)");
  convert->add_option("--to", c_to, "Output format: cvkit, flat_csv");
  convert->add_option("--fps", c_fps, "Frame rate for formats without one");
  convert->add_option("--threshold", c_threshold, "Score threshold for formats without one");

  // calibrate-export
  std::string ce_annotations, ce_dir;
  std::vector<std::int64_t> ce_frames;
  std::size_t ce_select = 0;
  auto* cal = app.add_subcommand("calibrate-export", "Export annotated frames as an EasyWand package");
  cal->add_option("--annotations", ce_annotations, "annotations.csv")->required();
  cal->add_option("--out-dir", ce_dir, "Package directory")->required();
  cal->add_option("--frames", ce_frames, "Frames to export (default: all synchronized)")->delimiter(',');
  cal->add_option("--select", ce_select, "Pick this many diverse frames instead");

  // triangulate
  std::string t_dlt, t_out;
  std::vector<std::string> t_views;
  auto* tri = app.add_subcommand("triangulate", "Reconstruct 3D poses from calibrated 2D views");
  tri->add_option("--dlt", t_dlt, "DLT coefficient file (11 x cameras)")->required();
  tri->add_option("--view", t_views, "cvkit 2D pose file per camera, in DLT column order")->required();
  tri->add_option("--out", t_out, "Output file (stdout when omitted)");

  // filter
  std::string f_in, f_out, f_format = "cvkit";
  auto* filter = app.add_subcommand("filter", "Apply a trajectory filter");
  filter->require_subcommand(1);
  std::vector<ProcessorCommand> filters;
  for (const auto& [name, id] : kFilters) {
    ProcessorCommand cmd;
    cmd.app = filter->add_subcommand(name, id);
    cmd.id = id;
    filters.push_back(std::move(cmd));
  }
  for (auto& cmd : filters) {
    add_param_options(cmd, registry.at(cmd.id));
    cmd.app->add_option("--in", f_in, "Input pose file")->required();
    cmd.app->add_option("--format", f_format, "Input format");
    cmd.app->add_option("--out", f_out, "Output cvkit file (stdout when omitted)");
  }

  // metric
  std::string m_pred, m_gt, m_out, m_format = "cvkit", m_ref_a, m_ref_b;
  double m_x = 0.0;
  auto* metric = app.add_subcommand("metric", "Pose accuracy metrics");
  metric->require_subcommand(1);
  auto* mpjpe = metric->add_subcommand("mpjpe", "Mean per-joint position error");
  auto* pck = metric->add_subcommand("pck", "Percentage of correct keypoints at x% of a reference length");
  for (auto* sub : {mpjpe, pck}) {
    sub->add_option("--pred", m_pred, "Predicted poses")->required();
    sub->add_option("--gt", m_gt, "Ground-truth poses")->required();
    sub->add_option("--format", m_format, "Input format of both files");
    sub->add_option("--out", m_out, "Report file (stdout when omitted)");
  }
  pck->add_option("--x", m_x, "Threshold in percent of the reference length")->required();
  pck->add_option("--ref-a", m_ref_a, "Reference part a")->required();
  pck->add_option("--ref-b", m_ref_b, "Reference part b")->required();

  // analyze
  std::string a_in, a_out, a_format = "cvkit", a_png, a_events;
  auto* analyze = app.add_subcommand("analyze", "Behavior analysis generators");
  analyze->require_subcommand(1);
  std::vector<ProcessorCommand> analyses;
  for (const auto& [name, id] : kAnalyses) {
    ProcessorCommand cmd;
    cmd.app = analyze->add_subcommand(name, id);
    cmd.id = id;
    analyses.push_back(std::move(cmd));
  }
  for (auto& cmd : analyses) {
    add_param_options(cmd, registry.at(cmd.id));
    cmd.app->add_option("--in", a_in, "Input pose file")->required();
    cmd.app->add_option("--format", a_format, "Input format");
    cmd.app->add_option("--out", a_out, "Output table (stdout when omitted)");
    if (cmd.id == "occupancy_map" || cmd.id == "rearing" || cmd.id == "ebc_rate_map" || cmd.id == "gaze_heatmap") {
      cmd.app->add_option("--png", a_png, "Also render the grid(s) as PNG");
    }
    if (cmd.id == "rearing") cmd.app->add_option("--events", a_events, "Write detected events to this CSV");
  }

  // pipeline
  std::string p_cfg, p_workspace, p_report;
  std::vector<std::string> p_plugins;
  auto* pipe = app.add_subcommand("pipeline", "Run or validate a pipeline configuration");
  pipe->require_subcommand(1);
  auto* p_run = pipe->add_subcommand("run", "Execute a pipeline");
  auto* p_validate = pipe->add_subcommand("validate", "Check a pipeline without running it");
  for (auto* sub : {p_run, p_validate}) {
    sub->add_option("config", p_cfg, "Pipeline file")->required();
    sub->add_option("--plugins", p_plugins, "Directories with processor manifests");
  }
  p_run->add_option("--workspace", p_workspace, "Directory for stage artifacts (default: <config>.run)");
  p_run->add_option("--report", p_report, "Write the run report here instead of stdout");

  // bench-io
  std::string b_source, b_mode = "idle", b_out;
  std::vector<std::string> b_backends{io::kImageDirectoryBackend};
  std::size_t b_frames = 1000, b_runs = 5, b_capacity = io::kDefaultBufferCapacity;
  auto* bench = app.add_subcommand("bench-io", "Frame reading throughput, buffered vs unbuffered");
  bench->add_option("--source", b_source, "Frame source")->required();
  bench->add_option("--backend", b_backends, "Backends to compare");
  bench->add_option("--frames", b_frames, "Frames per run");
  bench->add_option("--mode", b_mode, "idle or loaded")->check(CLI::IsMember({"idle", "loaded"}));
  bench->add_option("--runs", b_runs, "Runs per backend; the median is reported");
  bench->add_option("--capacity", b_capacity, "Buffer capacity in frames");
  bench->add_option("--out", b_out, "CSV file (stdout when omitted)");

  // serve
  std::string s_project, s_host = "127.0.0.1";
  int s_port = 8080;
  std::vector<std::string> s_plugins;
  auto* serve = app.add_subcommand("serve", "Local HTTP service for a project directory");
  serve->add_option("--project", s_project, "Project directory")->required();
  serve->add_option("--host", s_host, "Bind address");
  serve->add_option("--port", s_port, "Port (0 picks a free one)");
  serve->add_option("--plugins", s_plugins, "Extra directories with processor manifests");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }

  try {
    if (convert->parsed()) {
      ReadOptions options;
      if (c_fps) options.fps = *c_fps;
      if (c_threshold) options.score_threshold = *c_threshold;
      const auto from = parse_pose_format(c_from);
      const auto to = parse_pose_format(c_to);
      if (c_out.empty()) {
        out << format_pose_text(read_pose_file(c_in, from, options), to);
      } else {
        translate_pose_file(c_in, from, c_out, to, options);
      }
    } else if (cal->parsed()) {
      const auto cams = annotate::load_annotations(ce_annotations).by_camera();
      std::vector<std::int64_t> frames = ce_frames;
      if (ce_select > 0) frames = geometry::select_calibration_frames(cams, ce_select);
      const auto manifest = geometry::export_easywand_package(cams, frames, ce_dir);
      out << csv::read_file(fs::path(ce_dir) / "manifest.csv");
      (void)manifest;
    } else if (tri->parsed()) {
      const auto cams = geometry::load_dlt_coefficients(t_dlt);
      std::vector<PoseSequence> views;
      for (const auto& v : t_views) views.push_back(read_pose_file(v, PoseFormat::cvkit));
      emit(format_pose_text(geometry::triangulate_views(cams, views), PoseFormat::cvkit), t_out, out);
    } else if (filter->parsed()) {
      for (const auto& cmd : filters) {
        if (!cmd.app->parsed()) continue;
        const auto seq = read_pose_file(f_in, parse_pose_format(f_format));
        const auto result = run_processor(registry, cmd, seq);
        emit(format_pose_text(std::get<PoseSequence>(result), PoseFormat::cvkit), f_out, out);
      }
    } else if (metric->parsed()) {
      const auto format = parse_pose_format(m_format);
      const auto pred = read_pose_file(m_pred, format);
      const auto gt = read_pose_file(m_gt, format);
      const auto report = mpjpe->parsed() ? metrics::mpjpe(pred, gt) : metrics::pck(pred, gt, m_x, m_ref_a, m_ref_b);
      emit(metrics::format_report_csv(report), m_out, out);
    } else if (analyze->parsed()) {
      for (const auto& cmd : analyses) {
        if (!cmd.app->parsed()) continue;
        const auto seq = read_pose_file(a_in, parse_pose_format(a_format));
        const auto result = run_processor(registry, cmd, seq);
        const std::string& table = std::get<pipeline::TableData>(result).csv;
        emit(table, a_out, out);
        if (!a_png.empty()) render_pngs(table, a_png);
        if (!a_events.empty()) {
          const auto params = pipeline::bind_params(registry.at(cmd.id), bound_params(cmd));
          auto real = [&](const char* k) { return *csv::parse_double(params.at(k)); };
          auto integer = [&](const char* k) { return *csv::parse_int(params.at(k)); };
          behavior::Arena arena{real("x_min"), real("x_max"), real("y_min"), real("y_max")};
          const auto r = behavior::detect_rearing(seq, params.at("anchor"), real("z_min"),
                                                  static_cast<int>(integer("min_frames")), arena, integer("nx"),
                                                  integer("ny"));
          csv::write_file_atomic(a_events, behavior::format_rearing_csv(r));
        }
      }
    } else if (pipe->parsed()) {
      std::vector<fs::path> dirs(p_plugins.begin(), p_plugins.end());
      const auto reg = pipeline::scan_registry(dirs);
      for (const auto& w : reg.warnings) err << "warning: " << w << "\n";
      const auto cfg = pipeline::load_pipeline_config(p_cfg);
      if (p_validate->parsed()) {
        const auto diags = pipeline::validate_pipeline(cfg, reg);
        if (diags.empty()) {
          out << "OK\n";
          return kExitOk;
        }
        for (const auto& d : diags) out << "stage " << d.stage << ": " << d.reason << "\n";
        return kExitFailure;
      }
      const fs::path workspace = p_workspace.empty() ? fs::path(p_cfg + ".run") : fs::path(p_workspace);
      try {
        const auto report = pipeline::run_pipeline(cfg, reg, workspace);
        emit(pipeline::format_run_report_csv(report), p_report, out);
      } catch (const pipeline::PipelineFailure& e) {
        err << e.what() << "\n";
        if (!e.stderr_text().empty()) err << e.stderr_text();
        return kExitFailure;
      }
    } else if (bench->parsed()) {
      const auto result = io::benchmark_throughput_median(b_source, b_backends, b_frames, io::parse_load_mode(b_mode),
                                                          b_runs, b_capacity);
      for (const auto& [name, msg] : result.errors) err << "backend " << name << ": " << msg << "\n";
      emit(io::format_benchmark_csv(result.rows), b_out, out);
      if (result.rows.empty()) return kExitFailure;
    } else if (serve->parsed()) {
      std::vector<fs::path> dirs(s_plugins.begin(), s_plugins.end());
      service::Service svc(s_project, dirs);
      const int port = svc.bind(s_host, s_port);
      out << "listening on http://" << s_host << ":" << port << "\n" << std::flush;
      svc.listen();
    }
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace cvkit::cli
