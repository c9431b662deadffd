#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cvkit/annotations.hpp"
#include "cvkit/behavior.hpp"
#include "cvkit/benchmark.hpp"
#include "cvkit/calibration.hpp"
#include "cvkit/cli.hpp"
#include "cvkit/csv.hpp"
#include "cvkit/filters.hpp"
#include "cvkit/frame_io.hpp"
#include "cvkit/metrics.hpp"
#include "cvkit/multiview.hpp"
#include "cvkit/pipeline.hpp"
#include "cvkit/pose_io.hpp"
#include "cvkit/statistics.hpp"
#include "test_util.hpp"

namespace {

using namespace cvkit;
namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = test::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::vector<test::PlantedEvent> events{{40, 49}, {120, 131}};
    session_ = test::random_session(3, 300, events);
    write_pose_file(session_, path("session.csv"), PoseFormat::cvkit);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  PoseSequence session_{{"body"}, 3};
};

const std::vector<std::string> kArenaArgs = {"--x_min", "0", "--x_max", "500", "--y_min", "0", "--y_max", "400"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST_F(CliTest, Convert) {
  std::mt19937_64 rng(5);
  const auto seq = test::random_sequence(rng, 40, 2, {"a", "b", "c"});
  write_pose_file(seq, path("in.csv"), PoseFormat::cvkit);
  auto r = cli({"convert", "--in", path("in.csv"), "--to", "flat_csv"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, format_pose_text(seq, PoseFormat::flat_csv));
  r = cli({"convert", "--in", path("in.csv"), "--to", "flat_csv", "--out", path("out.csv")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(csv::read_file(path("out.csv")), format_pose_text(seq, PoseFormat::flat_csv));

  const auto dlc = std::string(CVKIT_FIXTURES) + "/dlc_sample.csv";
  r = cli({"convert", "--in", dlc, "--from", "dlc_csv", "--fps", "25"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  ReadOptions options;
  options.fps = 25;
  EXPECT_EQ(r.out, format_pose_text(read_pose_file(dlc, PoseFormat::dlc_csv, options), PoseFormat::cvkit));
}

TEST_F(CliTest, Filters) {
  const auto in = path("session.csv");
  auto r = cli({"filter", "moving-average", "--in", in, "--window", "7"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, format_pose_text(filters::moving_average(session_, 7), PoseFormat::cvkit));

  r = cli({"filter", "kalman", "--in", in, "--process_noise", "0.5"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  filters::KalmanParams kp;
  kp.process_noise = 0.5;
  EXPECT_EQ(r.out, format_pose_text(filters::kalman_filter(session_, kp), PoseFormat::cvkit));

  r = cli({"filter", "interpolate", "--in", in});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, format_pose_text(filters::linear_interpolate(session_), PoseFormat::cvkit));

  r = cli({"filter", "velocity", "--in", in, "--max_speed", "8"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, format_pose_text(filters::velocity_filter(session_, 8), PoseFormat::cvkit));

  r = cli({"filter", "statistical", "--in", in, "--window", "9", "--z_max", "2.5", "--out", path("stat.csv")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(csv::read_file(path("stat.csv")),
            format_pose_text(filters::statistical_distance_filter(session_, 9, 2.5), PoseFormat::cvkit));

  std::mt19937_64 rng(9);
  const auto flat = test::random_sequence(rng, 50, 2, {"a", "b"});
  write_pose_file(flat, path("flat.csv"), PoseFormat::flat_csv);
  r = cli({"filter", "moving-average", "--in", path("flat.csv"), "--format", "flat_csv"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto reread = read_pose_file(path("flat.csv"), PoseFormat::flat_csv);
  EXPECT_EQ(r.out, format_pose_text(filters::moving_average(reread), PoseFormat::cvkit));

  EXPECT_EQ(cli({"filter", "velocity", "--in", in}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"filter", "moving-average", "--in", in, "--window", "abc"}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"filter", "moving-average", "--in", path("missing.csv")}).code, cli::kExitFailure);
}

TEST_F(CliTest, Metrics) {
  std::mt19937_64 rng(11);
  const auto gt = test::random_sequence(rng, 30, 3, {"a", "b", "c", "d"}, 0.1);
  const auto pred = test::random_sequence(rng, 30, 3, {"a", "b", "c", "d"}, 0.1);
  write_pose_file(gt, path("gt.csv"), PoseFormat::cvkit);
  write_pose_file(pred, path("pred.csv"), PoseFormat::cvkit);
  const auto gt_r = read_pose_file(path("gt.csv"), PoseFormat::cvkit);
  const auto pred_r = read_pose_file(path("pred.csv"), PoseFormat::cvkit);
  auto r = cli({"metric", "mpjpe", "--pred", path("pred.csv"), "--gt", path("gt.csv")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, metrics::format_report_csv(metrics::mpjpe(pred_r, gt_r)));
  const auto& parts = gt.part_order();
  r = cli({"metric", "pck", "--pred", path("pred.csv"), "--gt", path("gt.csv"), "--x", "20", "--ref-a", parts[0],
           "--ref-b", parts[1]});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, metrics::format_report_csv(metrics::pck(pred_r, gt_r, 20, parts[0], parts[1])));
}

TEST_F(CliTest, Analyses) {
  const auto in = path("session.csv");
  const auto seq = read_pose_file(in, PoseFormat::cvkit);
  const behavior::Arena arena{0, 500, 0, 400};

  auto r = cli({"analyze", "stats", "--in", in});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, pipeline::format_statistics_csv(pipeline::input_statistics(seq)));

  r = cli(with({"analyze", "occupancy", "--in", in, "--anchor", "body", "--nx", "10", "--ny", "8", "--png",
                path("occ.png")},
               kArenaArgs));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, behavior::format_grid_csv(behavior::occupancy_map(seq, "body", arena, 10, 8)));
  EXPECT_TRUE(fs::exists(path("occ.png")));

  r = cli(with({"analyze", "rearing", "--in", in, "--anchor", "body", "--z_min", "60", "--events", path("ev.csv")},
               kArenaArgs));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto rearing = behavior::detect_rearing(seq, "body", 60, 5, arena, 20, 20);
  EXPECT_EQ(r.out, behavior::format_grid_csv(rearing.counts));
  EXPECT_EQ(csv::read_file(path("ev.csv")), behavior::format_rearing_csv(rearing));
  EXPECT_EQ(rearing.events.size(), 2u);

  std::ofstream(path("walls.csv")) << "name,ox,oy,oz,ux,uy,uz,vx,vy,vz,width,height,nu,nv\n"
                                      "south,0,0,0,1,0,0,0,0,1,500,300,25,15\n"
                                      "east,500,0,0,0,1,0,0,0,1,400,300,20,15\n";
  r = cli({"analyze", "gaze", "--in", in, "--base", "head_base", "--tip", "head_tip", "--walls", path("walls.csv"),
           "--sigma", "10"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, behavior::format_grids_csv(behavior::gaze_heatmap(seq, "head_base", "head_tip",
                                                                     behavior::load_walls(path("walls.csv")), 10)));

  std::string spikes;
  for (int i = 1; i < 80; ++i) spikes += csv::format_double(i * 0.11) + "\n";
  std::ofstream(path("spikes.txt")) << spikes;
  const auto train = behavior::load_spike_train(path("spikes.txt"));
  r = cli(with({"analyze", "ebc", "--in", in, "--anchor", "body", "--base", "head_base", "--tip", "head_tip",
                "--spikes", path("spikes.txt"), "--max_dist", "200"},
               kArenaArgs));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  behavior::EbcParams p;
  p.max_dist = 200;
  p.angle_bins = 120;
  p.dist_bins = 0;
  p.min_occupancy_s = 0.2;
  EXPECT_EQ(r.out, behavior::format_grid_csv(
                       behavior::ebc_rate_map(seq, "body", "head_base", "head_tip", train, arena, p).rate));

  r = cli({"analyze", "spikes", "--in", in, "--anchor", "body", "--base", "head_base", "--tip", "head_tip",
           "--spikes", path("spikes.txt")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, behavior::format_spike_locations_csv(
                       behavior::spike_location_data(seq, "body", "head_base", "head_tip", train)));

  r = cli({"analyze", "view-direction", "--in", in, "--base", "head_base", "--tip", "head_tip"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto cfg = pipeline::parse_pipeline_config(
      "source = " + in + "\n[stage]\nid = view_direction\nbase = head_base\ntip = head_tip\n");
  EXPECT_EQ(r.out, std::get<pipeline::TableData>(
                       pipeline::run_pipeline(cfg, pipeline::scan_registry(), dir_ / "vd").output)
                       .csv);
}

TEST_F(CliTest, Triangulate) {
  const auto cams = test::synthetic_rig();
  geometry::write_dlt_coefficients(cams, path("dlt.csv"));
  std::vector<std::string> args{"triangulate", "--dlt", path("dlt.csv")};
  std::vector<PoseSequence> views;
  for (std::size_t c = 0; c < cams.size(); ++c) {
    const auto view = geometry::reproject_view(cams[c], session_);
    const auto file = path("view" + std::to_string(c) + ".csv");
    write_pose_file(view, file, PoseFormat::cvkit);
    views.push_back(read_pose_file(file, PoseFormat::cvkit));
    args.push_back("--view");
    args.push_back(file);
  }
  const auto r = cli(args);
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, format_pose_text(geometry::triangulate_views(geometry::load_dlt_coefficients(path("dlt.csv")), views),
                                    PoseFormat::cvkit));
}

TEST_F(CliTest, CalibrateExport) {
  annotate::AnnotationStore store;
  for (int f = 0; f < 8; ++f) {
    for (const char* cam : {"cam0", "cam1"}) {
      store.put({cam, f, "wand", Eigen::Vector2d(f * 3.0, f * 7.0 + (cam[3] == '1' ? 1 : 0))});
    }
  }
  annotate::save_annotations(store, path("ann.csv"));
  const auto cams = annotate::load_annotations(path("ann.csv")).by_camera();
  auto r = cli({"calibrate-export", "--annotations", path("ann.csv"), "--out-dir", path("ew"), "--select", "3"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto frames = geometry::select_calibration_frames(cams, 3);
  EXPECT_EQ(geometry::read_easywand_manifest(path("ew")).frames, frames);
  geometry::export_easywand_package(cams, frames, path("ew_lib"));
  for (const auto& entry : fs::directory_iterator(path("ew_lib"))) {
    EXPECT_EQ(csv::read_file(entry.path()), csv::read_file(fs::path(path("ew")) / entry.path().filename()))
        << entry.path();
  }
  EXPECT_EQ(r.out, csv::read_file(fs::path(path("ew")) / "manifest.csv"));
  r = cli({"calibrate-export", "--annotations", path("ann.csv"), "--out-dir", path("ew2"), "--frames", "2,5"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(geometry::read_easywand_manifest(path("ew2")).frames, (std::vector<std::int64_t>{2, 5}));
}

TEST_F(CliTest, Pipeline) {
  const std::string text = "name = demo\nsource = session.csv\nsink = out.csv\n"
                           "[stage]\nid = moving_average\nwindow = 3\n"
                           "[stage]\nid = kalman_filter\n"
                           "[stage]\nid = save_pose\n";
  std::ofstream(path("demo.pipeline")) << text;
  auto r = cli({"pipeline", "validate", path("demo.pipeline")});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_EQ(r.out, "OK\n");

  r = cli({"pipeline", "run", path("demo.pipeline"), "--workspace", path("ws")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto expected = filters::kalman_filter(filters::moving_average(session_, 3));
  EXPECT_EQ(csv::read_file(path("out.csv")), format_pose_text(expected, PoseFormat::cvkit));
  EXPECT_NE(r.out.find("stage_2,processor,save_pose"), std::string::npos);

  const auto cfg = pipeline::load_pipeline_config(path("demo.pipeline"));
  const auto report = pipeline::run_pipeline(cfg, pipeline::scan_registry(), dir_ / "ws_lib");
  EXPECT_EQ(std::get<PoseSequence>(report.output), expected);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(csv::read_file(dir_ / "ws" / report.stages[static_cast<std::size_t>(i)].artifact.filename()),
              csv::read_file(report.stages[static_cast<std::size_t>(i)].artifact));
  }

  std::ofstream(path("bad.pipeline")) << "source = session.csv\n[stage]\nid = occupancy_map\n";
  r = cli({"pipeline", "validate", path("bad.pipeline")});
  EXPECT_EQ(r.code, cli::kExitFailure);
  std::string diags;
  for (const auto& d : pipeline::validate_pipeline(pipeline::load_pipeline_config(path("bad.pipeline")),
                                                   pipeline::scan_registry())) {
    diags += "stage " + std::to_string(d.stage) + ": " + d.reason + "\n";
  }
  EXPECT_EQ(r.out, diags);
  EXPECT_EQ(cli({"pipeline", "run", path("bad.pipeline")}).code, cli::kExitFailure);
}

TEST_F(CliTest, BenchIo) {
  fs::create_directories(dir_ / "frames");
  for (int i = 0; i < 12; ++i) {
    io::Frame f{i, 4, 4, 3, std::vector<std::uint8_t>(48, static_cast<std::uint8_t>(i))};
    const auto png = io::encode_png(f);
    std::ofstream(dir_ / "frames" / (std::to_string(i) + ".png"), std::ios::binary)
        .write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
  }
  const auto r = cli({"bench-io", "--source", path("frames"), "--frames", "12", "--runs", "1"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto lib = io::benchmark_throughput_median(dir_ / "frames", {"image-directory"}, 12, io::LoadMode::idle, 1);
  std::vector<std::string> rows;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) rows.push_back(line);
  ASSERT_EQ(rows.size(), lib.rows.size() + 1);
  EXPECT_EQ(rows[0], "backend,load_mode,fps");
  for (std::size_t i = 0; i < lib.rows.size(); ++i) {
    EXPECT_EQ(rows[i + 1].substr(0, rows[i + 1].rfind(',')),
              lib.rows[i].backend + "," + std::string(io::to_string(lib.rows[i].mode)));
  }
}

TEST_F(CliTest, UsageAndHelp) {
  EXPECT_EQ(cli({}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, cli::kExitUsage);
  const auto help = cli({"filter", "velocity", "--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("--max_speed"), std::string::npos);
  EXPECT_EQ(cli({"serve", "--project", path("no_project")}).code, cli::kExitFailure);
}

}  // namespace
