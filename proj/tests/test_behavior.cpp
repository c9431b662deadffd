#include <random>

#include <gtest/gtest.h>

#include "cvkit/behavior.hpp"
#include "cvkit/csv.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace cvkit;
using namespace cvkit::behavior;
using test::code_of;

const Arena kArena{0.0, 500.0, 0.0, 400.0};

std::vector<Wall> box_walls() {
  const std::string text =
      "name,ox,oy,oz,ux,uy,uz,vx,vy,vz,width,height,nu,nv\n"
      "south,0,0,0,1,0,0,0,0,1,500,300,25,15\n"
      "east,500,0,0,0,1,0,0,0,1,400,300,20,15\n"
      "north,500,400,0,-1,0,0,0,0,1,500,300,25,15\n"
      "west,0,400,0,0,-1,0,0,0,1,400,300,20,15\n";
  return parse_walls(text);
}

SpikeTrain random_spikes(std::uint64_t seed, std::size_t n, double duration) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, duration);
  SpikeTrain s{"cell1", {}};
  for (std::size_t i = 0; i < n; ++i) s.times.push_back(u(rng));
  std::sort(s.times.begin(), s.times.end());
  return s;
}

TEST(Grid, LocateAndEdges) {
  const auto g = AnalysisGrid::uniform("g", GridUnits::seconds, 0, 10, 5, 0, 4, 2);
  EXPECT_EQ(g.locate(0, 0), std::make_pair(Eigen::Index{0}, Eigen::Index{0}));
  EXPECT_EQ(g.locate(2, 2), std::make_pair(Eigen::Index{1}, Eigen::Index{1}));
  EXPECT_EQ(g.locate(10, 4), std::make_pair(Eigen::Index{4}, Eigen::Index{1}));
  EXPECT_FALSE(g.locate(10.001, 1).has_value());
  EXPECT_FALSE(g.locate(-1, 1).has_value());
  EXPECT_EQ(g.center(0, 1), Eigen::Vector2d(1, 3));
  EXPECT_EQ(code_of([] { (void)AnalysisGrid::uniform("g", GridUnits::hz, 0, 1, 0, 0, 1, 1); }), ErrorCode::BadBins);
}

TEST(Grid, CsvRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  auto a = AnalysisGrid::uniform("a", GridUnits::hz, -3, 360, 7, 0, 100, 4);
  a.values = a.values.unaryExpr([&](double) { return u(rng); });
  a.masked(2, 3) = true;
  a.metadata["k"] = "v";
  auto b = AnalysisGrid::uniform("b", GridUnits::events, 0, 1, 1, 0, 1, 1);
  const auto back = parse_grids_csv(format_grids_csv({a, b}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].name, "a");
  EXPECT_EQ(back[0].units, GridUnits::hz);
  EXPECT_EQ(back[0].values, a.values);
  EXPECT_EQ(back[0].x_edges, a.x_edges);
  EXPECT_TRUE((back[0].masked == a.masked).all());
  EXPECT_EQ(back[0].metadata, a.metadata);
  EXPECT_EQ(format_grid_csv(back[1]), format_grid_csv(b));
}

TEST(Gaze, ViewDirection) {
  const auto seq = test::random_session(1, 5);
  const auto ray = view_direction(seq[2], "head_base", "head_tip");
  const Eigen::Vector3d d = seq[2].parts[2].coords - seq[2].parts[1].coords;
  EXPECT_EQ(ray.origin, Eigen::Vector3d(seq[2].parts[2].coords));
  EXPECT_LT((ray.direction - d.normalized()).norm(), 1e-15);
  auto s = seq[0];
  s.parts[1].score = 0.1;
  EXPECT_EQ(code_of([&] { (void)view_direction(s, "head_base", "head_tip"); }), ErrorCode::InvalidParts);
  s = seq[0];
  s.parts[2].coords = s.parts[1].coords;
  EXPECT_EQ(code_of([&] { (void)view_direction(s, "head_base", "head_tip"); }), ErrorCode::CoincidentParts);
}

TEST(Gaze, RayTracerMatchesOracle) {
  const auto walls = box_walls();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::size_t hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d o(u(rng) * 600 - 50, u(rng) * 500 - 50, u(rng) * 200);
    const Eigen::Vector3d d = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
    for (const auto& w : walls) {
      const auto got = ray_wall_intersect(o, d, w);
      const auto want = test::ray_wall_oracle(o, d, w);
      ASSERT_EQ(got.has_value(), want.has_value()) << "ray " << i << " wall " << w.name;
      if (!got) continue;
      ++hits;
      EXPECT_NEAR(got->t, want->t, 1e-9);
      EXPECT_NEAR(got->u, want->u, 1e-9);
      EXPECT_NEAR(got->v, want->v, 1e-9);
    }
  }
  EXPECT_GT(hits, 300u);
}

TEST(Gaze, RayBehindOrParallelMisses) {
  const auto w = box_walls()[0];
  EXPECT_FALSE(ray_wall_intersect({100, 50, 50}, {0, 1, 0}, w).has_value());
  EXPECT_FALSE(ray_wall_intersect({100, 50, 50}, {1, 0, 0}, w).has_value());
  const auto hit = ray_wall_intersect({100, 50, 50}, {0, -1, 0}, w);
  ASSERT_TRUE(hit.has_value());
  EXPECT_DOUBLE_EQ(hit->t, 50.0);
  EXPECT_DOUBLE_EQ(hit->u, 100.0);
  EXPECT_DOUBLE_EQ(hit->v, 50.0);
}

TEST(Gaze, HeatmapSplatsNearestWall) {
  std::vector<Skeleton> skels(1);
  skels[0].parts = {Part{"b", Eigen::Vector3d(250, 200, 50), 1.0}, Part{"t", Eigen::Vector3d(250, 190, 50), 1.0}};
  const PoseSequence seq({"b", "t"}, 3, 30, 0.6, skels);
  const auto grids = gaze_heatmap(seq, "b", "t", box_walls(), 10.0);
  ASSERT_EQ(grids.size(), 4u);
  EXPECT_GT(grids[0].values.sum(), 0.0);
  for (std::size_t w = 1; w < 4; ++w) EXPECT_EQ(grids[w].values.sum(), 0.0);
  const auto bin = grids[0].locate(250, 50);
  ASSERT_TRUE(bin.has_value());
  Eigen::Index r, c;
  grids[0].values.maxCoeff(&r, &c);
  EXPECT_EQ(std::make_pair(r, c), *bin);
  EXPECT_EQ(code_of([&] { (void)gaze_heatmap(seq, "b", "t", {}, 10.0); }), ErrorCode::NoWalls);
}

TEST(Walls, ParseErrors) {
  EXPECT_EQ(code_of([] { (void)parse_walls("w,0,0,0,1,0,0,1,0,0,1,1,1,1\n"); }), ErrorCode::InvalidParameter);
  EXPECT_EQ(code_of([] { (void)parse_walls("w,0,0,0\n"); }), ErrorCode::MalformedCsv);
}

TEST(Occupancy, SecondsConservation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto seq = test::random_session(seed, 900);
    auto skels = seq.skeletons();
    for (std::size_t f = 0; f < skels.size(); f += 97) skels[f].parts[0].coords[0] = 900.0;
    seq = seq.with_skeletons(skels);
    const auto g = occupancy_map(seq, "body", kArena, 25, 20);
    std::size_t valid = 0;
    for (std::size_t f = 0; f < seq.size(); ++f) valid += seq.is_valid(f, 0);
    const auto dropped = std::stoul(g.metadata.at("dropped_out_of_bounds"));
    EXPECT_GT(dropped, 0u);
    EXPECT_NEAR(g.values.sum(), static_cast<double>(valid - dropped) / seq.fps(), 1e-9);
    EXPECT_EQ((g.values * seq.fps()).array().round().sum(), static_cast<double>(valid - dropped));
  }
  EXPECT_EQ(code_of([] { (void)occupancy_map(test::random_session(0, 5), "body", {0, 0, 0, 1}, 2, 2); }),
            ErrorCode::DegenerateArena);
}

TEST(Rearing, FindsPlantedEvents) {
  const std::vector<test::PlantedEvent> planted = {{40, 55}, {200, 204}, {300, 330}, {598, 599}};
  const auto seq = test::random_session(3, 600, planted);
  const auto r = detect_rearing(seq, "body", 60.0, 5, kArena, 10, 8);
  ASSERT_EQ(r.events.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.events[i].start_frame, static_cast<std::int64_t>(planted[i].start));
    EXPECT_EQ(r.events[i].end_frame, static_cast<std::int64_t>(planted[i].end));
    EXPECT_EQ(r.events[i].frames, planted[i].end - planted[i].start + 1);
  }
  EXPECT_EQ(r.counts.values.sum(), 3.0);
  EXPECT_EQ(detect_rearing(seq, "body", 60.0, 2, kArena, 10, 8).events.size(), 4u);
  EXPECT_EQ(code_of([&] { (void)detect_rearing(seq, "body", 60.0, 0, kArena, 10, 8); }), ErrorCode::InvalidParameter);
}

TEST(Spikes, ParseAndValidate) {
  const auto s = parse_spike_train("time\n0.5\n1.25\n\n2\n");
  EXPECT_EQ(s.times, (std::vector<double>{0.5, 1.25, 2.0}));
  EXPECT_EQ(code_of([] { (void)parse_spike_train("0.5\nx\n"); }), ErrorCode::InvalidSpikeTrain);
  EXPECT_EQ(code_of([&] { s.validate(1.0); }), ErrorCode::InvalidSpikeTrain);
  EXPECT_EQ(code_of([] { SpikeTrain{"c", {2.0, 1.0}}.validate(10.0); }), ErrorCode::InvalidSpikeTrain);
}

TEST(Ebc, SpikeMassIdentity) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto seq = test::random_session(seed, 1800);
    const auto spikes = random_spikes(seed, 400, 1800 / 30.0);
    EbcParams params;
    params.max_dist = 700.0;
    params.angle_bins = 36;
    params.dist_bins = 28;
    const auto m = ebc_rate_map(seq, "body", "head_base", "head_tip", spikes, kArena, params);
    double mass = 0.0, unmasked_spikes = 0.0;
    for (Eigen::Index a = 0; a < m.spikes.rows(); ++a) {
      for (Eigen::Index d = 0; d < m.spikes.cols(); ++d) {
        if (m.rate.masked(a, d)) continue;
        mass += m.rate.values(a, d) * m.occupancy(a, d);
        unmasked_spikes += m.spikes(a, d);
      }
    }
    EXPECT_NEAR(mass, unmasked_spikes, 1e-9 * std::max(1.0, unmasked_spikes));
    const double used = static_cast<double>(spikes.times.size() - std::stoul(m.rate.metadata.at("spikes_without_pose")));
    EXPECT_EQ(m.spikes.sum(), used * static_cast<double>(params.angle_bins));
    std::size_t usable = 0;
    for (std::size_t f = 0; f < seq.size(); ++f) usable += seq.is_valid(f, 0);
    EXPECT_NEAR(m.occupancy.sum() / static_cast<double>(params.angle_bins),
                static_cast<double>(usable) / seq.fps(), 1e-9);

    auto stricter = params;
    stricter.min_occupancy_s = 2.0;
    const auto m2 = ebc_rate_map(seq, "body", "head_base", "head_tip", spikes, kArena, stricter);
    EXPECT_TRUE((!m.rate.masked || m2.rate.masked).all());
  }
}

TEST(Ebc, Errors) {
  const auto seq = test::random_session(1, 30);
  EbcParams p;
  EXPECT_EQ(code_of([&] { (void)ebc_rate_map(seq, "body", "head_base", "head_tip", {}, kArena, p); }), ErrorCode::BadBins);
  p.max_dist = 100;
  EXPECT_EQ(code_of([&] { (void)ebc_rate_map(seq, "body", "head_base", "head_tip", SpikeTrain{"c", {5.0}}, kArena, p); }),
            ErrorCode::InvalidSpikeTrain);
  EXPECT_EQ(ebc_rate_map(seq, "body", "head_base", "head_tip", {}, kArena, p).rate.ny(), 8);
}

TEST(Spikes, LocationsFollowFrames) {
  const auto seq = test::random_session(4, 300);
  const auto spikes = random_spikes(4, 50, 10.0);
  const auto data = spike_location_data(seq, "body", "head_base", "head_tip", spikes);
  EXPECT_EQ(data.spikes.size() + data.dropped, spikes.times.size());
  for (const auto& s : data.spikes) {
    const auto f = static_cast<std::size_t>(std::floor(s.time * seq.fps()));
    EXPECT_EQ(s.x, seq[f].parts[0].coords[0]);
    EXPECT_EQ(s.y, seq[f].parts[0].coords[1]);
    EXPECT_EQ(s.head_direction_deg, head_direction_deg(seq[f], 1, 2));
  }
}

TEST(HeadDirection, Range) {
  Skeleton s;
  s.parts = {Part{"b", Eigen::Vector2d(0, 0), 1}, Part{"t", Eigen::Vector2d(-1, 0), 1}};
  EXPECT_DOUBLE_EQ(head_direction_deg(s, 0, 1), 180.0);
  s.parts[1].coords = Eigen::Vector2d(0, -1);
  EXPECT_DOUBLE_EQ(head_direction_deg(s, 0, 1), -90.0);
}

}  // namespace
