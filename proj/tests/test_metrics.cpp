#include <random>

#include <gtest/gtest.h>

#include "cvkit/csv.hpp"
#include "cvkit/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace cvkit;
using test::code_of;

PoseSequence perturb(const PoseSequence& gt, std::mt19937_64& rng, double noise, double invalid_rate) {
  std::normal_distribution<double> n(0.0, noise);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto skels = gt.skeletons();
  for (auto& s : skels) {
    for (auto& p : s.parts) {
      for (Eigen::Index k = 0; k < p.coords.size(); ++k) p.coords[k] += n(rng);
      if (u(rng) < invalid_rate) p.score = 0.3;
    }
  }
  return gt.with_skeletons(std::move(skels));
}

const std::vector<std::string> kParts = {"nose", "ear_l", "ear_r", "tail"};

TEST(Metrics, MpjpeMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto gt = test::random_sequence(rng, 30, 2 + i % 2, kParts, 0.1);
    const auto pred = perturb(gt, rng, 5.0, 0.1);
    const auto r = metrics::mpjpe(pred, gt);
    const auto o = test::mpjpe_oracle(pred, gt);
    EXPECT_EQ(r.overall, o.overall);
    EXPECT_EQ(r.counted_pairs, o.counted);
  }
}

TEST(Metrics, PckMatchesOracleAndIsMonotone) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto gt = test::random_sequence(rng, 30, 2 + i % 2, kParts, 0.1);
    const auto pred = perturb(gt, rng, 10.0, 0.1);
    double last = -1.0;
    for (double x : {5.0, 10.0, 20.0, 50.0}) {
      const auto r = metrics::pck(pred, gt, x, "ear_l", "ear_r");
      const auto o = test::pck_oracle(pred, gt, x, 1, 2);
      EXPECT_EQ(r.overall, o.overall);
      EXPECT_EQ(r.counted_pairs, o.counted);
      EXPECT_GE(r.overall, last);
      last = r.overall;
    }
  }
}

TEST(Metrics, PerPartAndPerFrame) {
  std::vector<Skeleton> g, p;
  for (int f = 0; f < 2; ++f) {
    Skeleton s;
    s.frame_index = f;
    s.parts = {Part{"a", Eigen::Vector2d(0, 0), 1.0}, Part{"b", Eigen::Vector2d(10, 0), 1.0}};
    g.push_back(s);
    s.parts[0].coords = Eigen::Vector2d(3, 4);
    s.parts[1].coords = Eigen::Vector2d(10, 1);
    if (f == 1) s.parts[1].score = 0.0;
    p.push_back(s);
  }
  const PoseSequence gt({"a", "b"}, 2, 30, 0.6, g);
  const PoseSequence pred({"a", "b"}, 2, 30, 0.6, p);
  const auto r = metrics::mpjpe(pred, gt);
  EXPECT_EQ(r.counted_pairs, 3u);
  EXPECT_DOUBLE_EQ(r.overall, 11.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_part[0], 5.0);
  EXPECT_DOUBLE_EQ(r.per_part[1], 1.0);
  EXPECT_DOUBLE_EQ(r.per_frame[0], 3.0);
  EXPECT_DOUBLE_EQ(r.per_frame[1], 5.0);
  const auto k = metrics::pck(pred, gt, 20.0, "a", "b");
  EXPECT_DOUBLE_EQ(k.overall, 1.0 / 3.0);
  EXPECT_EQ(metrics::format_report_csv(r),
            "scope,key,value\noverall,mpjpe," + csv::format_double(11.0 / 3.0) +
                "\noverall,counted_pairs,3\npart,a,5\npart,b,1\nframe,0,3\nframe,1,5\n");
}

TEST(Metrics, Errors) {
  std::mt19937_64 rng(3);
  const auto gt = test::random_sequence(rng, 10, 2, kParts);
  const auto other = test::random_sequence(rng, 11, 2, kParts);
  EXPECT_EQ(code_of([&] { (void)metrics::mpjpe(other, gt); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { (void)metrics::pck(gt, gt, 10.0, "nose", "paw"); }), ErrorCode::MissingReferencePart);
  EXPECT_EQ(code_of([&] { (void)metrics::pck(gt, gt, 0.0, "nose", "tail"); }), ErrorCode::InvalidParameter);
  const auto none = test::random_sequence(rng, 10, 2, kParts, 1.0);
  EXPECT_EQ(code_of([&] { (void)metrics::mpjpe(none, none); }), ErrorCode::NoValidPairs);
}

}  // namespace
