#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "cvkit/benchmark.hpp"
#include "cvkit/frame_io.hpp"
#include "test_util.hpp"

namespace {

using namespace cvkit;
using namespace cvkit::io;
using test::code_of;

Frame random_frame(std::mt19937_64& rng, int w, int h, int channels) {
  Frame f;
  f.width = w;
  f.height = h;
  f.channels = channels;
  f.pixels.resize(static_cast<std::size_t>(w * h * channels));
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(d(rng));
  return f;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<Frame> write_frames(const std::filesystem::path& dir, std::size_t n, int channels = 3) {
  std::mt19937_64 rng(n);
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < n; ++i) {
    Frame f = random_frame(rng, 16, 12, channels);
    f.index = static_cast<std::int64_t>(i);
    write_bytes(dir / ("img" + std::to_string(i) + ".png"), encode_png(f));
    frames.push_back(std::move(f));
  }
  return frames;
}

class VectorBackend final : public FrameBackend {
 public:
  VectorBackend(std::size_t n, std::size_t bad) : n_(n), bad_(bad) {}
  std::optional<std::size_t> frame_count() const override { return n_; }
  int width() const override { return 2; }
  int height() const override { return 1; }
  std::optional<Frame> decode(std::size_t index) override {
    if (index >= n_) return std::nullopt;
    if (index == bad_) throw std::runtime_error("corrupt payload");
    return Frame{static_cast<std::int64_t>(index), 2, 1, 1, {static_cast<std::uint8_t>(index), 7}};
  }

 private:
  std::size_t n_;
  std::size_t bad_;
};

TEST(FrameIo, NaturalOrder) {
  EXPECT_TRUE(natural_less("img2.png", "img10.png"));
  EXPECT_FALSE(natural_less("img10.png", "img2.png"));
  EXPECT_TRUE(natural_less("a9", "b1"));
  const auto dir = test::temp_dir("frames_order");
  write_frames(dir, 12);
  std::ofstream(dir / "notes.txt") << "x";
  const auto files = list_image_files(dir);
  ASSERT_EQ(files.size(), 12u);
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(files[i].filename(), "img" + std::to_string(i) + ".png");
}

TEST(FrameIo, DirectoryBackendDecodesLosslessly) {
  const auto dir = test::temp_dir("frames_decode");
  const auto frames = write_frames(dir, 5);
  ImageDirectoryBackend backend(dir);
  EXPECT_EQ(backend.frame_count(), 5u);
  EXPECT_EQ(backend.width(), 16);
  EXPECT_EQ(backend.height(), 12);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(*backend.decode(i), frames[i]);
  EXPECT_FALSE(backend.decode(5).has_value());
}

TEST(FrameIo, GrayAndAlpha) {
  std::mt19937_64 rng(3);
  for (int channels : {1, 4}) {
    const auto dir = test::temp_dir("frames_channels" + std::to_string(channels));
    Frame f = random_frame(rng, 9, 5, channels);
    write_bytes(dir / "0.png", encode_png(f));
    ImageDirectoryBackend backend(dir);
    EXPECT_EQ(*backend.decode(0), f);
  }
}

TEST(FrameIo, Errors) {
  EXPECT_EQ(code_of([] { ImageDirectoryBackend("/nonexistent/frames"); }), ErrorCode::UnreadableSource);
  const auto empty = test::temp_dir("frames_empty");
  EXPECT_EQ(code_of([&] { ImageDirectoryBackend{empty}; }), ErrorCode::UnreadableSource);
  EXPECT_EQ(code_of([&] { (void)open_stream(empty, "video-magic"); }), ErrorCode::UnknownBackend);
  const auto dir = test::temp_dir("frames_corrupt");
  write_frames(dir, 3);
  std::ofstream(dir / "img1.png", std::ios::trunc) << "not a png";
  ImageDirectoryBackend backend(dir);
  EXPECT_EQ(code_of([&] { (void)backend.decode(1); }), ErrorCode::DecodeFailure);
}

TEST(FrameStream, DeliversSameFramesAsDirectDecode) {
  const auto dir = test::temp_dir("frames_stream");
  const auto frames = write_frames(dir, 40);
  for (std::size_t capacity : {1u, 3u, 64u}) {
    auto stream = open_stream(dir, kImageDirectoryBackend, capacity);
    EXPECT_EQ(stream.frame_count(), 40u);
    EXPECT_EQ(stream.capacity(), capacity);
    for (const auto& f : frames) EXPECT_EQ(*stream.next_frame(), f);
    EXPECT_FALSE(stream.next_frame().has_value());
    EXPECT_FALSE(stream.next_frame().has_value());
    EXPECT_LE(stream.max_buffered(), capacity);
  }
}

TEST(FrameStream, BufferIsBounded) {
  FrameStream stream(std::make_unique<VectorBackend>(500, 1000), 8);
  stream.wait_until_filled();
  EXPECT_LE(stream.max_buffered(), 8u);
  EXPECT_GE(stream.max_buffered(), 1u);
  for (int i = 0; i < 500; ++i) ASSERT_EQ(stream.next_frame()->index, i);
  EXPECT_LE(stream.max_buffered(), 8u);
}

TEST(FrameStream, Seek) {
  FrameStream stream(std::make_unique<VectorBackend>(100, 1000), 4);
  EXPECT_EQ(stream.next_frame()->index, 0);
  stream.seek(50);
  EXPECT_EQ(stream.next_frame()->index, 50);
  EXPECT_EQ(stream.next_frame()->index, 51);
  stream.seek(3);
  EXPECT_EQ(stream.next_frame()->index, 3);
  EXPECT_EQ(code_of([&] { stream.seek(100); }), ErrorCode::OutOfRange);
}

TEST(FrameStream, DecodeErrorNamesFrame) {
  FrameStream stream(std::make_unique<VectorBackend>(10, 6), 4);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(stream.next_frame()->index, i);
  try {
    (void)stream.next_frame();
    FAIL() << "expected DecodeFailure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DecodeFailure);
    EXPECT_NE(std::string(e.what()).find("frame 6"), std::string::npos);
  }
}

TEST(FrameStream, CustomBackendRegistry) {
  BackendRegistry registry;
  registry.add("vector", [](const std::filesystem::path&) { return std::make_unique<VectorBackend>(5, 99); });
  EXPECT_EQ(registry.names(), (std::vector<std::string>{"image-directory", "vector"}));
  auto stream = open_stream(test::temp_dir("frames_custom"), "vector", 2, registry);
  int n = 0;
  while (stream.next_frame()) ++n;
  EXPECT_EQ(n, 5);
}

TEST(Benchmark, RowsAndErrors) {
  const auto dir = test::temp_dir("frames_bench");
  write_frames(dir, 30);
  const auto r = benchmark_throughput_median(dir, {kImageDirectoryBackend, "nope"}, 30, LoadMode::idle, 3, 8);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].backend, "image-directory/unbuffered");
  EXPECT_EQ(r.rows[1].backend, "image-directory");
  EXPECT_GT(r.rows[0].fps, 0.0);
  EXPECT_GT(r.rows[1].fps, 0.0);
  EXPECT_EQ(r.errors.count("nope"), 1u);
  EXPECT_EQ(format_benchmark_csv(r.rows).substr(0, 22), "backend,load_mode,fps\n");
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(parse_load_mode("loaded"), LoadMode::loaded);
  EXPECT_EQ(code_of([] { (void)parse_load_mode("busy"); }), ErrorCode::InvalidParameter);
}

}  // namespace
