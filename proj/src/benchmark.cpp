#include "cvkit/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <optional>

#include "cvkit/csv.hpp"
#include "cvkit/errors.hpp"

namespace cvkit::io {

std::string_view to_string(LoadMode mode) { return mode == LoadMode::idle ? "idle" : "loaded"; }

LoadMode parse_load_mode(std::string_view name) {
  if (name == "idle") return LoadMode::idle;
  if (name == "loaded") return LoadMode::loaded;
  fail(ErrorCode::InvalidParameter, "load mode must be idle or loaded");
}

CpuLoad::CpuLoad() {
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  for (unsigned i = 0; i < cores; ++i) {
    workers_.emplace_back([this] {
      volatile std::uint64_t x = 0;
      while (!stop_.load(std::memory_order_relaxed)) x = x + 1;
    });
  }
}

CpuLoad::~CpuLoad() {
  stop_.store(true);
  for (auto& w : workers_) w.join();
}

namespace {

using Clock = std::chrono::steady_clock;

// Stand-in for a consumer that looks at every pixel.
std::uint64_t consume(const Frame& f) {
  return std::accumulate(f.pixels.begin(), f.pixels.end(), std::uint64_t{0});
}

double fps_of(std::size_t frames, Clock::duration elapsed) {
  const double seconds = std::chrono::duration<double>(elapsed).count();
  return seconds > 0.0 ? static_cast<double>(frames) / seconds : 0.0;
}

std::size_t frames_to_read(const FrameBackend& backend, std::size_t n_frames) {
  if (auto count = backend.frame_count()) return std::min(*count, n_frames);
  return n_frames;
}

double time_unbuffered(FrameBackend& backend, std::size_t n, std::uint64_t& sink) {
  const auto start = Clock::now();
  std::size_t read = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto f = backend.decode(i);
    if (!f) break;
    sink += consume(*f);
    ++read;
  }
  return fps_of(read, Clock::now() - start);
}

double time_buffered(std::unique_ptr<FrameBackend> backend, std::size_t n, std::size_t capacity,
                     std::uint64_t& sink) {
  FrameStream stream(std::move(backend), capacity);
  stream.wait_until_filled();
  const auto start = Clock::now();
  std::size_t read = 0;
  while (read < n) {
    auto f = stream.next_frame();
    if (!f) break;
    sink += consume(*f);
    ++read;
  }
  return fps_of(read, Clock::now() - start);
}

}  // namespace

ThroughputResult benchmark_throughput(const std::filesystem::path& source,
                                      const std::vector<std::string>& backends,
                                      std::size_t n_frames, LoadMode mode,
                                      std::size_t buffer_capacity,
                                      const BackendRegistry& registry) {
  if (n_frames < 1) fail(ErrorCode::InvalidParameter, "n_frames must be >= 1");
  if (backends.empty()) fail(ErrorCode::InvalidParameter, "no backends to benchmark");
  ThroughputResult result;
  result.metadata["warmup"] = "first buffer fill excluded from buffered timing";
  result.metadata["buffer_capacity"] = std::to_string(buffer_capacity);
  result.metadata["n_frames"] = std::to_string(n_frames);

  std::optional<CpuLoad> load;
  if (mode == LoadMode::loaded) load.emplace();

  std::uint64_t sink = 0;
  for (const auto& name : backends) {
    try {
      auto direct = registry.create(name, source);
      const std::size_t n = frames_to_read(*direct, n_frames);
      const double base = time_unbuffered(*direct, n, sink);
      const double buffered = time_buffered(registry.create(name, source), n, buffer_capacity, sink);
      result.rows.push_back({name + "/unbuffered", mode, base});
      result.rows.push_back({name, mode, buffered});
    } catch (const std::exception& e) {
      result.errors[name] = e.what();
    }
  }
  result.metadata["checksum"] = std::to_string(sink);
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::InvalidParameter, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ThroughputResult benchmark_throughput_median(const std::filesystem::path& source,
                                             const std::vector<std::string>& backends,
                                             std::size_t n_frames, LoadMode mode, std::size_t runs,
                                             std::size_t buffer_capacity, const BackendRegistry& registry) {
  if (runs < 1) fail(ErrorCode::InvalidParameter, "runs must be >= 1");
  ThroughputResult out;
  std::map<std::string, std::vector<double>> samples;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < runs; ++r) {
    auto one = benchmark_throughput(source, backends, n_frames, mode, buffer_capacity, registry);
    for (const auto& row : one.rows) {
      if (!samples.count(row.backend)) order.push_back(row.backend);
      samples[row.backend].push_back(row.fps);
    }
    for (const auto& [k, v] : one.errors) out.errors[k] = v;
    out.metadata = one.metadata;
  }
  out.metadata.erase("checksum");
  out.metadata["runs"] = std::to_string(runs);
  for (const auto& name : order) {
    std::string list;
    for (double v : samples[name]) list += (list.empty() ? "" : ";") + csv::format_double(v);
    out.metadata["runs:" + name] = list;
    out.rows.push_back({name, mode, median(samples[name])});
  }
  return out;
}

std::string format_benchmark_csv(const std::vector<ThroughputRow>& rows) {
  std::string out = "backend,load_mode,fps\n";
  for (const auto& r : rows) {
    out += r.backend + "," + std::string(to_string(r.mode)) + "," + csv::format_double(r.fps) + "\n";
  }
  return out;
}

}  // namespace cvkit::io
