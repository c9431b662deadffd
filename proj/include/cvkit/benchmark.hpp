#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cvkit/frame_io.hpp"

namespace cvkit::io {

enum class LoadMode { idle, loaded };
std::string_view to_string(LoadMode mode);
LoadMode parse_load_mode(std::string_view name);

/// Busy-spins one worker per logical core while alive.
class CpuLoad {
 public:
  CpuLoad();
  ~CpuLoad();
  CpuLoad(const CpuLoad&) = delete;
  CpuLoad& operator=(const CpuLoad&) = delete;

 private:
  std::atomic<bool> stop_{false};
  std::vector<std::thread> workers_;
};

struct ThroughputRow {
  std::string backend;  // "<name>" buffered, "<name>/unbuffered" baseline
  LoadMode mode = LoadMode::idle;
  double fps = 0.0;
};

struct ThroughputResult {
  std::vector<ThroughputRow> rows;
  std::map<std::string, std::string> errors;  // backend -> message
  std::map<std::string, std::string> metadata;
};

/// Times reading `n_frames` frames (each one checksummed by the consumer)
/// through every backend, once unbuffered and once through a FrameStream whose
/// first buffer fill is excluded from timing. Open errors are recorded per
/// backend and the remaining backends still run.
ThroughputResult benchmark_throughput(const std::filesystem::path& source,
                                      const std::vector<std::string>& backends,
                                      std::size_t n_frames, LoadMode mode,
                                      std::size_t buffer_capacity = kDefaultBufferCapacity,
                                      const BackendRegistry& registry = BackendRegistry::global());

/// Repeats benchmark_throughput `runs` times; each row reports the median fps
/// and metadata["runs:<backend>"] lists the individual values.
ThroughputResult benchmark_throughput_median(const std::filesystem::path& source,
                                             const std::vector<std::string>& backends,
                                             std::size_t n_frames, LoadMode mode, std::size_t runs,
                                             std::size_t buffer_capacity = kDefaultBufferCapacity,
                                             const BackendRegistry& registry = BackendRegistry::global());

double median(std::vector<double> values);

/// `backend,load_mode,fps`
std::string format_benchmark_csv(const std::vector<ThroughputRow>& rows);

}  // namespace cvkit::io
