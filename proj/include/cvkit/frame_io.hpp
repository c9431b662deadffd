#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cvkit::io {

/// Decoded image, row-major, interleaved channels.
struct Frame {
  std::int64_t index = 0;
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const Frame&) const = default;
};

/// A decode source. Implementations need not be thread-safe: a FrameStream
/// calls decode() from its single producer thread only.
class FrameBackend {
 public:
  virtual ~FrameBackend() = default;

  virtual std::optional<std::size_t> frame_count() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  /// Frame `index`, or nullopt past the end. Throws on decode errors.
  virtual std::optional<Frame> decode(std::size_t index) = 0;
};

/// Numbered PNG/BMP files in one directory, ordered by natural numeric order
/// of the file stem.
class ImageDirectoryBackend final : public FrameBackend {
 public:
  explicit ImageDirectoryBackend(const std::filesystem::path& dir);

  std::optional<std::size_t> frame_count() const override { return files_.size(); }
  int width() const override { return width_; }
  int height() const override { return height_; }
  std::optional<Frame> decode(std::size_t index) override;

  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  int width_ = 0;
  int height_ = 0;
};

/// Natural order: digit runs compare numerically ("img2" < "img10").
bool natural_less(const std::string& a, const std::string& b);
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

using BackendFactory = std::function<std::unique_ptr<FrameBackend>(const std::filesystem::path&)>;

class BackendRegistry {
 public:
  /// Registry holding the built-in "image-directory" backend.
  BackendRegistry();

  void add(const std::string& name, BackendFactory factory);
  std::unique_ptr<FrameBackend> create(const std::string& name,
                                       const std::filesystem::path& source) const;
  std::vector<std::string> names() const;

  static BackendRegistry& global();

 private:
  mutable std::mutex mutex_;
  std::map<std::string, BackendFactory> factories_;
};

inline constexpr std::size_t kDefaultBufferCapacity = 64;
inline constexpr const char* kImageDirectoryBackend = "image-directory";

/// Ordered frame source with a background producer that decodes ahead into a
/// bounded FIFO of `capacity` frames. Owned by one consumer thread at a time.
class FrameStream {
 public:
  FrameStream(std::unique_ptr<FrameBackend> backend, std::size_t capacity = kDefaultBufferCapacity);
  ~FrameStream();
  FrameStream(FrameStream&&) noexcept;
  FrameStream& operator=(FrameStream&&) noexcept;
  FrameStream(const FrameStream&) = delete;
  FrameStream& operator=(const FrameStream&) = delete;

  /// Next frame in index order, or nullopt at end of stream. Decode errors
  /// surface here as DecodeFailure naming the frame index.
  std::optional<Frame> next_frame();

  /// Drops buffered frames; the next call to next_frame returns `index`.
  void seek(std::size_t index);

  std::optional<std::size_t> frame_count() const;
  int width() const;
  int height() const;
  std::size_t capacity() const;

  /// Blocks until the buffer is full or the producer reached the end.
  void wait_until_filled();

  /// Largest number of decoded frames held by the stream at any moment,
  /// counting a frame being decoded.
  std::size_t max_buffered() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

FrameStream open_stream(const std::filesystem::path& source,
                        const std::string& backend = kImageDirectoryBackend,
                        std::size_t capacity = kDefaultBufferCapacity,
                        const BackendRegistry& registry = BackendRegistry::global());

/// PNG bytes for a frame (1, 3 or 4 channels).
std::vector<std::uint8_t> encode_png(const Frame& frame);

}  // namespace cvkit::io
