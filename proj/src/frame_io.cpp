#include "cvkit/frame_io.hpp"

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <deque>
#include <exception>
#include <thread>
#include <variant>

#include <opencv2/imgcodecs.hpp>

#include "cvkit/errors.hpp"

namespace cvkit::io {

// ---------------------------------------------------------------------------
// Image directory

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::size_t is = i;
      std::size_t js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const auto la = ie - is;
      const auto lb = je - js;
      if (la != lb) return la < lb;
      const int c = a.compare(is, la, b, js, lb);
      if (c != 0) return c < 0;
      i = ie;
      j = je;
      continue;
    }
    if (a[i] != b[j]) return a[i] < b[j];
    ++i;
    ++j;
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    fail(ErrorCode::UnreadableSource, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".bmp") files.push_back(entry.path());
  }
  if (ec) fail(ErrorCode::UnreadableSource, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    const auto sa = a.stem().string();
    const auto sb = b.stem().string();
    if (sa != sb) return natural_less(sa, sb);
    return a.filename().string() < b.filename().string();
  });
  return files;
}

namespace {

Frame decode_image(const std::filesystem::path& path, std::size_t index) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) {
    fail(ErrorCode::DecodeFailure, "frame " + std::to_string(index) + ": cannot decode " + path.string());
  }
  if (img.depth() != CV_8U) {
    fail(ErrorCode::DecodeFailure, "frame " + std::to_string(index) + ": only 8-bit images are supported");
  }
  if (!img.isContinuous()) img = img.clone();
  Frame f;
  f.index = static_cast<std::int64_t>(index);
  f.width = img.cols;
  f.height = img.rows;
  f.channels = img.channels();
  f.pixels.assign(img.data, img.data + img.total() * img.elemSize());
  return f;
}

}  // namespace

ImageDirectoryBackend::ImageDirectoryBackend(const std::filesystem::path& dir)
    : files_(list_image_files(dir)) {
  if (files_.empty()) fail(ErrorCode::UnreadableSource, "no PNG or BMP images in " + dir.string());
  try {
    const Frame first = decode_image(files_.front(), 0);
    width_ = first.width;
    height_ = first.height;
  } catch (const Error& e) {
    fail(ErrorCode::UnreadableSource, e.what());
  }
}

std::optional<Frame> ImageDirectoryBackend::decode(std::size_t index) {
  if (index >= files_.size()) return std::nullopt;
  return decode_image(files_[index], index);
}

// ---------------------------------------------------------------------------
// Registry

BackendRegistry::BackendRegistry() {
  factories_[kImageDirectoryBackend] = [](const std::filesystem::path& p) {
    return std::make_unique<ImageDirectoryBackend>(p);
  };
}

void BackendRegistry::add(const std::string& name, BackendFactory factory) {
  std::lock_guard lock(mutex_);
  factories_[name] = std::move(factory);
}

std::unique_ptr<FrameBackend> BackendRegistry::create(const std::string& name,
                                                      const std::filesystem::path& source) const {
  BackendFactory factory;
  {
    std::lock_guard lock(mutex_);
    auto it = factories_.find(name);
    if (it == factories_.end()) fail(ErrorCode::UnknownBackend, "no frame backend named " + name);
    factory = it->second;
  }
  std::error_code ec;
  if (!std::filesystem::exists(source, ec)) {
    fail(ErrorCode::UnreadableSource, "source does not exist: " + source.string());
  }
  return factory(source);
}

std::vector<std::string> BackendRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [k, _] : factories_) out.push_back(k);
  return out;
}

BackendRegistry& BackendRegistry::global() {
  static BackendRegistry registry;
  return registry;
}

// ---------------------------------------------------------------------------
// Buffered stream

namespace {

struct EndOfStream {};
struct DecodeError {
  std::size_t index;
  std::string message;
};
using Item = std::variant<Frame, EndOfStream, DecodeError>;

}  // namespace

struct FrameStream::State {
  std::unique_ptr<FrameBackend> backend;
  std::size_t capacity;
  std::optional<std::size_t> count;
  int width;
  int height;

  mutable std::mutex mutex;
  std::condition_variable has_items;
  std::condition_variable has_space;
  std::deque<Item> queue;
  std::size_t next_decode = 0;
  std::uint64_t generation = 0;
  bool finished = false;  // producer queued end-of-stream or an error
  bool stop = false;
  std::size_t in_flight = 0;
  std::size_t high_water = 0;
  std::thread producer;

  // The producer refills once the queue drains to this level, so a busy
  // consumer is not interrupted for every single frame.
  std::size_t low_water() const { return capacity > 1 ? capacity / 2 : 0; }

  void run() {
    std::unique_lock lock(mutex);
    bool refilling = true;
    while (true) {
      has_space.wait(lock, [&] {
        if (stop) return true;
        if (finished) return false;
        if (queue.size() <= low_water()) refilling = true;
        return refilling && queue.size() < capacity;
      });
      if (stop) return;
      const std::size_t index = next_decode;
      const std::uint64_t gen = generation;
      in_flight = 1;
      high_water = std::max(high_water, queue.size() + in_flight);
      lock.unlock();

      Item item;
      try {
        auto frame = backend->decode(index);
        if (frame) {
          frame->index = static_cast<std::int64_t>(index);
          item = std::move(*frame);
        } else {
          item = EndOfStream{};
        }
      } catch (const std::exception& e) {
        item = DecodeError{index, e.what()};
      }

      lock.lock();
      in_flight = 0;
      if (gen != generation) continue;  // a seek invalidated this decode
      if (std::holds_alternative<Frame>(item)) {
        ++next_decode;
      } else {
        finished = true;
      }
      queue.push_back(std::move(item));
      if (queue.size() >= capacity) refilling = false;
      has_items.notify_one();
    }
  }
};

FrameStream::FrameStream(std::unique_ptr<FrameBackend> backend, std::size_t capacity)
    : state_(std::make_unique<State>()) {
  if (!backend) fail(ErrorCode::UnreadableSource, "null frame backend");
  if (capacity < 1) fail(ErrorCode::InvalidParameter, "buffer capacity must be >= 1");
  state_->count = backend->frame_count();
  state_->width = backend->width();
  state_->height = backend->height();
  state_->backend = std::move(backend);
  state_->capacity = capacity;
  state_->producer = std::thread([s = state_.get()] { s->run(); });
}

FrameStream::~FrameStream() {
  if (!state_) return;
  {
    std::lock_guard lock(state_->mutex);
    state_->stop = true;
  }
  state_->has_space.notify_all();
  if (state_->producer.joinable()) state_->producer.join();
}

FrameStream::FrameStream(FrameStream&&) noexcept = default;
FrameStream& FrameStream::operator=(FrameStream&& other) noexcept {
  if (this != &other) {
    FrameStream dying(std::move(*this));
    state_ = std::move(other.state_);
  }
  return *this;
}

std::optional<Frame> FrameStream::next_frame() {
  State& s = *state_;
  std::unique_lock lock(s.mutex);
  s.has_items.wait(lock, [&] { return !s.queue.empty(); });
  Item& front = s.queue.front();
  if (std::holds_alternative<EndOfStream>(front)) return std::nullopt;
  if (auto* err = std::get_if<DecodeError>(&front)) {
    fail(ErrorCode::DecodeFailure, "frame " + std::to_string(err->index) + ": " + err->message);
  }
  Frame frame = std::move(std::get<Frame>(front));
  s.queue.pop_front();
  if (s.queue.size() <= s.low_water()) {
    lock.unlock();
    s.has_space.notify_one();
  }
  return frame;
}

void FrameStream::seek(std::size_t index) {
  State& s = *state_;
  if (s.count && index >= *s.count) {
    fail(ErrorCode::OutOfRange, "seek to " + std::to_string(index) + " past " +
                                    std::to_string(*s.count) + " frames");
  }
  {
    std::lock_guard lock(s.mutex);
    ++s.generation;
    s.queue.clear();
    s.next_decode = index;
    s.finished = false;
  }
  s.has_space.notify_one();
}

std::optional<std::size_t> FrameStream::frame_count() const { return state_->count; }
int FrameStream::width() const { return state_->width; }
int FrameStream::height() const { return state_->height; }
std::size_t FrameStream::capacity() const { return state_->capacity; }

void FrameStream::wait_until_filled() {
  State& s = *state_;
  std::unique_lock lock(s.mutex);
  s.has_items.wait(lock, [&] { return s.finished || s.queue.size() >= s.capacity; });
}

std::size_t FrameStream::max_buffered() const {
  std::lock_guard lock(state_->mutex);
  return state_->high_water;
}

FrameStream open_stream(const std::filesystem::path& source, const std::string& backend,
                        std::size_t capacity, const BackendRegistry& registry) {
  if (capacity < 1) fail(ErrorCode::InvalidParameter, "buffer capacity must be >= 1");
  return FrameStream(registry.create(backend, source), capacity);
}

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  int type = 0;
  switch (frame.channels) {
    case 1: type = CV_8UC1; break;
    case 3: type = CV_8UC3; break;
    case 4: type = CV_8UC4; break;
    default: fail(ErrorCode::InvalidParameter, "unsupported channel count");
  }
  const cv::Mat view(frame.height, frame.width, type, const_cast<std::uint8_t*>(frame.pixels.data()));
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", view, out)) fail(ErrorCode::IoFailure, "PNG encoding failed");
  return out;
}

}  // namespace cvkit::io
