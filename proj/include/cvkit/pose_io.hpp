#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cvkit/pose.hpp"

namespace cvkit {

enum class PoseFormat { cvkit, flat_csv, dlc_csv };

PoseFormat parse_pose_format(std::string_view name);  // throws UnknownFormat
std::string_view to_string(PoseFormat format);

// Metadata the flat and DeepLabCut layouts cannot carry; cvkit files
// override these from their own first line.
struct ReadOptions {
  double fps = kDefaultFps;
  double score_threshold = kDefaultScoreThreshold;
};

PoseSequence read_pose_file(const std::filesystem::path& path, PoseFormat format,
                            const ReadOptions& options = {});
void write_pose_file(const PoseSequence& seq, const std::filesystem::path& path,
                     PoseFormat format);
void translate_pose_file(const std::filesystem::path& src, PoseFormat src_format,
                         const std::filesystem::path& dst, PoseFormat dst_format,
                         const ReadOptions& options = {});

// In-memory forms used by the file functions above.
PoseSequence parse_pose_text(std::string_view text, PoseFormat format,
                             const ReadOptions& options = {});
std::string format_pose_text(const PoseSequence& seq, PoseFormat format);

}  // namespace cvkit
