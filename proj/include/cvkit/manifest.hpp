#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvkit/errors.hpp"

namespace cvkit::pipeline {

enum class Category { filter, generative, utility };
enum class DataKind { pose2d, pose3d, frames, table, none };
enum class ParamType { integer, real, string, path, boolean, enumeration };

std::string_view to_string(Category c);
std::string_view to_string(DataKind k);
std::string_view to_string(ParamType t);
std::optional<Category> parse_category(std::string_view s);
std::optional<DataKind> parse_kind(std::string_view s);
std::optional<ParamType> parse_param_type(std::string_view s);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::string;
  std::vector<std::string> variants;  // enumeration only
  bool required = false;
  std::optional<std::string> default_value;
  std::string label;

  /// Empty when `value` is acceptable for this parameter, else the reason.
  std::string check(std::string_view value) const;
  bool operator==(const ParamSpec&) const = default;
};

struct ExecSpec {
  enum class Mode { builtin, external };
  Mode mode = Mode::builtin;
  std::string target;  // builtin operation name or command template

  bool operator==(const ExecSpec&) const = default;
};

struct ProcessorManifest {
  std::string id;
  Category category = Category::utility;
  DataKind input_kind = DataKind::none;
  DataKind output_kind = DataKind::none;
  std::vector<ParamSpec> params;
  ExecSpec exec;
  std::string origin;  // file the manifest came from, or "builtin"

  const ParamSpec* param(std::string_view name) const;
  bool operator==(const ProcessorManifest&) const = default;
};

// ---------------------------------------------------------------------------
// Key/value document shared by manifests and pipeline configs:
//
//   key = "value"        # comment
//   [block]
//   key = value
//
// Values may be bare or double-quoted (\" and \\ escapes).

struct KeyValueBlock {
  std::string name;  // empty for the top-level section
  std::vector<std::pair<std::string, std::string>> entries;
  std::size_t line = 0;

  const std::string* get(std::string_view key) const;
};

/// Top-level section first, then one entry per [block] in file order.
/// Throws `error_code` with `origin` and the line number on syntax errors.
std::vector<KeyValueBlock> parse_key_value(std::string_view text, std::string_view origin,
                                           ErrorCode error_code);

std::string quote_value(std::string_view value);

ProcessorManifest parse_manifest(std::string_view text, std::string_view origin);
ProcessorManifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const ProcessorManifest& m);

/// Names referenced as {name} in a command template.
std::vector<std::string> template_slots(std::string_view command);

}  // namespace cvkit::pipeline
