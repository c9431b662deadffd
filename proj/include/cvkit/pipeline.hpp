#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cvkit/errors.hpp"
#include "cvkit/manifest.hpp"
#include "cvkit/pose.hpp"
#include "cvkit/statistics.hpp"

// Chainable processors: registry, configuration, validation and execution.
// A pipeline [f, g, h] computes h(g(f(source))).
namespace cvkit::pipeline {

struct TableData {
  std::string csv;
  bool operator==(const TableData&) const = default;
};

/// Data flowing between stages.
using Value = std::variant<std::monostate, PoseSequence, TableData>;

DataKind kind_of(const Value& value);

// ---------------------------------------------------------------------------
// Registry

/// Manifests of every built-in processor, in a fixed order.
std::vector<ProcessorManifest> builtin_manifests();

struct Registry {
  std::vector<ProcessorManifest> manifests;
  std::vector<std::string> warnings;

  const ProcessorManifest* find(std::string_view id) const;
  const ProcessorManifest& at(std::string_view id) const;  // UnknownProcessor
};

/// Built-ins first, then every `*.manifest` file of each directory in
/// filename order. A repeated id keeps the first one and records a warning.
Registry scan_registry(const std::vector<std::filesystem::path>& dirs = {});

// ---------------------------------------------------------------------------
// Configuration

struct StageConfig {
  std::string processor;
  std::map<std::string, std::string> params;
  bool operator==(const StageConfig&) const = default;
};

/// `source` feeds a first stage that consumes data; `sink` receives the final
/// value unless a stage already wrote it. Relative paths resolve against
/// `base_dir`.
struct PipelineConfig {
  std::string name;
  std::vector<StageConfig> stages;
  std::string source;
  std::string sink;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  bool operator==(const PipelineConfig& o) const {
    return name == o.name && stages == o.stages && source == o.source && sink == o.sink;
  }
};

PipelineConfig parse_pipeline_config(std::string_view text, std::string_view origin = "<config>");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string format_pipeline_config(const PipelineConfig& cfg);

struct Diagnostic {
  std::size_t stage = 0;
  std::string reason;
  bool operator==(const Diagnostic&) const = default;
};

std::vector<Diagnostic> validate_pipeline(const PipelineConfig& cfg, const Registry& registry);

/// Replaces one stage; the original config is left unchanged. Throws
/// UnknownProcessor or KindMismatch when the new stage breaks the chain.
PipelineConfig swap_stage(const PipelineConfig& cfg, std::size_t index,
                          const std::string& processor,
                          const std::map<std::string, std::string>& params,
                          const Registry& registry);

// ---------------------------------------------------------------------------
// Execution

struct StageReport {
  std::string processor;
  double wall_seconds = 0.0;
  std::size_t items = 0;  // output frames or table data rows
  std::optional<InputStatistics> input_stats;
  std::filesystem::path artifact;
};

struct RunReport {
  std::string pipeline;
  std::vector<StageReport> stages;
  Value output;
};

/// `scope,key,value` summary of a report.
std::string format_run_report_csv(const RunReport& report);

class PipelineFailure : public Error {
 public:
  PipelineFailure(ErrorCode code, std::size_t stage, const std::string& message,
                  RunReport partial, int exit_code = 0, std::string stderr_text = {});

  std::size_t stage() const noexcept { return stage_; }
  const RunReport& partial_report() const noexcept { return partial_; }
  int exit_code() const noexcept { return exit_code_; }
  const std::string& stderr_text() const noexcept { return stderr_; }

 private:
  std::size_t stage_;
  RunReport partial_;
  int exit_code_;
  std::string stderr_;
};

/// Context handed to built-in operations.
struct StageContext {
  const PipelineConfig* config = nullptr;
  std::filesystem::path workspace;
  std::size_t index = 0;
  std::vector<std::filesystem::path>* written = nullptr;
};

/// Runs one built-in operation with parameters already merged with defaults.
Value apply_builtin(const ProcessorManifest& manifest,
                    const std::map<std::string, std::string>& params, const Value& input,
                    const StageContext& ctx);

/// Stage parameters with manifest defaults filled in.
std::map<std::string, std::string> bind_params(const ProcessorManifest& manifest,
                                               const std::map<std::string, std::string>& params);

/// Validates, then executes every stage in order, persisting each stage's
/// output as `stage_<i>_<id>.csv` in `workspace`. Throws InvalidPipeline,
/// or PipelineFailure carrying the stages completed so far.
RunReport run_pipeline(const PipelineConfig& cfg, const Registry& registry,
                       const std::filesystem::path& workspace);

}  // namespace cvkit::pipeline
