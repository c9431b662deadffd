#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cvkit/errors.hpp"
#include "cvkit/pipeline.hpp"

// Local HTTP service over a project directory:
//   project.json, annotations.csv, pipelines/<id>.pipeline, runs/<id>/
namespace cvkit::service {

/// HTTP status used for error bodies {code, message, detail}.
int http_status(ErrorCode code);

class Service {
 public:
  /// Loads and validates the project (InvalidProject) and scans processors
  /// from the project's plugin dirs followed by `plugin_dirs`.
  explicit Service(std::filesystem::path project_dir, std::vector<std::filesystem::path> plugin_dirs = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving yet; port 0 picks a free port. Returns the bound
  /// port. Throws PortInUse.
  int bind(const std::string& host, int port);
  /// Serves until stop().
  void listen();
  void stop();

  /// Blocks until no pipeline run is queued or running.
  void wait_for_runs();

  const pipeline::Registry& registry() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cvkit::service
