#pragma once

#include <memory>
#include <string>

#include "mapgen/service/engine.hpp"

namespace mapgen::service {

/// HTTP front end over an Engine.
///
///   GET  /healthz                 {"status", "model_loaded", "checkpoint", "model_generation", "jobs"}
///   GET  /styles                  {"styles": [{"id", "display_name", "prompt", "seed_policy", "legend": [...]}], "tile_size"}
///   POST /generate                multipart: file "control", fields "style", "seed"?, "postproc"?, "mode"?
///                                 mode=single (default): 200 image/png, headers X-Seed, X-Seed-Source
///                                 mode=multiple: same as POST /jobs
///   POST /jobs                    multipart: files "control" (one per tile, optionally named r{row}_c{col}.png)
///                                 or one file "sheet"; fields "style", "seed"?, "postproc"?, "include_stitched"?
///                                 202 {"job_id", "state", "progress", ...}
///   GET  /jobs/{id}               job status record
///   GET  /jobs/{id}/download      application/zip (409 until done)
///   GET  /jobs/{id}/stitched      image/png of the server-side stitch (409 until done)
///   POST /reload                  JSON {"checkpoint"?}; reloads weights, running jobs keep theirs
///
/// Errors are JSON {"error": code, "message", ...}; off-palette uploads answer 422 with "colors".
class Server {
 public:
  explicit Server(Engine& engine);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds `host:port`; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();
  /// Blocks until the listener thread is accepting connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mapgen::service
