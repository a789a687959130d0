#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapgen/control_raster.hpp"
#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/schedule.hpp"
#include "mapgen/image.hpp"
#include "mapgen/seed_select.hpp"
#include "mapgen/service/config.hpp"
#include "mapgen/tiler.hpp"

namespace mapgen::service {

/// A request failure with its HTTP status and a stable error code.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message,
               nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  /// {"error": code, "message": what(), ...detail}
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

/// Immutable weights shared by every request that started while it was current.
struct ModelSnapshot {
  diffusion::DiffusionModel<float> model;
  diffusion::NoiseSchedule schedule;
  std::string source;  // checkpoint path or a caller-chosen label
  nlohmann::json info;
  std::uint64_t generation = 0;
};

struct Upload {
  std::string name;  // client file name; "r{row}_c{col}.png" places the tile in a batch grid
  std::vector<std::uint8_t> bytes;
};

struct GenerateRequest {
  std::string style;
  Upload control;
  std::optional<std::uint64_t> seed;  // absent: the style's seed policy
  std::optional<bool> postproc;       // absent: config default
};

struct GeneratedTile {
  RgbImage image;
  std::uint64_t seed = 0;
  std::string seed_source;  // "request", "fixed" or "select"
  std::optional<double> miou;  // set when the seed was selected
  bool postprocessed = false;
};

/// Batch input: either several equally sized square tiles, or one sheet that the server
/// cuts into tiles of the configured size.
struct JobRequest {
  std::string style;
  std::vector<Upload> controls;
  std::optional<Upload> sheet;
  std::optional<std::uint64_t> seed;
  std::optional<bool> postproc;
  bool include_stitched = false;
};

enum class JobState { kQueued, kRunning, kDone, kFailed };
std::string to_string(JobState s);

struct TileRecord {
  TileIndex index;
  std::string name;  // r{row}_c{col}.png
  std::optional<std::uint64_t> seed;
  bool done = false;
};

struct JobStatus {
  std::string job_id;
  JobState state = JobState::kQueued;
  std::string style;
  int done = 0;
  int total = 0;
  std::vector<TileRecord> tiles;
  std::string error;
  nlohmann::json to_json() const;
};

/// Generation service independent of the transport: model snapshot, seed policy, post-processing
/// and the batch job registry with its worker pool.
class Engine {
 public:
  explicit Engine(ServiceConfig config);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const ServiceConfig& config() const { return config_; }

  /// Loads a checkpoint and swaps it in; running jobs keep their snapshot.
  void load_checkpoint(const std::filesystem::path& path);
  void set_model(diffusion::DiffusionModel<float> model, diffusion::NoiseSchedule schedule,
                 std::string source = "memory", nlohmann::json info = nlohmann::json::object());
  std::shared_ptr<const ModelSnapshot> snapshot() const;

  nlohmann::json styles_json() const;
  nlohmann::json health_json() const;

  /// Throws ServiceError (400 unknown style / bad image, 422 off-palette colors or bad
  /// dimensions, 503 no model).
  GeneratedTile generate(const GenerateRequest& request) const;

  /// Validates everything, then enqueues. A failing request creates no job and no files.
  std::string submit_job(const JobRequest& request);
  /// Throws ServiceError 404 for unknown ids.
  JobStatus job_status(const std::string& job_id) const;
  /// Stored ZIP with r{row}_c{col}.png per tile, manifest.json and, when requested, stitched.png.
  /// Throws 404 for unknown ids, 409 until the job is done.
  std::vector<std::uint8_t> job_archive(const std::string& job_id) const;
  /// The server-side stitch of a finished job's tiles, cropped to the uploaded extent.
  RgbImage job_stitched(const std::string& job_id) const;
  /// Blocks until the job leaves queued/running or the timeout passes; returns the last status.
  JobStatus wait_job(const std::string& job_id, std::chrono::milliseconds timeout) const;
  std::size_t job_count() const;
  /// While paused, workers finish their current tile but start no new ones. Pending tiles are
  /// dropped when the engine is destroyed.
  void set_paused(bool paused);

  /// One tile under the request's seed or the style's policy, optionally post-processed.
  GeneratedTile render_tile(const ModelSnapshot& snap, const ControlImage& control, const StyleSpec& style,
                            std::optional<std::uint64_t> seed, bool postproc) const;

 private:
  struct Job;
  class WorkerPool;

  const StyleSpec& served_style(const std::string& key) const;
  ControlImage decode_upload(const Upload& upload, const StyleSpec& style) const;
  std::shared_ptr<Job> find_job(const std::string& job_id) const;
  void run_tile(const std::shared_ptr<Job>& job, std::size_t slot);
  void finish_job(Job& job);

  ServiceConfig config_;
  std::unique_ptr<seed::Segmenter> segmenter_;

  mutable std::mutex model_mutex_;
  std::shared_ptr<const ModelSnapshot> model_;
  std::uint64_t generation_ = 0;

  mutable std::mutex jobs_mutex_;
  std::vector<std::shared_ptr<Job>> jobs_;
  std::uint64_t next_job_ = 1;

  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace mapgen::service
