#include "mapgen/service/engine.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <regex>
#include <thread>

#include "mapgen/diffusion/checkpoint.hpp"
#include "mapgen/diffusion/sampler.hpp"
#include "mapgen/png_io.hpp"
#include "mapgen/postproc.hpp"
#include "mapgen/service/zip.hpp"

namespace mapgen::service {

namespace {

constexpr int kMaxSide = 1024;

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string tile_name(int row, int col) { return "r" + std::to_string(row) + "_c" + std::to_string(col) + ".png"; }

void check_dims(int w, int h, const std::string& what) {
  if (w < 4 || h < 4 || w % 4 != 0 || h % 4 != 0 || w > kMaxSide || h > kMaxSide)
    throw ServiceError(422, "bad_dimensions",
                       what + " is " + std::to_string(w) + "x" + std::to_string(h) +
                           "; sides must be multiples of 4 between 4 and " + std::to_string(kMaxSide));
}

}  // namespace

nlohmann::json ServiceError::to_json() const {
  nlohmann::json j = detail_.is_object() ? detail_ : nlohmann::json::object();
  j["error"] = code_;
  j["message"] = what();
  return j;
}

std::string to_string(JobState s) {
  switch (s) {
    case JobState::kQueued: return "queued";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "unknown";
}

nlohmann::json JobStatus::to_json() const {
  nlohmann::json tiles_json = nlohmann::json::array();
  for (const auto& t : tiles) {
    nlohmann::json tj{{"name", t.name}, {"row", t.index.row}, {"col", t.index.col}, {"done", t.done}};
    tj["seed"] = t.seed ? nlohmann::json(*t.seed) : nlohmann::json(nullptr);
    tiles_json.push_back(std::move(tj));
  }
  nlohmann::json j{{"job_id", job_id},
                   {"state", to_string(state)},
                   {"style", style},
                   {"progress", {{"done", done}, {"total", total}}},
                   {"tiles", std::move(tiles_json)}};
  j["error"] = error.empty() ? nlohmann::json(nullptr) : nlohmann::json(error);
  return j;
}

struct Engine::Job {
  std::string id;
  const StyleSpec* style = nullptr;
  std::shared_ptr<const ModelSnapshot> snapshot;
  std::optional<std::uint64_t> seed;
  bool postproc = false;
  bool include_stitched = false;
  std::vector<ControlImage> controls;
  std::vector<TileIndex> indices;

  mutable std::mutex mutex;
  std::condition_variable changed;
  JobState state = JobState::kQueued;
  std::vector<std::optional<RgbImage>> results;
  std::vector<std::optional<std::uint64_t>> seeds;
  int done = 0;
  std::string error;
  std::vector<std::uint8_t> archive;
  RgbImage stitched;
};

class Engine::WorkerPool {
 public:
  explicit WorkerPool(int n) {
    for (int i = 0; i < n; ++i) threads_.emplace_back([this] { loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  void set_paused(bool paused) {
    {
      std::lock_guard lock(mutex_);
      paused_ = paused;
    }
    cv_.notify_all();
  }
  void post(std::function<void()> task) {
    {
      std::lock_guard lock(mutex_);
      tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || (!paused_ && !tasks_.empty()); });
        if (stop_) return;
        task = std::move(tasks_.front());
        tasks_.pop_front();
      }
      task();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stop_ = false;
  bool paused_ = false;
  std::vector<std::thread> threads_;
};

Engine::Engine(ServiceConfig config) : config_(std::move(config)) {
  config_.validate();
  segmenter_ = seed::make_segmenter(config_.segmenter);
  pool_ = std::make_unique<WorkerPool>(config_.workers);
}

Engine::~Engine() { pool_.reset(); }

void Engine::load_checkpoint(const std::filesystem::path& path) {
  auto loaded = diffusion::load_checkpoint<float>(path);
  set_model(std::move(*loaded.model), std::move(loaded.schedule), path.string(), std::move(loaded.info));
}

void Engine::set_model(diffusion::DiffusionModel<float> model, diffusion::NoiseSchedule schedule, std::string source,
                       nlohmann::json info) {
  std::lock_guard lock(model_mutex_);
  auto snap = std::make_shared<const ModelSnapshot>(
      ModelSnapshot{std::move(model), std::move(schedule), std::move(source), std::move(info), ++generation_});
  model_ = std::move(snap);
}

std::shared_ptr<const ModelSnapshot> Engine::snapshot() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

nlohmann::json Engine::styles_json() const {
  nlohmann::json styles = nlohmann::json::array();
  for (StyleId id : config_.styles) {
    const auto& s = style(id);
    nlohmann::json legend = nlohmann::json::array();
    for (ClassId c : s.legend) {
      const auto& fc = feature_class(c);
      const Rgb cc = fc.control_color;
      legend.push_back({{"class_id", c},
                        {"key", std::string(fc.key)},
                        {"name", std::string(fc.name)},
                        {"control_color", hex(cc)},
                        {"rgb", {cc.r, cc.g, cc.b}},
                        {"default_pen", fc.default_pen}});
    }
    const auto policy = config_.policy_for(id);
    styles.push_back({{"id", s.key},
                      {"display_name", s.display_name},
                      {"prompt", s.prompt},
                      {"seed_policy", policy.mode == SeedPolicy::Mode::kFixed ? "fixed" : "select"},
                      {"legend", std::move(legend)}});
  }
  return {{"styles", std::move(styles)}, {"tile_size", config_.tile_size}};
}

nlohmann::json Engine::health_json() const {
  auto snap = snapshot();
  nlohmann::json j{{"status", "ok"}, {"model_loaded", snap != nullptr}, {"jobs", job_count()}};
  j["checkpoint"] = snap ? nlohmann::json(snap->source) : nlohmann::json(nullptr);
  j["model_generation"] = snap ? snap->generation : 0;
  return j;
}

const StyleSpec& Engine::served_style(const std::string& key) const {
  const StyleSpec* s = find_style(key);
  if (!s || std::find(config_.styles.begin(), config_.styles.end(), s->id) == config_.styles.end()) {
    nlohmann::json known = nlohmann::json::array();
    for (StyleId id : config_.styles) known.push_back(style(id).key);
    throw ServiceError(404, "unknown_style", "unknown style '" + key + "'", {{"styles", known}});
  }
  return *s;
}

ControlImage Engine::decode_upload(const Upload& upload, const StyleSpec& s) const {
  if (upload.bytes.empty()) throw ServiceError(400, "missing_control", "control image '" + upload.name + "' is empty");
  try {
    return decode_control_png(upload.bytes, s.legend);
  } catch (const UnknownColorError& e) {
    nlohmann::json colors = nlohmann::json::array();
    for (const auto& u : e.colors())
      colors.push_back({{"hex", hex(u.color)}, {"rgb", {u.color.r, u.color.g, u.color.b}}, {"pixels", u.pixels}});
    throw ServiceError(422, "off_palette",
                       "control image '" + upload.name + "' has colors outside the " + s.key + " legend: " + e.what(),
                       {{"colors", std::move(colors)}, {"file", upload.name}});
  } catch (const std::runtime_error& e) {
    throw ServiceError(400, "bad_image", "control image '" + upload.name + "' is not a readable PNG: " + e.what());
  }
}

GeneratedTile Engine::render_tile(const ModelSnapshot& snap, const ControlImage& control, const StyleSpec& s,
                                  std::optional<std::uint64_t> seed, bool postproc) const {
  GeneratedTile out;
  const auto policy = config_.policy_for(s.id);
  if (seed || policy.mode == SeedPolicy::Mode::kFixed) {
    out.seed = seed.value_or(policy.seed);
    out.seed_source = seed ? "request" : "fixed";
    out.image = diffusion::sample(snap.model, control, s.id, out.seed, snap.schedule, config_.sample_steps);
  } else {
    seed::SeedSelectConfig sc;
    sc.k = policy.k;
    sc.lambda = config_.lambda;
    sc.run_seed = policy.seed;
    sc.segmenter = config_.segmenter;
    auto sel = seed::select_seed(control, s, sc,
                                 seed::sampler_generator(snap.model, snap.schedule, control, s.id, config_.sample_steps));
    out.seed = sel.best.seed;
    out.seed_source = "select";
    out.miou = sel.best.miou;
    out.image = std::move(sel.best.tile);
  }
  if (postproc) {
    out.image = postproc::apply_plan(out.image, control, postproc::default_plan(s));
    out.postprocessed = true;
  }
  return out;
}

GeneratedTile Engine::generate(const GenerateRequest& request) const {
  const auto& s = served_style(request.style);
  auto control = decode_upload(request.control, s);
  check_dims(control.width(), control.height(), "control image");
  auto snap = snapshot();
  if (!snap) throw ServiceError(503, "model_not_loaded", "no checkpoint is loaded");
  return render_tile(*snap, control, s, request.seed, request.postproc.value_or(config_.postproc));
}

std::string Engine::submit_job(const JobRequest& request) {
  const auto& s = served_style(request.style);
  auto job = std::make_shared<Job>();
  job->style = &s;
  job->seed = request.seed;
  job->postproc = request.postproc.value_or(config_.postproc);
  job->include_stitched = request.include_stitched;

  if (request.sheet && !request.controls.empty())
    throw ServiceError(400, "bad_request", "send either one sheet or tile controls, not both");
  if (request.sheet) {
    auto sheet = decode_upload(*request.sheet, s);
    if (sheet.width() > 8 * kMaxSide || sheet.height() > 8 * kMaxSide)
      throw ServiceError(422, "bad_dimensions", "sheet is too large");
    for (auto& [index, ctrl] : tile(sheet, config_.tile_size, "sheet")) {
      job->indices.push_back(index);
      job->controls.push_back(std::move(ctrl));
    }
  } else {
    if (request.controls.empty()) throw ServiceError(400, "missing_control", "a batch needs at least one control image");
    static const std::regex kPlaced(R"(r(\d+)_c(\d+)(\.png)?)", std::regex::icase);
    std::vector<std::pair<int, int>> places;
    bool all_placed = true;
    for (const auto& u : request.controls) {
      std::smatch m;
      if (std::regex_match(u.name, m, kPlaced))
        places.emplace_back(std::stoi(m[1]), std::stoi(m[2]));
      else
        all_placed = false;
    }
    if (!all_placed) {
      places.clear();
      for (std::size_t i = 0; i < request.controls.size(); ++i) places.emplace_back(0, static_cast<int>(i));
    }
    int rows = 0, cols = 0;
    std::map<std::pair<int, int>, std::size_t> seen;
    for (std::size_t i = 0; i < places.size(); ++i) {
      if (!seen.emplace(places[i], i).second)
        throw ServiceError(422, "bad_layout", "two controls claim tile " + tile_name(places[i].first, places[i].second));
      rows = std::max(rows, places[i].first + 1);
      cols = std::max(cols, places[i].second + 1);
    }
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != places.size())
      throw ServiceError(422, "bad_layout", "tile names must cover a full " + std::to_string(rows) + "x" +
                                                std::to_string(cols) + " grid");
    int side = 0;
    for (std::size_t i = 0; i < request.controls.size(); ++i) {
      auto ctrl = decode_upload(request.controls[i], s);
      if (ctrl.width() != ctrl.height())
        throw ServiceError(422, "bad_dimensions", "batch tiles must be square; '" + request.controls[i].name + "' is " +
                                                      std::to_string(ctrl.width()) + "x" + std::to_string(ctrl.height()));
      if (i == 0) side = ctrl.width();
      if (ctrl.width() != side)
        throw ServiceError(422, "bad_dimensions", "batch tiles must share dimensions");
      TileIndex idx{"batch", places[i].first, places[i].second, side, cols * side, rows * side, cols * side, rows * side};
      job->indices.push_back(idx);
      job->controls.push_back(std::move(ctrl));
    }
  }
  for (const auto& c : job->controls) check_dims(c.width(), c.height(), "tile");

  job->snapshot = snapshot();
  if (!job->snapshot) throw ServiceError(503, "model_not_loaded", "no checkpoint is loaded");

  job->results.resize(job->controls.size());
  job->seeds.resize(job->controls.size());
  {
    std::lock_guard lock(jobs_mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(next_job_++));
    job->id = buf;
    jobs_.push_back(job);
  }
  for (std::size_t i = 0; i < job->controls.size(); ++i) pool_->post([this, job, i] { run_tile(job, i); });
  return job->id;
}

void Engine::run_tile(const std::shared_ptr<Job>& job, std::size_t slot) {
  {
    std::lock_guard lock(job->mutex);
    if (job->state == JobState::kFailed) return;
    if (job->state == JobState::kQueued) job->state = JobState::kRunning;
  }
  job->changed.notify_all();
  try {
    auto tile_out = render_tile(*job->snapshot, job->controls[slot], *job->style, job->seed, job->postproc);
    bool last = false;
    {
      std::lock_guard lock(job->mutex);
      job->results[slot] = std::move(tile_out.image);
      job->seeds[slot] = tile_out.seed;
      last = ++job->done == static_cast<int>(job->results.size());
    }
    if (last) finish_job(*job);
  } catch (const std::exception& e) {
    std::lock_guard lock(job->mutex);
    job->state = JobState::kFailed;
    job->error = e.what();
  }
  job->changed.notify_all();
}

void Engine::finish_job(Job& job) {
  try {
    Tiles<RgbImage> tiles;
    std::vector<zip::Entry> entries;
    nlohmann::json manifest_tiles = nlohmann::json::array();
    for (std::size_t i = 0; i < job.results.size(); ++i) {
      const auto& idx = job.indices[i];
      const auto name = tile_name(idx.row, idx.col);
      entries.push_back({name, png::encode_rgb(*job.results[i])});
      manifest_tiles.push_back({{"name", name}, {"row", idx.row}, {"col", idx.col}, {"seed", *job.seeds[i]}});
      tiles.emplace_back(idx, *job.results[i]);
    }
    RgbImage stitched = stitch(tiles);
    const auto& first = job.indices.front();
    nlohmann::json manifest{{"job_id", job.id},
                            {"style", job.style->key},
                            {"tile_size", first.tile_size},
                            {"rows", first.rows()},
                            {"cols", first.cols()},
                            {"crop_width", first.crop_width},
                            {"crop_height", first.crop_height},
                            {"postproc", job.postproc},
                            {"checkpoint", job.snapshot->source},
                            {"sample_steps", config_.sample_steps},
                            {"tiles", std::move(manifest_tiles)}};
    const auto manifest_text = manifest.dump(2);
    entries.push_back({"manifest.json", std::vector<std::uint8_t>(manifest_text.begin(), manifest_text.end())});
    if (job.include_stitched) entries.push_back({"stitched.png", png::encode_rgb(stitched)});
    auto archive = zip::write(entries);

    const auto dir = config_.jobs_dir / job.id;
    std::filesystem::create_directories(dir);
    png::write_file(dir / "archive.zip", archive);
    png::write_file(dir / "stitched.png", png::encode_rgb(stitched));

    std::lock_guard lock(job.mutex);
    job.archive = std::move(archive);
    job.stitched = std::move(stitched);
    job.state = JobState::kDone;
  } catch (const std::exception& e) {
    std::lock_guard lock(job.mutex);
    job.state = JobState::kFailed;
    job.error = std::string("packaging failed: ") + e.what();
  }
}

std::shared_ptr<Engine::Job> Engine::find_job(const std::string& job_id) const {
  std::lock_guard lock(jobs_mutex_);
  for (const auto& j : jobs_)
    if (j->id == job_id) return j;
  throw ServiceError(404, "unknown_job", "no job '" + job_id + "'");
}

JobStatus Engine::job_status(const std::string& job_id) const {
  auto job = find_job(job_id);
  std::lock_guard lock(job->mutex);
  JobStatus st;
  st.job_id = job->id;
  st.state = job->state;
  st.style = job->style->key;
  st.done = job->done;
  st.total = static_cast<int>(job->results.size());
  st.error = job->error;
  for (std::size_t i = 0; i < job->indices.size(); ++i) {
    const auto& idx = job->indices[i];
    st.tiles.push_back({idx, tile_name(idx.row, idx.col), job->seeds[i], job->results[i].has_value()});
  }
  return st;
}

std::vector<std::uint8_t> Engine::job_archive(const std::string& job_id) const {
  auto job = find_job(job_id);
  std::lock_guard lock(job->mutex);
  if (job->state != JobState::kDone)
    throw ServiceError(409, "job_not_done", "job '" + job_id + "' is " + to_string(job->state),
                       {{"state", to_string(job->state)}});
  return job->archive;
}

RgbImage Engine::job_stitched(const std::string& job_id) const {
  auto job = find_job(job_id);
  std::lock_guard lock(job->mutex);
  if (job->state != JobState::kDone)
    throw ServiceError(409, "job_not_done", "job '" + job_id + "' is " + to_string(job->state),
                       {{"state", to_string(job->state)}});
  return job->stitched;
}

JobStatus Engine::wait_job(const std::string& job_id, std::chrono::milliseconds timeout) const {
  auto job = find_job(job_id);
  {
    std::unique_lock lock(job->mutex);
    job->changed.wait_for(lock, timeout,
                          [&] { return job->state == JobState::kDone || job->state == JobState::kFailed; });
  }
  return job_status(job_id);
}

void Engine::set_paused(bool paused) { pool_->set_paused(paused); }

std::size_t Engine::job_count() const {
  std::lock_guard lock(jobs_mutex_);
  return jobs_.size();
}

}  // namespace mapgen::service
