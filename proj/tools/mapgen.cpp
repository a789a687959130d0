// mapgen command line: offline pipeline, evaluation and the HTTP service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mapgen/control_raster.hpp"
#include "mapgen/diffusion/checkpoint.hpp"
#include "mapgen/diffusion/sampler.hpp"
#include "mapgen/diffusion/trainer.hpp"
#include "mapgen/diffusion/training_log.hpp"
#include "mapgen/fidelity_metrics.hpp"
#include "mapgen/mask_text.hpp"
#include "mapgen/pipeline.hpp"
#include "mapgen/png_io.hpp"
#include "mapgen/postproc.hpp"
#include "mapgen/seed_select.hpp"
#include "mapgen/service/config.hpp"
#include "mapgen/service/engine.hpp"
#include "mapgen/service/server.hpp"
#include "mapgen/service/zip.hpp"
#include "mapgen/tiler.hpp"
#include "mapgen/toy_corpus.hpp"

using namespace mapgen;
namespace fs = std::filesystem;

namespace {

const StyleSpec& style_arg(const std::string& key) {
  const StyleSpec* s = find_style(key);
  if (!s) throw ConfigError("unknown style '" + key + "' (modern, midcentury, vintage)");
  return *s;
}

std::vector<StyleId> styles_arg(const std::vector<std::string>& keys) {
  std::vector<StyleId> out;
  for (const auto& k : keys) out.push_back(style_arg(k).id);
  return out;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tile_file(int row, int col) { return "r" + std::to_string(row) + "_c" + std::to_string(col) + ".png"; }

// ---- corpus gen

struct CorpusArgs {
  fs::path out;
  std::uint64_t seed = 1;
  int sheets = 4;
  int size = 128;
  int first = 0;
  std::vector<std::string> styles{"modern", "vintage"};
};

void corpus_gen(const CorpusArgs& a) {
  ToyDatasetSpec spec;
  spec.seed = a.seed;
  spec.sheet_size = a.size;
  spec.first_sheet = a.first;
  spec.styles = styles_arg(a.styles);
  fs::create_directories(a.out);
  nlohmann::json index = nlohmann::json::array();
  for (StyleId sid : spec.styles) {
    const auto& st = style(sid);
    for (int i = a.first; i < a.first + a.sheets; ++i) {
      const auto scene = toy_sheet_scene(spec, sid, i);
      const auto name = st.key + "_" + std::to_string(i);
      std::ofstream(a.out / (name + ".scene.json")) << scene_to_json(scene);
      png::write_rgb(a.out / (name + ".png"), render_reference(scene, st));
      png::write_file(a.out / (name + "_control.png"),
                      encode_control_png(rasterize(scene, st.legend, scene.width, scene.height)));
      png::write_file(a.out / (name + "_mask.png"),
                      png::encode_mask(build_text_mask(scene.text_boxes, scene.width, scene.height)));
      index.push_back({{"name", name}, {"style", st.key}, {"scene", name + ".scene.json"},
                       {"reference", name + ".png"}, {"control", name + "_control.png"}, {"mask", name + "_mask.png"}});
    }
  }
  std::ofstream(a.out / "corpus.json") << index.dump(2) << "\n";
  std::printf("wrote %zu sheets to %s\n", index.size(), a.out.string().c_str());
}

// ---- dataset build

struct DatasetArgs {
  fs::path out;
  fs::path scene, reference;
  std::string style = "modern";
  std::string sheet_id;
  bool toy = false;
  std::uint64_t seed = 1;
  int sheets = 4;
  int first = 0;
  int sheet_size = 128;
  int tile = 32;
  int upsample = 2;
  std::vector<std::string> styles{"modern", "vintage"};
};

void dataset_build(const DatasetArgs& a) {
  std::vector<DatasetTriple> triples;
  if (a.toy) {
    ToyDatasetSpec spec;
    spec.seed = a.seed;
    spec.sheets_per_style = a.sheets;
    spec.first_sheet = a.first;
    spec.sheet_size = a.sheet_size;
    spec.tile_size = a.tile;
    spec.upsample = a.upsample;
    spec.styles = styles_arg(a.styles);
    triples = build_toy_dataset(spec);
  } else {
    if (a.scene.empty() || a.reference.empty()) throw ConfigError("dataset build needs --toy or --scene with --reference");
    const auto& st = style_arg(a.style);
    const auto scene = scene_from_json(read_text(a.scene));
    const auto target = png::read_rgb(a.reference);
    if (target.width() != scene.width || target.height() != scene.height)
      throw DataError("reference raster does not match the scene extent");
    const auto control = rasterize(scene, st.legend, scene.width, scene.height);
    const auto mask = build_text_mask(scene.text_boxes, scene.width, scene.height);
    const auto id = a.sheet_id.empty() ? a.scene.stem().stem().string() : a.sheet_id;
    triples = build_dataset(control, target, mask, st, a.tile, a.upsample, id);
  }
  write_dataset(a.out, triples);
  std::printf("wrote %zu triples to %s\n", triples.size(), a.out.string().c_str());
}

// ---- train base / control

struct TrainArgs {
  fs::path data, out, init, log_data, log_dir, metrics;
  int steps = 1000;
  int batch = 16;
  double lr = 1e-3;
  int log_every = 250;
  int sample_steps = diffusion::kDefaultSampleSteps;
  std::uint64_t seed = 0;
  bool unlocked = false;
};

std::vector<DatasetTriple> log_tiles(const TrainArgs& a, const std::vector<DatasetTriple>& data) {
  const auto pool = content_rich(a.log_data.empty() ? data : read_dataset(a.log_data));
  std::vector<DatasetTriple> out;
  std::map<StyleId, int> per_style;
  for (const auto& t : pool)
    if (per_style[t.style]++ < 8) out.push_back(t);
  return out;
}

void train(const TrainArgs& a, diffusion::Phase phase) {
  using namespace diffusion;
  const auto data = read_dataset(a.data);
  if (data.empty()) throw DataError("dataset " + a.data.string() + " is empty");
  std::unique_ptr<DiffusionModel<float>> model;
  NoiseSchedule schedule = default_schedule();
  int step_offset = 0;
  nlohmann::json history = nlohmann::json::array();
  if (!a.init.empty()) {
    auto loaded = load_checkpoint<float>(a.init);
    model = std::move(loaded.model);
    schedule = loaded.schedule;
    step_offset = loaded.info.value("global_step", 0);
    if (loaded.info.contains("history")) history = loaded.info["history"];
    if (phase == Phase::kControl && loaded.info.value("phase", "") == "base") model->copy_base_encoder_to_control();
  } else {
    if (phase == Phase::kControl) throw ConfigError("train control needs --init with a base checkpoint");
    model = std::make_unique<DiffusionModel<float>>(Arch{}, a.seed + 1);
  }

  TrainingConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.max_steps = a.steps;
  cfg.log_every = a.log_every > 0 ? a.log_every : 1;
  cfg.sd_locked = !a.unlocked;
  cfg.seed = a.seed;
  cfg.validate();

  std::ofstream metrics;
  if (!a.metrics.empty()) metrics.open(a.metrics, std::ios::app);
  TrainLoopOptions o;
  o.steps = a.steps;
  o.log_every = a.log_dir.empty() ? 0 : a.log_every;
  o.log_dir = a.log_dir;
  if (!a.log_dir.empty()) {
    fs::create_directories(a.log_dir);
    o.log_triples = log_tiles(a, data);
  }
  o.sample_steps = a.sample_steps;
  o.metrics = a.metrics.empty() ? nullptr : &metrics;
  o.step_offset = step_offset;
  o.log_at_start = step_offset == 0;
  o.progress = [&](int step, double loss) {
    if (step % 100 == 0) std::fprintf(stderr, "step %d loss %.4f\n", step, loss);
  };
  Trainer<float> trainer(*model, schedule, cfg, phase);
  const auto summary = train_loop(trainer, data, o);

  const char* phase_name = phase == Phase::kBase ? "base" : "control";
  history.push_back({{"phase", phase_name}, {"steps", a.steps}, {"training", config_to_json(cfg)},
                     {"final_loss", summary.final_loss}, {"data", a.data.string()}});
  save_checkpoint(a.out, *model, schedule,
                  {{"phase", phase_name}, {"global_step", step_offset + a.steps}, {"history", history}});
  std::printf("%s phase: %d steps, final loss %.4f", phase_name, a.steps, summary.final_loss);
  if (!summary.log_miou.empty()) std::printf(", last log mIoU %.3f", summary.log_miou.back().second);
  std::printf("\nsaved %s\n", a.out.string().c_str());
}

// ---- generate

struct GenerateArgs {
  fs::path checkpoint, control, out, report, tiles_dir;
  std::string style = "modern";
  std::optional<std::uint64_t> seed;
  bool select = false;
  int k = 6;
  double lambda = 1.0;
  std::uint64_t run_seed = 0;
  bool postproc = false;
  int steps = diffusion::kDefaultSampleSteps;
  int tile = 0;
};

void generate(const GenerateArgs& a) {
  const auto& st = style_arg(a.style);
  auto loaded = diffusion::load_checkpoint<float>(a.checkpoint);
  const auto control = decode_control_png(png::read_file(a.control), st.legend);
  std::ofstream report;
  if (!a.report.empty()) report.open(a.report);

  auto one = [&](const ControlImage& c) {
    RgbImage img;
    std::uint64_t used = 0;
    if (a.select) {
      seed::SeedSelectConfig sc;
      sc.k = a.k;
      sc.lambda = a.lambda;
      sc.run_seed = a.seed.value_or(a.run_seed);
      sc.validate();
      auto sel = seed::select_seed(*loaded.model, c, st, sc, loaded.schedule, a.steps);
      if (report.is_open()) seed::write_selection_report(report, sel);
      used = sel.best.seed;
      img = std::move(sel.best.tile);
    } else {
      used = a.seed.value_or(0);
      img = diffusion::sample(*loaded.model, c, st.id, used, loaded.schedule, a.steps);
    }
    if (a.postproc) img = postproc::apply_plan(img, c, postproc::default_plan(st));
    return std::pair{std::move(img), used};
  };

  if (a.tile <= 0) {
    auto [img, used] = one(control);
    png::write_rgb(a.out, img);
    std::printf("wrote %s (seed %llu)\n", a.out.string().c_str(), static_cast<unsigned long long>(used));
    return;
  }
  Tiles<RgbImage> generated;
  for (const auto& [idx, c] : tile(control, a.tile, a.control.stem().string())) {
    auto [img, used] = one(c);
    if (!a.tiles_dir.empty()) {
      fs::create_directories(a.tiles_dir);
      png::write_rgb(a.tiles_dir / tile_file(idx.row, idx.col), img);
    }
    std::fprintf(stderr, "tile r%d c%d seed %llu\n", idx.row, idx.col, static_cast<unsigned long long>(used));
    generated.emplace_back(idx, std::move(img));
  }
  png::write_rgb(a.out, stitch(generated));
  std::printf("wrote %s (%zu tiles)\n", a.out.string().c_str(), generated.size());
}

// ---- stitch

Tiles<RgbImage> tiles_from_files(const std::vector<std::pair<std::string, png::Bytes>>& files,
                                 const nlohmann::json& manifest) {
  static const std::regex kName(R"(r(\d+)_c(\d+)\.png)");
  std::vector<std::tuple<int, int, RgbImage>> found;
  int rows = 0, cols = 0;
  for (const auto& [name, bytes] : files) {
    std::smatch m;
    if (!std::regex_match(name, m, kName)) continue;
    const int r = std::stoi(m[1]), c = std::stoi(m[2]);
    rows = std::max(rows, r + 1);
    cols = std::max(cols, c + 1);
    found.emplace_back(r, c, png::decode_rgb(bytes));
  }
  if (found.empty()) throw DataError("no r{row}_c{col}.png tiles found");
  const int ts = std::get<2>(found.front()).width();
  TileIndex base{"sheet", 0, 0, ts, cols * ts, rows * ts, cols * ts, rows * ts};
  if (manifest.is_object()) {
    base.crop_width = manifest.value("crop_width", base.crop_width);
    base.crop_height = manifest.value("crop_height", base.crop_height);
  }
  Tiles<RgbImage> tiles;
  for (auto& [r, c, img] : found) {
    auto idx = base;
    idx.row = r;
    idx.col = c;
    tiles.emplace_back(idx, std::move(img));
  }
  return tiles;
}

void stitch_cmd(const fs::path& input, const fs::path& out) {
  std::vector<std::pair<std::string, png::Bytes>> files;
  nlohmann::json manifest;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      const auto name = e.path().filename().string();
      if (name == "manifest.json") manifest = nlohmann::json::parse(read_text(e.path()));
      else if (e.path().extension() == ".png") files.emplace_back(name, png::read_file(e.path()));
    }
  } else {
    for (auto& e : zip::read(png::read_file(input))) {
      if (e.name == "manifest.json") manifest = nlohmann::json::parse(std::string(e.data.begin(), e.data.end()));
      else files.emplace_back(e.name, std::move(e.data));
    }
  }
  const auto sheet = stitch(tiles_from_files(files, manifest));
  png::write_rgb(out, sheet);
  std::printf("wrote %s (%dx%d)\n", out.string().c_str(), sheet.width(), sheet.height());
}

// ---- postproc

void postproc_cmd(const fs::path& in, const fs::path& control_path, const std::string& style_key, const fs::path& plan_path,
                  const fs::path& scene_path, const fs::path& out) {
  const auto& st = style_arg(style_key);
  const auto tile_img = png::read_rgb(in);
  const auto control = decode_control_png(png::read_file(control_path), full_legend());
  auto plan = plan_path.empty() ? postproc::default_plan(st)
                                : postproc::plan_from_json(nlohmann::json::parse(read_text(plan_path)));
  postproc::validate_plan(plan, st);
  std::vector<std::vector<Point>> contours;
  if (!scene_path.empty()) contours = postproc::contour_polylines(scene_from_json(read_text(scene_path)));
  png::write_rgb(out, postproc::apply_plan(tile_img, control, plan, contours));
  std::printf("wrote %s\n", out.string().c_str());
}

// ---- evaluate

void evaluate_miou(const std::vector<fs::path>& preds, const std::vector<fs::path>& controls, const std::string& style_key,
                   const std::string& segmenter_id) {
  if (preds.size() != controls.size()) throw ConfigError("--pred and --control must be given the same number of times");
  const auto& st = style_arg(style_key);
  const auto seg = seed::make_segmenter(segmenter_id);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto control = decode_control_png(png::read_file(controls[i]), full_legend());
    const double m = seed::control_miou(seg->segment(png::read_rgb(preds[i]), st), control, st);
    std::printf("%s\t%.4f\n", preds[i].string().c_str(), m);
    sum += m;
  }
  std::printf("mean mIoU\t%.4f\t(%zu tiles)\n", sum / static_cast<double>(preds.size()), preds.size());
}

void evaluate_assessment(const fs::path& csv, const fs::path& similarity, bool pooled) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  const auto records = metrics::read_assessment_csv(in);
  const auto rows =
      metrics::score_assessment(records, pooled ? metrics::Averaging::kPooled : metrics::Averaging::kPerParticipant);
  std::map<std::string, double> sim;
  if (!similarity.empty()) {
    std::ifstream sin(similarity);
    if (!sin) throw IoError("cannot open " + similarity.string());
    sim = metrics::mean_similarity(metrics::read_similarity_csv(sin));
  }
  std::cout << metrics::format_assessment_table(rows, sim);
  for (const auto& r : rows)
    if (r.score.zero_denominator)
      std::printf("note: %s task %d had a 0/0 ratio reported as 0\n", r.style.c_str(), r.task);
}

void evaluate_sus(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  const auto s = metrics::sus_score(metrics::read_sus_csv(in));
  std::printf("SUS mean %.2f  std %.2f  n %zu\n", s.mean, s.stddev, s.count);
}

// ---- serve

service::Server* g_server = nullptr;

void serve(const fs::path& config_path, std::optional<int> port, const std::string& host, const fs::path& checkpoint) {
  auto cfg = config_path.empty() ? service::ServiceConfig{} : service::load_config(config_path);
  service::apply_env_overrides(cfg);
  if (port) cfg.port = *port;
  if (!host.empty()) cfg.host = host;
  if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
  cfg.validate();
  service::Engine engine(cfg);
  if (!cfg.checkpoint.empty()) engine.load_checkpoint(cfg.checkpoint);
  else std::fprintf(stderr, "no checkpoint configured; generation answers 503 until POST /reload\n");
  service::Server server(engine);
  const int bound = server.bind(cfg.host, cfg.port);
  if (bound < 0) throw IoError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::fprintf(stderr, "serving on http://%s:%d\n", cfg.host.c_str(), bound);
  server.listen();
  g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mapgen: controllable map tile generation"};
  app.require_subcommand(1);

  auto* corpus = app.add_subcommand("corpus", "procedural toy corpus");
  corpus->require_subcommand(1);
  CorpusArgs ca;
  auto* cgen = corpus->add_subcommand("gen", "write scenes, reference renderings, controls and text masks");
  cgen->add_option("--out", ca.out, "output directory")->required();
  cgen->add_option("--seed", ca.seed);
  cgen->add_option("--sheets", ca.sheets, "sheets per style");
  cgen->add_option("--size", ca.size, "sheet side in pixels");
  cgen->add_option("--first-sheet", ca.first);
  cgen->add_option("--styles", ca.styles)->delimiter(',');
  cgen->callback([&] { corpus_gen(ca); });

  auto* dataset = app.add_subcommand("dataset", "training triples");
  dataset->require_subcommand(1);
  DatasetArgs da;
  auto* dbuild = dataset->add_subcommand("build", "mask, upsample and tile into (control, target, prompt) triples");
  dbuild->add_option("--out", da.out, "dataset directory")->required();
  dbuild->add_flag("--toy", da.toy, "build from the procedural corpus");
  dbuild->add_option("--scene", da.scene, "scene file (vector path)");
  dbuild->add_option("--reference", da.reference, "reference rendering PNG of the scene");
  dbuild->add_option("--style", da.style);
  dbuild->add_option("--sheet-id", da.sheet_id);
  dbuild->add_option("--seed", da.seed);
  dbuild->add_option("--sheets", da.sheets, "toy sheets per style");
  dbuild->add_option("--first-sheet", da.first);
  dbuild->add_option("--sheet-size", da.sheet_size);
  dbuild->add_option("--styles", da.styles)->delimiter(',');
  dbuild->add_option("--tile", da.tile, "tile side after upsampling");
  dbuild->add_option("--upsample", da.upsample);
  dbuild->callback([&] { dataset_build(da); });

  auto* trainc = app.add_subcommand("train", "diffusion training");
  trainc->require_subcommand(1);
  TrainArgs ta;
  auto add_train_opts = [&](CLI::App* c) {
    c->add_option("--data", ta.data, "dataset directory")->required();
    c->add_option("--out", ta.out, "checkpoint to write")->required();
    c->add_option("--steps", ta.steps);
    c->add_option("--batch", ta.batch);
    c->add_option("--lr", ta.lr);
    c->add_option("--seed", ta.seed);
    c->add_option("--log-every", ta.log_every);
    c->add_option("--log-dir", ta.log_dir, "image log directory (disabled when empty)");
    c->add_option("--log-data", ta.log_data, "dataset for log tiles (default: training data)");
    c->add_option("--metrics", ta.metrics, "JSON-lines metrics file (appended)");
    c->add_option("--sample-steps", ta.sample_steps);
  };
  auto* tbase = trainc->add_subcommand("base", "pretrain the backbone without control");
  add_train_opts(tbase);
  tbase->add_option("--init", ta.init, "resume from a checkpoint");
  tbase->callback([&] { train(ta, diffusion::Phase::kBase); });
  auto* tctrl = trainc->add_subcommand("control", "train the control branch against the locked base");
  add_train_opts(tctrl);
  tctrl->add_option("--init", ta.init, "base or control checkpoint")->required();
  tctrl->add_flag("--unlock-decoder", ta.unlocked, "also train the base decoder");
  tctrl->callback([&] { train(ta, diffusion::Phase::kControl); });

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "sample a tile (or a tiled sheet) for a control image");
  gen->add_option("--checkpoint", ga.checkpoint)->required();
  gen->add_option("--control", ga.control, "control PNG")->required();
  gen->add_option("--style", ga.style);
  gen->add_option("--out", ga.out, "output PNG")->required();
  gen->add_option("--seed", ga.seed, "sampling seed (run seed with --select)");
  gen->add_flag("--select", ga.select, "automatic seed selection");
  gen->add_option("--k", ga.k, "candidates for --select");
  gen->add_option("--lambda", ga.lambda, "background-noise weight for --select");
  gen->add_option("--report", ga.report, "JSON-lines selection report");
  gen->add_flag("--postproc", ga.postproc, "apply the style's default post-processing");
  gen->add_option("--steps", ga.steps, "sampling steps");
  gen->add_option("--tile", ga.tile, "split the control into tiles of this size and stitch the results");
  gen->add_option("--tiles-dir", ga.tiles_dir, "also write r{row}_c{col}.png tiles here");
  gen->callback([&] { generate(ga); });

  fs::path st_in, st_out;
  auto* st = app.add_subcommand("stitch", "reassemble r{row}_c{col}.png tiles from a directory or job archive");
  st->add_option("input", st_in, "directory or .zip")->required();
  st->add_option("--out", st_out)->required();
  st->callback([&] { stitch_cmd(st_in, st_out); });

  fs::path pp_in, pp_control, pp_plan, pp_scene, pp_out;
  std::string pp_style = "modern";
  auto* pp = app.add_subcommand("postproc", "color correction, background homogenization, contour overlay");
  pp->add_option("--in", pp_in)->required();
  pp->add_option("--control", pp_control)->required();
  pp->add_option("--style", pp_style);
  pp->add_option("--plan", pp_plan, "plan JSON (default: the style's plan)");
  pp->add_option("--scene", pp_scene, "scene file supplying contour polylines");
  pp->add_option("--out", pp_out)->required();
  pp->callback([&] { postproc_cmd(pp_in, pp_control, pp_style, pp_plan, pp_scene, pp_out); });

  auto* ev = app.add_subcommand("evaluate", "fidelity and usability metrics");
  ev->require_subcommand(1);
  std::vector<fs::path> ev_pred, ev_control;
  std::string ev_style = "modern", ev_seg = "palette";
  auto* emiou = ev->add_subcommand("miou", "segment generated tiles and score them against their controls");
  emiou->add_option("--pred", ev_pred)->required();
  emiou->add_option("--control", ev_control)->required();
  emiou->add_option("--style", ev_style);
  emiou->add_option("--segmenter", ev_seg);
  emiou->callback([&] { evaluate_miou(ev_pred, ev_control, ev_style, ev_seg); });
  fs::path ev_csv, ev_sim;
  bool ev_pooled = false;
  auto* eass = ev->add_subcommand("assessment", "precision/recall/F1 table from real-vs-synthetic responses");
  eass->add_option("--csv", ev_csv)->required();
  eass->add_option("--similarity", ev_sim, "similarity ratings CSV");
  eass->add_flag("--pooled", ev_pooled, "pool counts instead of averaging per participant");
  eass->callback([&] { evaluate_assessment(ev_csv, ev_sim, ev_pooled); });
  auto* esus = ev->add_subcommand("sus", "System Usability Scale score");
  esus->add_option("--csv", ev_csv)->required();
  esus->callback([&] { evaluate_sus(ev_csv); });

  fs::path sv_config, sv_ckpt;
  std::optional<int> sv_port;
  std::string sv_host;
  auto* sv = app.add_subcommand("serve", "HTTP generation service");
  sv->add_option("--config", sv_config, "service config JSON");
  sv->add_option("--port", sv_port);
  sv->add_option("--host", sv_host);
  sv->add_option("--checkpoint", sv_ckpt);
  sv->callback([&] { serve(sv_config, sv_port, sv_host, sv_ckpt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
