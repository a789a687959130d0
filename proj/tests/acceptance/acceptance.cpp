// Acceptance suite: one PASS/FAIL line per primary criterion.
// MAPGEN_ACCEPT_ONLY=<name>[,<name>...] restricts the run; MAPGEN_ACCEPT_OUT sets the artifact dir.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mapgen/control_raster.hpp"
#include "mapgen/diffusion/checkpoint.hpp"
#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/sampler.hpp"
#include "mapgen/diffusion/schedule.hpp"
#include "mapgen/diffusion/trainer.hpp"
#include "mapgen/diffusion/training_log.hpp"
#include "mapgen/fidelity_metrics.hpp"
#include "mapgen/pipeline.hpp"
#include "mapgen/postproc.hpp"
#include "mapgen/rng.hpp"
#include "mapgen/seed_select.hpp"
#include "mapgen/tiler.hpp"
#include "mapgen/toy_corpus.hpp"
#include "service_check.hpp"

using namespace mapgen;
using namespace mapgen::diffusion;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::filesystem::path out_dir() {
  if (const char* d = std::getenv("MAPGEN_ACCEPT_OUT")) return d;
  return std::filesystem::current_path() / "acceptance_artifacts";
}

bool selected(const std::string& name) {
  const char* only = std::getenv("MAPGEN_ACCEPT_ONLY");
  if (!only || !*only) return true;
  std::stringstream ss(only);
  std::string item;
  while (std::getline(ss, item, ','))
    if (item == name) return true;
  return false;
}

std::string fmt(const char* f, auto... args) {
  char buf[2048];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <typename T>
ModelInput<T> random_input(const Arch& a, int n, int size, Rng& rng) {
  ModelInput<T> in;
  in.x.reset(n, 3, size, size);
  for (auto& v : in.x.data) v = static_cast<T>(rng.normal());
  nn::Tensor<T> c(n, a.num_classes, size, size);
  for (int i = 0; i < n; ++i) {
    in.t.push_back(static_cast<int>(rng.uniform_int(1, kDefaultT)));
    in.style.push_back(static_cast<int>(rng.uniform_int(0, a.num_styles - 1)));
    LabelImage labels(size, size);
    for (auto& l : labels.pixels()) l = static_cast<ClassId>(rng.uniform_int(0, a.num_classes - 1));
    encode_control(labels, a.num_classes, c.sample(i));
  }
  in.control = std::move(c);
  return in;
}

// ---------------------------------------------------------------------------------------------

Outcome zero_init_identity() {
  const auto t0 = Clock::now();
  const Arch a;
  const DiffusionModel<float> m(a, 2024);
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto in = random_input<float>(a, 1, 32, rng);
    const auto with = m.predict_noise(in);
    in.control.reset();
    const auto without = m.predict_noise(in);
    for (std::size_t j = 0; j < with.size(); ++j) worst = std::max(worst, std::abs(double(with.data[j]) - without.data[j]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 60.0, fmt("100 inputs, max |delta| = %.3g (<= 1e-6), %.1f s (< 60 s)", worst, secs)};
}

Outcome lock_contract(const std::vector<DatasetTriple>& data) {
  const auto t0 = Clock::now();
  const Arch a;
  DiffusionModel<float> m(a, 7);
  m.copy_base_encoder_to_control();
  std::vector<const DatasetTriple*> batch;
  for (int i = 0; i < 16; ++i) batch.push_back(&data[static_cast<std::size_t>(i * 37) % data.size()]);

  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.sd_locked = true;
  const auto before = m.params();
  {
    Trainer<float> tr(m, default_schedule(), cfg, Phase::kControl);
    for (int s = 0; s < 50; ++s) tr.step(batch);
  }
  std::size_t frozen = 0, frozen_changed = 0, trainable_changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const auto g = before[i].group;
    const bool is_frozen = g == nn::ParamGroup::kBaseEncoder || g == nn::ParamGroup::kBaseEmbedding ||
                           g == nn::ParamGroup::kBaseDecoder;
    const bool same = m.params()[i].value == before[i].value;
    if (is_frozen) {
      ++frozen;
      frozen_changed += !same;
    } else {
      trainable_changed += !same;
    }
  }
  cfg.sd_locked = false;
  const auto mid = m.params();
  {
    Trainer<float> tr(m, default_schedule(), cfg, Phase::kControl);
    for (int s = 0; s < 50; ++s) tr.step(batch);
  }
  std::size_t decoder = 0, decoder_changed = 0, encoder_changed = 0;
  for (std::size_t i = 0; i < mid.size(); ++i) {
    const bool same = m.params()[i].value == mid[i].value;
    if (mid[i].group == nn::ParamGroup::kBaseDecoder) {
      ++decoder;
      decoder_changed += !same;
    }
    if (mid[i].group == nn::ParamGroup::kBaseEncoder || mid[i].group == nn::ParamGroup::kBaseEmbedding)
      encoder_changed += !same;
  }
  const double secs = seconds_since(t0);
  const bool pass = frozen_changed == 0 && trainable_changed > 0 && decoder_changed == decoder && decoder > 0 &&
                    encoder_changed == 0 && secs < 300.0;
  return {pass, fmt("sd_locked=true: %zu/%zu frozen tensors changed; sd_locked=false: %zu/%zu decoder tensors "
                    "changed, %zu base encoder/embedding changed; %.1f s (< 300 s)",
                    frozen_changed, frozen, decoder_changed, decoder, encoder_changed, secs)};
}

Outcome gradient_check() {
  const Arch a;
  DiffusionModel<double> m(a, 99);
  Rng rng(5);
  for (auto& p : m.params())
    if (p.group == nn::ParamGroup::kZeroConv)
      for (auto& v : p.value) v = 0.2 * rng.normal();
  const auto in = random_input<double>(a, 2, 16, rng);
  nn::Tensor<double> r(2, 3, 16, 16);
  for (auto& v : r.data) v = rng.normal();
  auto loss = [&]() {
    const auto out = m.predict_noise(in);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * r.data[i];
    return s;
  };
  ForwardCache<double> cache;
  m.forward(in, cache);
  nn::Gradients<double> grads(m.params());
  m.backward(in, cache, r, all_groups(), grads);

  double worst = 0.0;
  std::string worst_name;
  for (int k = 0; k < 20; ++k) {
    const auto pi = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m.params().size()) - 1));
    auto& vals = m.params()[pi].value;
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vals.size()) - 1));
    const double h = 1e-3, old = vals[j];
    vals[j] = old + h;
    const double lp = loss();
    vals[j] = old - h;
    const double lm = loss();
    vals[j] = old;
    const double numeric = (lp - lm) / (2 * h);
    const double analytic = grads.g[pi][j];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    if (rel > worst) {
      worst = rel;
      worst_name = m.params()[pi].name;
    }
  }
  return {worst <= 1e-2, fmt("20 random parameters, worst relative error %.3g (%s) <= 1e-2", worst, worst_name.c_str())};
}

Outcome forward_statistics() {
  const auto s = default_schedule();
  Rng rng(11);
  constexpr int kN = 1'000'000;
  std::vector<double> x0(kN), eps(kN), out(kN);
  for (auto& v : x0) v = rng.uniform(-1, 1);
  bool pass = true;
  std::string detail;
  for (int t : {1, s.T / 2, s.T}) {
    for (auto& e : eps) e = rng.normal();
    forward_noise<double>(x0, t, eps, s, out);
    // Var(x_t | x0): subtract the known mean per element
    const double ab = s.alpha_bar(t);
    double var = 0;
    for (int i = 0; i < kN; ++i) {
      const double d = out[i] - std::sqrt(ab) * x0[i];
      var += d * d;
    }
    var /= kN;
    const double target = 1 - ab;
    const double rel = std::abs(var - target) / target;
    pass &= rel <= 0.02;
    detail += fmt("t=%d var %.5g vs %.5g (%.2f%%); ", t, var, target, 100 * rel);
  }
  return {pass, detail + "tolerance 2%"};
}

// ---------------------------------------------------------------------------------------------
// End-to-end toy training, shared with the seed-variability check.

struct ToyRun {
  std::unique_ptr<DiffusionModel<float>> model;
  NoiseSchedule schedule;
  std::vector<DatasetTriple> held_out;
  std::vector<std::pair<int, double>> log_miou;
  std::size_t train_triples = 0;
  int total_steps = 0;
  double train_seconds = 0;
};

constexpr int kBaseSteps = 2000;
constexpr int kControlSteps = 6000;
constexpr int kLogEvery = 1000;
constexpr int kEvalTiles = 64;

ToyRun train_toy_model(const std::filesystem::path& dir) {
  ToyRun run;
  ToyDatasetSpec spec;
  spec.sheets_per_style = 8;
  const auto train = build_toy_dataset(spec);
  ToyDatasetSpec held_spec = spec;
  held_spec.first_sheet = 100;
  held_spec.sheets_per_style = 4;
  run.held_out = content_rich(build_toy_dataset(held_spec));
  run.train_triples = train.size();

  // fixed log tiles: the first 8 rich held-out tiles of each style
  std::vector<DatasetTriple> log_triples;
  for (StyleId sid : spec.styles) {
    int n = 0;
    for (const auto& t : run.held_out)
      if (t.style == sid && n < 8) {
        log_triples.push_back(t);
        ++n;
      }
  }

  run.schedule = default_schedule();
  run.model = std::make_unique<DiffusionModel<float>>(Arch{}, 1);
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 16;
  cfg.seed = 3;
  cfg.log_every = kLogEvery;
  std::filesystem::create_directories(dir / "logs");
  std::ofstream metrics(dir / "metrics.jsonl");
  const auto t0 = Clock::now();
  auto progress = [&](int step, double loss) {
    if (step % 500 == 0) std::fprintf(stderr, "  [toy] step %d loss %.4f %.0f s\n", step, loss, seconds_since(t0));
  };
  {
    Trainer<float> tr(*run.model, run.schedule, cfg, Phase::kBase);
    TrainLoopOptions o;
    o.steps = kBaseSteps;
    o.log_every = kLogEvery;
    o.log_dir = dir / "logs";
    o.log_triples = log_triples;
    o.metrics = &metrics;
    o.progress = progress;
    const auto s = train_loop(tr, train, o);
    run.log_miou.insert(run.log_miou.end(), s.log_miou.begin(), s.log_miou.end());
  }
  run.model->copy_base_encoder_to_control();
  {
    Trainer<float> tr(*run.model, run.schedule, cfg, Phase::kControl);
    TrainLoopOptions o;
    o.steps = kControlSteps;
    o.log_every = kLogEvery;
    o.log_dir = dir / "logs";
    o.log_triples = log_triples;
    o.metrics = &metrics;
    o.step_offset = kBaseSteps;
    o.log_at_start = false;
    o.progress = progress;
    const auto s = train_loop(tr, train, o);
    run.log_miou.insert(run.log_miou.end(), s.log_miou.begin(), s.log_miou.end());
  }
  run.total_steps = kBaseSteps + kControlSteps;
  run.train_seconds = seconds_since(t0);
  save_checkpoint(dir / "toy_model.ckpt", *run.model, run.schedule,
                  {{"base_steps", kBaseSteps}, {"control_steps", kControlSteps}, {"training", config_to_json(cfg)}});
  return run;
}

Outcome end_to_end(const ToyRun& run) {
  std::vector<DatasetTriple> eval;
  for (StyleId sid : {StyleId::kModern, StyleId::kVintage}) {
    int n = 0;
    // skip the log tiles so evaluation tiles were never looked at during training
    int skipped = 0;
    for (const auto& t : run.held_out) {
      if (t.style != sid) continue;
      if (skipped < 8) {
        ++skipped;
        continue;
      }
      if (n < kEvalTiles / 2) {
        eval.push_back(t);
        ++n;
      }
    }
  }
  std::vector<SampleRequest> reqs;
  for (std::size_t i = 0; i < eval.size(); ++i) reqs.push_back({&eval[i].control, eval[i].style, 1000 + i});
  const auto tiles = sample_batch(*run.model, run.schedule, std::span<const SampleRequest>(reqs), kDefaultSampleSteps,
                                  32, 32);
  const double held = mean_control_miou(tiles, eval);
  const double first = run.log_miou.front().second;
  const double last = run.log_miou.back().second;
  std::set<StyleId> styles;
  for (const auto& t : eval) styles.insert(t.style);
  const bool pass = run.train_triples >= 1000 && styles.size() == 2 && run.total_steps <= 30000 && held >= 0.6 &&
                    last - first >= 0.4;
  return {pass, fmt("%zu train triples (>= 1000), 2 styles, %d steps (<= 30000) in %.0f s; held-out mean mIoU %.3f "
                    "over %zu tiles (>= 0.6); log mIoU step %d: %.3f -> step %d: %.3f, gain %.3f (>= 0.4)",
                    run.train_triples, run.total_steps, run.train_seconds, held, eval.size(),
                    run.log_miou.front().first, first, run.log_miou.back().first, last, last - first)};
}

// ---------------------------------------------------------------------------------------------

RgbImage speckled(RgbImage img, const ControlImage& control, std::uint64_t seed) {
  Rng rng(seed);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (control.labels.at(x, y) == kBackgroundId && rng.uniform01() < 0.4) {
        const int v = static_cast<int>(rng.uniform_int(-90, 90));
        auto& p = img.at(x, y);
        p = Rgb{static_cast<std::uint8_t>(std::clamp(p.r + v, 0, 255)), static_cast<std::uint8_t>(std::clamp(p.g + v, 0, 255)),
                static_cast<std::uint8_t>(std::clamp(p.b + v, 0, 255))};
      }
  return img;
}

Outcome seed_selection_oracle() {
  int matches = 0, clean_wins = 0;
  for (int set = 0; set < 20; ++set) {
    auto d = default_density(64, 64);
    d.text_boxes = 0;
    const auto scene = generate_toy_world(500 + set, 64, 64, d, 16);
    const auto& st = style(set % 2 ? StyleId::kVintage : StyleId::kModern);
    const auto control = rasterize(scene, st.legend, 64, 64);
    seed::SeedSelectConfig cfg;
    cfg.k = 6;
    cfg.lambda = 0.25 * (set % 5);
    cfg.run_seed = 900 + set;
    auto gen = [&](std::span<const std::uint64_t> seeds) {
      std::vector<RgbImage> out;
      for (auto s : seeds) out.push_back(speckled(render_reference(scene, st, static_cast<int>(s % 48)), control, s));
      return out;
    };
    const auto sel = seed::select_seed(control, st, cfg, gen);

    // brute force, independent of the library's scoring helpers
    const auto seeds = seed::candidate_seeds(cfg.run_seed, cfg.k);
    const auto tiles = gen(seeds);
    std::uint64_t best_seed = 0;
    double best = -1e300;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      LabelImage seg(64, 64);
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const Rgb p = tiles[i].at(x, y);
          int bd = 1 << 30;
          ClassId bc = kBackgroundId;
          for (ClassId c : st.legend) {
            const Rgb q = st.color(c);
            const int dr = std::abs(p.r - q.r), dg = std::abs(p.g - q.g), db = std::abs(p.b - q.b);
            if (std::max({dr, dg, db}) > seed::kDefaultMaxDistance) continue;
            if (dr + dg + db < bd) {
              bd = dr + dg + db;
              bc = c;
            }
          }
          seg.at(x, y) = bc;
        }
      double iou_sum = 0;
      int classes = 0;
      for (ClassId c : st.legend) {
        std::size_t inter = 0, uni = 0, present = 0;
        for (std::size_t k = 0; k < seg.size(); ++k) {
          const bool a = seg.pixels()[k] == c, b = control.labels.pixels()[k] == c;
          inter += a && b;
          uni += a || b;
          present += b;
        }
        if (present == 0) continue;
        iou_sum += static_cast<double>(inter) / uni;
        ++classes;
      }
      double sd = 0;
      for (int ch = 0; ch < 3; ++ch) {
        double sum = 0, sq = 0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < seg.size(); ++k) {
          if (control.labels.pixels()[k] != kBackgroundId) continue;
          const Rgb p = tiles[i].pixels()[k];
          const double v = ch == 0 ? p.r : ch == 1 ? p.g : p.b;
          sum += v;
          sq += v * v;
          ++n;
        }
        const double mean = sum / n;
        sd += std::sqrt(std::max(0.0, sq / n - mean * mean));
      }
      sd /= 3;
      const double score = iou_sum / classes - cfg.lambda * sd / 128.0;
      if (score > best + 1e-9 || (std::abs(score - best) <= 1e-9 && seeds[i] < best_seed)) {
        best = score;
        best_seed = seeds[i];
      }
    }
    matches += sel.best.seed == best_seed;

    // clean reference among heavy speckle, at a rotating position
    const auto clean = render_reference(scene, st, 0);
    const int pos = set % 6;
    auto inject = [&](std::span<const std::uint64_t> s) {
      std::vector<RgbImage> out;
      for (std::size_t i = 0; i < s.size(); ++i)
        out.push_back(static_cast<int>(i) == pos ? clean : speckled(clean, control, s[i]));
      return out;
    };
    seed::SeedSelectConfig c2;
    c2.run_seed = 31 + set;
    const auto sel2 = seed::select_seed(control, st, c2, inject);
    clean_wins += sel2.best.seed == seed::candidate_seeds(c2.run_seed, 6)[static_cast<std::size_t>(pos)];
  }
  return {matches == 20 && clean_wins == 20,
          fmt("oracle agreement %d/20 candidate sets; clean tile chosen %d/20", matches, clean_wins)};
}

Outcome seed_variability(const ToyRun& run) {
  const auto t0 = Clock::now();
  std::map<StyleId, std::vector<double>> per_control_std;
  for (StyleId sid : {StyleId::kModern, StyleId::kVintage}) {
    std::vector<const DatasetTriple*> controls;
    for (const auto& t : run.held_out)
      if (t.style == sid && controls.size() < 20) controls.push_back(&t);
    const auto& st = style(sid);
    for (std::size_t ci = 0; ci < controls.size(); ++ci) {
      const auto seeds = seed::candidate_seeds(4242 + ci, 6);
      std::vector<SampleRequest> reqs;
      for (auto s : seeds) reqs.push_back({&controls[ci]->control, sid, s});
      const auto tiles = sample_batch(*run.model, run.schedule, std::span<const SampleRequest>(reqs),
                                      kDefaultSampleSteps, 32, 32);
      std::vector<double> m;
      for (const auto& tile : tiles) m.push_back(seed::control_miou(seed::segment_palette(tile, st), controls[ci]->control, st));
      const double mean = std::accumulate(m.begin(), m.end(), 0.0) / m.size();
      double var = 0;
      for (double v : m) var += (v - mean) * (v - mean);
      per_control_std[sid].push_back(std::sqrt(var / m.size()));
    }
  }
  auto avg = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double clean = avg(per_control_std[StyleId::kModern]);
  const double noisy = avg(per_control_std[StyleId::kVintage]);
  const bool pass = per_control_std[StyleId::kModern].size() >= 20 && per_control_std[StyleId::kVintage].size() >= 20 &&
                    noisy > clean;
  return {pass, fmt("mean per-control std of mIoU over 6 seeds: vintage %.4f vs modern %.4f (%zu + %zu controls, %.0f s)",
                    noisy, clean, per_control_std[StyleId::kVintage].size(), per_control_std[StyleId::kModern].size(),
                    seconds_since(t0))};
}

Outcome tiling_round_trip() {
  std::mt19937 g(2718);
  std::uniform_int_distribution<int> side(1, 300), tsz(1, 96), byte(0, 255);
  int ok = 0;
  for (int i = 0; i < 50; ++i) {
    RgbImage sheet(side(g), side(g));
    for (auto& p : sheet.pixels())
      p = Rgb{static_cast<std::uint8_t>(byte(g)), static_cast<std::uint8_t>(byte(g)), static_cast<std::uint8_t>(byte(g))};
    auto tiles = tile(sheet, tsz(g), Rgb{0, 0, 0});
    std::shuffle(tiles.begin(), tiles.end(), g);
    const auto back = stitch(tiles);
    ok += back == sheet;
  }
  return {ok == 50, fmt("%d/50 random sheets byte-exact after stitch(tile(.))", ok)};
}

Outcome assessment_table_arithmetic() {
  using namespace metrics;
  auto build = [](std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    std::vector<AssessmentRecord> r;
    auto add = [&](std::size_t n, Label t, Label resp) {
      for (std::size_t i = 0; i < n; ++i) r.push_back({std::to_string(r.size()), t, resp, 1, "s", "p"});
    };
    add(tp, Label::kReal, Label::kReal);
    add(fp, Label::kSynthetic, Label::kReal);
    add(fn, Label::kReal, Label::kSynthetic);
    add(tn, Label::kSynthetic, Label::kSynthetic);
    return score_assessment(r)[0].score;
  };
  struct Case {
    std::size_t tp, fp, fn, tn;
    double p, r, f1;
  };
  // counts hitting the target rates exactly: 0.58 = 29/50 and 0.51 = 51/100 need TP = 29 * 51
  const Case cases[] = {{19, 0, 1, 20, 1.00, 0.95, 0.97}, {20, 0, 0, 20, 1.00, 1.00, 1.00},
                        {1479, 1071, 1421, 1000, 0.58, 0.51, 0.54}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto s = build(c.tp, c.fp, c.fn, c.tn);
    const bool ok = std::abs(s.precision - c.p) <= 0.005 && std::abs(s.recall - c.r) <= 0.005 &&
                    std::abs(s.f1 - c.f1) <= 0.005;
    pass &= ok;
    detail += fmt("(P=%.3f, R=%.3f -> F1=%.4f vs %.2f) ", s.precision, s.recall, s.f1, c.f1);
  }
  return {pass, detail + "within 0.005"};
}

Outcome sus() {
  metrics::SusResponse best, mid;
  for (int i = 0; i < 10; ++i) best.items[i] = i % 2 == 0 ? 5 : 1;
  mid.items.fill(3);
  const double b = metrics::sus_response_score(best);
  const double m = metrics::sus_response_score(mid);
  return {b == 100.0 && m == 50.0, fmt("maximal response %.1f (100), all-3s %.1f (50)", b, m)};
}

Outcome postprocessing() {
  using namespace postproc;
  int homog_ok = 0, correct_ok = 0, idem_ok = 0;
  const auto& modern = style(StyleId::kModern);
  const auto& vintage = style(StyleId::kVintage);
  for (int i = 0; i < 20; ++i) {
    auto d = default_density(64, 64);
    d.text_boxes = 0;
    const auto scene = generate_toy_world(700 + i, 64, 64, d, 16);

    const auto vctl = rasterize(scene, vintage.legend, 64, 64);
    const auto vimg = render_reference(scene, vintage);
    const auto h = homogenize_background(vimg, vctl, vintage.background());
    homog_ok += seed::std_background(h, vctl).value == 0.0;

    // +-8 jitter on every pixel of a clean modern rendering
    const auto mctl = rasterize(scene, modern.legend, 64, 64);
    const auto clean = render_reference(scene, modern, 0);
    Rng rng(800 + i);
    auto jit = clean;
    for (auto& p : jit.pixels()) {
      auto j = [&](std::uint8_t v) {
        return static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng.uniform_int(-8, 8)), 0, 255));
      };
      p = Rgb{j(p.r), j(p.g), j(p.b)};
    }
    PostprocPlan all;
    for (ClassId c : modern.legend) all.corrections.push_back({c, modern.color(c), 16});
    correct_ok += correct_colors(jit, mctl, all) == clean;

    // idempotence of all three ops on a random noisy tile
    const auto contours = contour_polylines(scene);
    const auto plan = default_plan(modern);
    const auto c1 = correct_colors(jit, mctl, plan);
    const auto h1 = homogenize_background(vimg, vctl, vintage.background());
    const auto o1 = overlay_contours(vimg, contours, kContourBrown, 1);
    idem_ok += correct_colors(c1, mctl, plan) == c1 && homogenize_background(h1, vctl, vintage.background()) == h1 &&
               overlay_contours(o1, contours, kContourBrown, 1) == o1;
  }
  return {homog_ok == 20 && correct_ok == 20 && idem_ok == 20,
          fmt("std_background after homogenize == 0: %d/20; +-8 jitter restored exactly: %d/20; idempotent: %d/20",
              homog_ok, correct_ok, idem_ok)};
}

}  // namespace

int main() {
  const auto dir = out_dir();
  std::filesystem::create_directories(dir);
  int failures = 0;
  // the lines also go to a report file because ctest hides the output of passing tests
  std::ofstream report_file(dir / "acceptance_report.txt");
  auto emit = [&](const std::string& line) {
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    report_file << line << "\n" << std::flush;
  };
  auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
    if (!selected(name)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    emit(fmt("%s %s: %s [%.1f s]", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0)));
    std::fflush(stdout);
  };

  ToyDatasetSpec small;
  small.sheets_per_style = 2;
  const auto small_data = build_toy_dataset(small);

  report("zero_init_identity", zero_init_identity);
  report("lock_contract", [&] { return lock_contract(small_data); });
  report("gradient_check", gradient_check);
  report("forward_process_statistics", forward_statistics);
  report("tiling_round_trip", tiling_round_trip);
  report("assessment_table_arithmetic", assessment_table_arithmetic);
  report("sus_scoring", sus);
  report("postprocessing", postprocessing);
  report("seed_selection_oracle", seed_selection_oracle);
  report("service_contract", [&] {
    const auto r = acceptance::service_contract(dir);
    return Outcome{r.first, r.second};
  });

  if (selected("end_to_end_toy_training") || selected("seed_variability_trend")) {
    std::optional<ToyRun> run;
    try {
      run = train_toy_model(dir / "toy_run");
    } catch (const std::exception& e) {
      emit(std::string("FAIL end_to_end_toy_training: training threw: ") + e.what());
      emit("FAIL seed_variability_trend: no trained model");
      return 1;
    }
    report("end_to_end_toy_training", [&] { return end_to_end(*run); });
    report("seed_variability_trend", [&] { return seed_variability(*run); });
  }
  emit(fmt("%s: %d failing criteria", failures ? "FAILED" : "ALL PASSED", failures));
  return failures ? 1 : 0;
}
