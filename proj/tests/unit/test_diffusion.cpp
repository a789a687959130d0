#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mapgen/diffusion/checkpoint.hpp"
#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/sampler.hpp"
#include "mapgen/diffusion/schedule.hpp"
#include "mapgen/diffusion/trainer.hpp"
#include "mapgen/diffusion/training_log.hpp"
#include "mapgen/png_io.hpp"

using namespace mapgen;
using namespace mapgen::diffusion;

namespace {

Arch tiny_arch() {
  Arch a;
  a.channels = {6, 8, 10};
  a.temb_dim = 12;
  a.sinus_dim = 8;
  a.cond_hidden = 4;
  return a;
}

DatasetTriple tiny_triple(std::uint64_t seed, int size = 8) {
  Rng rng(seed);
  const auto& st = style(StyleId::kModern);
  DatasetTriple t;
  t.control = ControlImage{LabelImage(size, size, kBackgroundId), st.legend};
  t.target = RgbImage(size, size, st.background());
  const int x0 = static_cast<int>(rng.uniform_int(0, size / 2));
  for (int y = 0; y < size; ++y)
    for (int x = x0; x < x0 + size / 2; ++x) {
      t.control.labels.at(x, y) = id(Cls::kBuilding);
      t.target.at(x, y) = st.color(id(Cls::kBuilding));
    }
  t.prompt = st.prompt;
  t.style = StyleId::kModern;
  return t;
}

template <typename T>
ModelInput<T> random_input(const Arch& a, int n, int size, bool control, Rng& rng) {
  ModelInput<T> in;
  in.x.reset(n, 3, size, size);
  for (auto& v : in.x.data) v = static_cast<T>(rng.normal());
  for (int i = 0; i < n; ++i) {
    in.t.push_back(static_cast<int>(rng.uniform_int(1, kDefaultT)));
    in.style.push_back(static_cast<int>(rng.uniform_int(0, kNumStyles - 1)));
  }
  if (control) {
    nn::Tensor<T> c(n, a.num_classes, size, size);
    for (int i = 0; i < n; ++i) {
      LabelImage labels(size, size);
      for (auto& l : labels.pixels()) l = static_cast<ClassId>(rng.uniform_int(0, kNumClasses - 1));
      encode_control(labels, a.num_classes, c.sample(i));
    }
    in.control = std::move(c);
  }
  return in;
}

}  // namespace

TEST_CASE("linear schedule values") {
  const auto s = default_schedule();
  CHECK(s.T == 200);
  CHECK(s.beta(1) == doctest::Approx(1e-4));
  CHECK(s.beta(200) == doctest::Approx(0.02));
  CHECK(s.beta(100) - s.beta(99) == doctest::Approx((0.02 - 1e-4) / 199));
  CHECK(s.alpha_bar(1) == doctest::Approx(1 - 1e-4));
  CHECK(s.alpha_bar(2) == doctest::Approx((1 - 1e-4) * (1 - s.beta(2))));
  double prod = 1;
  for (int t = 1; t <= 200; ++t) prod *= 1 - s.beta(t);
  CHECK(s.alpha_bar(200) == doctest::Approx(prod).epsilon(1e-12));
  for (int t = 2; t <= 200; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  CHECK_THROWS_AS(make_schedule(1, 1e-4, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.03, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 1e-4, 1.0), ConfigError);
}

TEST_CASE("forward noise algebra") {
  const auto s = default_schedule();
  const std::vector<double> x0{0.5, -1, 0.25}, zero(3, 0.0), eps{1, 2, -3};
  std::vector<double> out(3);
  forward_noise<double>(x0, 50, zero, s, out);
  for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(std::sqrt(s.alpha_bar(50)) * x0[i]));
  forward_noise<double>(zero, 50, eps, s, out);
  for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(std::sqrt(1 - s.alpha_bar(50)) * eps[i]));
  forward_noise<double>(x0, 1.0, eps, out);
  CHECK(out == x0);
  CHECK_THROWS_AS(forward_noise<double>(x0, 0, eps, s, out), DataError);
  CHECK_THROWS_AS(forward_noise<double>(x0, 201, eps, s, out), DataError);
  std::vector<double> short_out(2);
  CHECK_THROWS_AS(forward_noise<double>(x0, 3, eps, s, short_out), DataError);
}

TEST_CASE("forward noise variance matches 1 - alpha_bar") {
  const auto s = default_schedule();
  Rng rng(5);
  constexpr int kN = 100000;
  std::vector<double> x0(kN, 0.3), eps(kN), out(kN);
  for (int t : {1, 100, 200}) {
    for (auto& e : eps) e = rng.normal();
    forward_noise<double>(x0, t, eps, s, out);
    double mean = 0;
    for (double v : out) mean += v;
    mean /= kN;
    double var = 0;
    for (double v : out) var += (v - mean) * (v - mean);
    var /= kN - 1;
    CHECK(var == doctest::Approx(1 - s.alpha_bar(t)).epsilon(0.02));
    CHECK(mean == doctest::Approx(0.3 * std::sqrt(s.alpha_bar(t))).epsilon(0.02 + 0.01 / std::sqrt(s.alpha_bar(t))));
  }
}

TEST_CASE("fresh model ignores the control") {
  const auto a = tiny_arch();
  const DiffusionModel<float> m(a, 9);
  for (const auto& p : m.params())
    if (p.group == nn::ParamGroup::kZeroConv)
      for (float v : p.value) CHECK(v == 0.0f);
  Rng rng(1);
  auto in = random_input<float>(a, 3, 8, true, rng);
  const auto with = m.predict_noise(in);
  in.control.reset();
  const auto without = m.predict_noise(in);
  CHECK(with.data == without.data);
}

TEST_CASE("control branch copy and double cast") {
  DiffusionModel<float> m(tiny_arch(), 4);
  m.copy_base_encoder_to_control();
  const auto& p = m.params();
  REQUIRE(p.find("ctrl.e0.conv.weight") >= 0);
  REQUIRE(p.find("base.mid1.conv.bias") >= 0);
  CHECK(p[p.find("ctrl.e0.conv.weight")].value == p[p.find("base.e0.conv.weight")].value);
  CHECK(p[p.find("ctrl.mid1.conv.bias")].value == p[p.find("base.mid1.conv.bias")].value);
  const auto d = m.cast<double>();
  CHECK(d.params()[3].value[2] == static_cast<double>(p[3].value[2]));
}

TEST_CASE("group masks") {
  using G = nn::ParamGroup;
  const auto b = base_pretrain_groups();
  CHECK(has(b, G::kBaseEncoder));
  CHECK(has(b, G::kBaseDecoder));
  CHECK(has(b, G::kBaseEmbedding));
  CHECK_FALSE(has(b, G::kZeroConv));
  const auto locked = control_train_groups(true);
  CHECK_FALSE(has(locked, G::kBaseDecoder));
  CHECK_FALSE(has(locked, G::kBaseEncoder));
  CHECK(has(locked, G::kControlBranch));
  CHECK(has(locked, G::kZeroConv));
  CHECK(has(locked, G::kCondEncoder));
  CHECK(has(control_train_groups(false), G::kBaseDecoder));
  CHECK_FALSE(has(control_train_groups(false), G::kBaseEncoder));
}

TEST_CASE("backward matches finite differences in double precision") {
  const auto a = tiny_arch();
  DiffusionModel<double> m(a, 11);
  Rng rng(12);
  // give the couplings non-zero weights so every path carries gradient
  for (auto& p : m.params())
    if (p.group == nn::ParamGroup::kZeroConv)
      for (auto& v : p.value) v = 0.3 * rng.normal();
  const auto in = random_input<double>(a, 2, 8, true, rng);
  nn::Tensor<double> r(2, 3, 8, 8);
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

  int checked = 0;
  for (int trial = 0; checked < 20 && trial < 1000; ++trial) {
    const auto pi = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m.params().size()) - 1));
    auto& vals = m.params()[pi].value;
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vals.size()) - 1));
    const double analytic = grads.g[pi][j];
    const double old = vals[j];
    const double h = 1e-3;
    vals[j] = old + h;
    const double lp = loss();
    vals[j] = old - h;
    const double lm = loss();
    vals[j] = old;
    const double numeric = (lp - lm) / (2 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    CHECK_MESSAGE(std::abs(analytic - numeric) / denom <= 1e-2, m.params()[pi].name, "[", j, "]");
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("frozen groups get no gradient and stay bit-identical") {
  const auto a = tiny_arch();
  DiffusionModel<float> m(a, 2);
  m.copy_base_encoder_to_control();
  const auto before = m.params();
  std::vector<DatasetTriple> data{tiny_triple(1), tiny_triple(2), tiny_triple(3)};
  std::vector<const DatasetTriple*> batch{&data[0], &data[1], &data[2]};
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.sd_locked = true;
  {
    Trainer<float> tr(m, default_schedule(), cfg, Phase::kControl);
    for (int i = 0; i < 5; ++i) tr.step(batch);
    CHECK(tr.steps_done() == 5);
  }
  bool zero_changed = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const auto grp = before[i].group;
    const bool frozen = grp == nn::ParamGroup::kBaseEncoder || grp == nn::ParamGroup::kBaseEmbedding ||
                        grp == nn::ParamGroup::kBaseDecoder;
    if (frozen) CHECK_MESSAGE(m.params()[i].value == before[i].value, before[i].name);
    if (grp == nn::ParamGroup::kZeroConv) zero_changed |= m.params()[i].value != before[i].value;
  }
  CHECK(zero_changed);

  cfg.sd_locked = false;
  const auto mid = m.params();
  {
    Trainer<float> tr(m, default_schedule(), cfg, Phase::kControl);
    for (int i = 0; i < 3; ++i) tr.step(batch);
  }
  bool decoder_changed = false;
  for (std::size_t i = 0; i < mid.size(); ++i) {
    if (mid[i].group == nn::ParamGroup::kBaseDecoder) decoder_changed |= m.params()[i].value != mid[i].value;
    if (mid[i].group == nn::ParamGroup::kBaseEncoder) CHECK(m.params()[i].value == mid[i].value);
  }
  CHECK(decoder_changed);
}

TEST_CASE("training reduces the loss on a fixed batch") {
  DiffusionModel<float> m(tiny_arch(), 3);
  std::vector<DatasetTriple> data{tiny_triple(4), tiny_triple(5)};
  std::vector<const DatasetTriple*> batch{&data[0], &data[1]};
  TrainingConfig cfg;
  cfg.learning_rate = 3e-3;
  Trainer<float> tr(m, default_schedule(), cfg, Phase::kBase);
  Rng rng(77);
  const auto nb = make_noised_batch<float>(batch, default_schedule(), rng, false, kNumClasses);
  const double l0 = noise_loss(m, nb);
  for (int i = 0; i < 150; ++i) tr.step(batch);
  CHECK(noise_loss(m, nb) < l0);
  CHECK_THROWS_AS(make_noised_batch<float>({}, default_schedule(), rng, false, kNumClasses), DataError);
}

TEST_CASE("training config validation and JSON") {
  TrainingConfig c;
  c.learning_rate = 2e-6;
  c.sd_locked = false;
  const auto back = config_from_json(config_to_json(c));
  CHECK(back.learning_rate == c.learning_rate);
  CHECK_FALSE(back.sd_locked);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  TrainingConfig d;
  d.learning_rate = 0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("sampling timesteps") {
  const auto all = sampling_timesteps(200, 500);
  CHECK(all.size() == 200);
  CHECK(all.front() == 200);
  CHECK(all.back() == 1);
  const auto ts = sampling_timesteps(200, 50);
  CHECK(ts.size() == 50);
  CHECK(ts.front() == 200);
  CHECK(ts.back() == 1);
  for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] < ts[i - 1]);
}

TEST_CASE("sampling is deterministic and independent of the batch") {
  const DiffusionModel<float> m(tiny_arch(), 6);
  const auto s = default_schedule();
  const auto t1 = tiny_triple(1), t2 = tiny_triple(2);
  const auto a = sample(m, t1.control, StyleId::kModern, 42, s, 10);
  CHECK(a == sample(m, t1.control, StyleId::kModern, 42, s, 10));
  CHECK(a != sample(m, t1.control, StyleId::kModern, 43, s, 10));
  const std::vector<SampleRequest> reqs{{&t2.control, StyleId::kVintage, 7}, {&t1.control, StyleId::kModern, 42}};
  const auto batch = sample_batch(m, s, std::span<const SampleRequest>(reqs), 10, 8, 8);
  REQUIRE(batch.size() == 2);
  CHECK(batch[1] == a);
  CHECK(batch[0] == sample(m, t2.control, StyleId::kVintage, 7, s, 10));
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mapgen_test_ckpt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.ckpt";
  DiffusionModel<float> m(tiny_arch(), 8);
  Rng rng(3);
  for (auto& p : m.params())
    for (auto& v : p.value) v = static_cast<float>(rng.normal());
  const auto s = make_schedule(100, 2e-4, 0.03);
  save_checkpoint(path, m, s, {{"phase", "control"}, {"step", 12}});
  const auto back = load_checkpoint<float>(path);
  CHECK(back.model->arch() == m.arch());
  CHECK(back.schedule.T == 100);
  CHECK(back.schedule.beta_max == 0.03);
  CHECK(back.info["step"] == 12);
  for (std::size_t i = 0; i < m.params().size(); ++i) CHECK(back.model->params()[i].value == m.params()[i].value);

  CHECK_THROWS_AS(load_checkpoint<float>(dir / "missing.ckpt"), IoError);
  {
    std::ofstream f(dir / "bad.ckpt", std::ios::binary);
    f << "NOPE0000000000000000";
  }
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "bad.ckpt"), DataError);
  // truncated tensor data
  const auto bytes = png::read_file(path);
  png::write_file(dir / "short.ckpt", std::span<const std::uint8_t>(bytes).first(bytes.size() - 16));
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "short.ckpt"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training logs") {
  const auto dir = std::filesystem::temp_directory_path() / "mapgen_test_logs";
  std::filesystem::remove_all(dir);
  const DiffusionModel<float> m(tiny_arch(), 6);
  const std::vector<DatasetTriple> logs{tiny_triple(1), tiny_triple(2)};
  CHECK(training_log_path(dir, 250).filename() == "log_step000250.png");
  CHECK_THROWS_AS(emit_training_log(m, default_schedule(), logs, 30, 20, dir, true, 5), ConfigError);
  const auto r = emit_training_log(m, default_schedule(), logs, 40, 20, dir, true, 5);
  CHECK(std::filesystem::exists(r.image));
  CHECK(r.samples.size() == 2);
  const auto grid = png::read_rgb(r.image);
  CHECK(grid.height() >= 2 * 8);
  CHECK(grid.width() >= 3 * 8);
  CHECK(r.miou == doctest::Approx(mean_control_miou(r.samples, logs)));
  CHECK(r.miou >= 0.0);
  CHECK(r.miou <= 1.0);

  DiffusionModel<float> mm(tiny_arch(), 6);
  TrainingConfig cfg;
  cfg.batch_size = 2;
  Trainer<float> tr(mm, default_schedule(), cfg, Phase::kBase);
  std::ostringstream metrics;
  TrainLoopOptions o;
  o.steps = 4;
  o.log_every = 2;
  o.log_dir = dir;
  o.log_triples = logs;
  o.sample_steps = 3;
  o.metrics = &metrics;
  o.step_offset = 10;
  const auto sum = train_loop(tr, logs, o);
  REQUIRE(sum.log_miou.size() == 3);
  CHECK(sum.log_miou[0].first == 10);
  CHECK(sum.log_miou[2].first == 14);
  CHECK(std::filesystem::exists(training_log_path(dir, 12)));
  std::istringstream lines(metrics.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    CHECK(j.contains("loss"));
    CHECK(j.contains("val_miou"));
    ++n;
  }
  CHECK(n == 3);
  std::filesystem::remove_all(dir);
}
