#include "service_check.hpp"

#include <httplib.h>

#include <cstdio>
#include <regex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "mapgen/control_raster.hpp"
#include "mapgen/diffusion/checkpoint.hpp"
#include "mapgen/png_io.hpp"
#include "mapgen/rng.hpp"
#include "mapgen/service/engine.hpp"
#include "mapgen/service/server.hpp"
#include "mapgen/service/zip.hpp"
#include "mapgen/tiler.hpp"
#include "mapgen/toy_corpus.hpp"

using namespace mapgen;
namespace fs = std::filesystem;

namespace acceptance {

namespace {

std::string as_string(const png::Bytes& b) { return {b.begin(), b.end()}; }
std::vector<std::uint8_t> as_bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::size_t dir_entries(const fs::path& d) {
  if (!fs::exists(d)) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(d), fs::directory_iterator{}));
}

}  // namespace

std::pair<bool, std::string> service_contract(const fs::path& dir) {
  const auto root = dir / "service";
  fs::remove_all(root);
  fs::create_directories(root);

  // untrained weights with live couplings; the contract does not depend on sample quality
  diffusion::DiffusionModel<float> model(diffusion::Arch{}, 21);
  Rng rng(22);
  for (auto& p : model.params())
    if (p.group == nn::ParamGroup::kZeroConv)
      for (auto& v : p.value) v = static_cast<float>(0.05 * rng.normal());
  const auto ckpt = root / "service_model.ckpt";
  diffusion::save_checkpoint(ckpt, model, diffusion::default_schedule());

  service::ServiceConfig cfg;
  cfg.checkpoint = ckpt;
  cfg.jobs_dir = root / "jobs";
  cfg.tile_size = 32;
  cfg.workers = 2;
  service::Engine engine(cfg);
  engine.load_checkpoint(cfg.checkpoint);
  service::Server server(engine);
  const int port = server.bind("127.0.0.1", 0);
  if (port <= 0) return {false, "could not bind a port"};
  std::thread listener([&] { server.listen(); });
  server.wait_until_ready();
  struct Stop {
    service::Server& s;
    std::thread& t;
    ~Stop() {
      s.stop();
      t.join();
    }
  } stop{server, listener};

  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(300, 0);

  const auto& st = style(StyleId::kModern);
  auto density = default_density(64, 64);
  density.text_boxes = 0;
  const auto scene = generate_toy_world(404, 64, 64, density, 16);
  const auto sheet = rasterize(scene, st.legend, 64, 64);
  const auto tiles = tile(sheet, 32, "acc");

  std::string detail;
  bool ok = true;
  auto fail = [&](const std::string& why) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + why;
  };

  // same seed, same checkpoint: identical PNG bytes
  const auto control = as_string(png::encode_rgb(control_to_rgb(tiles[0].second)));
  auto single = [&](const std::string& seed) {
    return cli.Post("/generate", httplib::MultipartFormDataItems{{"control", control, "c.png", "image/png"},
                                                                 {"style", "modern", "", ""},
                                                                 {"seed", seed, "", ""},
                                                                 {"postproc", "true", "", ""}});
  };
  auto a = single("1234");
  auto b = single("1234");
  auto c = single("1235");
  if (!a || !b || !c || a->status != 200 || b->status != 200 || c->status != 200) {
    fail("single generation did not return 200");
  } else {
    if (a->body != b->body) fail("same seed gave different bytes");
    if (a->body == c->body) fail("different seeds gave identical bytes");
    const auto img = png::decode_rgb(as_bytes(a->body));
    if (img.width() != 32 || img.height() != 32) fail("tile has the wrong size");
  }
  const bool deterministic = ok;

  // one off-palette color: 422 naming it, and nothing enqueued or written
  auto rgb = control_to_rgb(tiles[1].second);
  rgb.at(5, 7) = Rgb{17, 34, 51};
  const auto jobs_before = engine.job_count();
  const auto files_before = dir_entries(cfg.jobs_dir);
  auto bad = cli.Post("/jobs", httplib::MultipartFormDataItems{
                                   {"control", control, "r0_c0.png", "image/png"},
                                   {"control", as_string(png::encode_rgb(rgb)), "r0_c1.png", "image/png"},
                                   {"style", "modern", "", ""}});
  bool rejected = false;
  if (!bad) {
    fail("off-palette request got no response");
  } else {
    const auto body = nlohmann::json::parse(bad->body, nullptr, false);
    bool listed = false;
    if (body.is_object() && body.contains("colors"))
      for (const auto& col : body["colors"]) listed |= col.value("hex", "") == "#112233";
    rejected = bad->status == 422 && listed && engine.job_count() == jobs_before &&
               dir_entries(cfg.jobs_dir) == files_before;
    if (!rejected) fail("off-palette control: status " + std::to_string(bad->status) + ", body " + bad->body);
  }

  // batch of four: archive holds r{row}_c{col}.png tiles whose stitch equals the server's sheet
  httplib::MultipartFormDataItems batch{{"style", "modern", "", ""}, {"seed", "77", "", ""}, {"mode", "multiple", "", ""}};
  for (const auto& [idx, ctrl] : tiles)
    batch.push_back({"control", as_string(png::encode_rgb(control_to_rgb(ctrl))),
                     "r" + std::to_string(idx.row) + "_c" + std::to_string(idx.col) + ".png", "image/png"});
  bool batch_ok = false;
  auto sub = cli.Post("/generate", batch);
  if (!sub || sub->status != 202) {
    fail("batch submit did not return 202");
  } else {
    const std::string id = nlohmann::json::parse(sub->body)["job_id"];
    nlohmann::json status;
    int last = 0;
    bool monotone = true;
    for (int i = 0; i < 6000; ++i) {
      auto r = cli.Get("/jobs/" + id);
      if (!r) break;
      status = nlohmann::json::parse(r->body);
      const int done = status["progress"]["done"];
      monotone &= done >= last && done <= static_cast<int>(status["progress"]["total"]);
      last = done;
      if (status["state"] == "done" || status["state"] == "failed") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    if (status.value("state", "") != "done") {
      fail("batch job ended as " + status.dump());
    } else {
      auto dl = cli.Get("/jobs/" + id + "/download");
      auto server_sheet = cli.Get("/jobs/" + id + "/stitched");
      if (!dl || dl->status != 200 || !server_sheet || server_sheet->status != 200) {
        fail("download or stitched endpoint failed");
      } else {
        png::write_file(root / "batch.zip", as_bytes(dl->body));
        const auto entries = zip::read(as_bytes(dl->body));
        static const std::regex kName(R"(r(\d+)_c(\d+)\.png)");
        Tiles<RgbImage> archived;
        std::set<std::string> pngs;
        for (const auto& e : entries) {
          std::smatch m;
          if (std::regex_match(e.name, m, kName)) {
            pngs.insert(e.name);
            archived.emplace_back(TileIndex{"acc", std::stoi(m[1]), std::stoi(m[2]), 32, 64, 64, 64, 64},
                                  png::decode_rgb(e.data));
          } else if (e.name.ends_with(".png")) {
            pngs.insert(e.name);
          }
        }
        const auto expected = std::set<std::string>{"r0_c0.png", "r0_c1.png", "r1_c0.png", "r1_c1.png"};
        const bool names_ok = pngs == expected;
        const bool stitch_ok =
            names_ok && stitch(archived) == png::decode_rgb(as_bytes(server_sheet->body));
        batch_ok = names_ok && stitch_ok && monotone;
        if (!names_ok) fail("archive PNGs differ from the four r{row}_c{col}.png tiles");
        if (names_ok && !stitch_ok) fail("stitched archive differs from the server sheet");
        if (!monotone) fail("progress went backwards");
      }
    }
  }

  char buf[256];
  std::snprintf(buf, sizeof buf, "same seed same bytes: %s; off-palette rejected with color listed and no job: %s; "
                "4-tile archive stitches to server sheet: %s",
                deterministic ? "yes" : "no", rejected ? "yes" : "no", batch_ok ? "yes" : "no");
  return {ok, std::string(buf) + (detail.empty() ? "" : " (" + detail + ")")};
}

}  // namespace acceptance
