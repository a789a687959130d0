#include "mapgen/service/server.hpp"

#include <httplib.h>

#include "mapgen/png_io.hpp"

namespace mapgen::service {

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const ServiceError& e) { send_json(res, e.status(), e.to_json()); }

std::optional<std::string> field(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return std::nullopt;
}

std::optional<std::uint64_t> seed_field(const httplib::Request& req) {
  auto v = field(req, "seed");
  if (!v || v->empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return seed;
  } catch (const std::exception&) {
    throw ServiceError(400, "bad_field", "seed must be an unsigned integer, got '" + *v + "'");
  }
}

std::optional<bool> bool_field(const httplib::Request& req, const std::string& key) {
  auto v = field(req, key);
  if (!v || v->empty()) return std::nullopt;
  if (*v == "1" || *v == "true" || *v == "on" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "off" || *v == "no") return false;
  throw ServiceError(400, "bad_field", key + " must be a boolean, got '" + *v + "'");
}

std::string required_field(const httplib::Request& req, const std::string& key) {
  auto v = field(req, key);
  if (!v || v->empty()) throw ServiceError(400, "missing_field", "field '" + key + "' is required");
  return *v;
}

Upload to_upload(const httplib::MultipartFormData& f) {
  return {f.filename.empty() ? f.name : f.filename, std::vector<std::uint8_t>(f.content.begin(), f.content.end())};
}

JobRequest job_request(const httplib::Request& req) {
  JobRequest jr;
  jr.style = required_field(req, "style");
  jr.seed = seed_field(req);
  jr.postproc = bool_field(req, "postproc");
  jr.include_stitched = bool_field(req, "include_stitched").value_or(false);
  for (const auto& f : req.get_file_values("control")) jr.controls.push_back(to_upload(f));
  if (req.has_file("sheet")) jr.sheet = to_upload(req.get_file_value("sheet"));
  return jr;
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

struct Server::Impl {
  Engine& engine;
  httplib::Server http;

  explicit Impl(Engine& e) : engine(e) {
    http.set_payload_max_length(64u << 20);

    http.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, engine.health_json());
    }));

    http.Get("/styles", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, engine.styles_json());
    }));

    http.Post("/generate", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto mode = field(req, "mode").value_or("single");
      if (mode == "multiple") {
        submit(req, res);
        return;
      }
      if (mode != "single") throw ServiceError(400, "bad_field", "mode must be single or multiple, got '" + mode + "'");
      GenerateRequest gr;
      gr.style = required_field(req, "style");
      gr.seed = seed_field(req);
      gr.postproc = bool_field(req, "postproc");
      if (!req.has_file("control")) throw ServiceError(400, "missing_control", "file 'control' is required");
      const auto files = req.get_file_values("control");
      if (files.size() != 1)
        throw ServiceError(400, "bad_request", "single mode takes exactly one control; use mode=multiple for batches");
      gr.control = to_upload(files.front());
      auto out = engine.generate(gr);
      const auto bytes = png::encode_rgb(out.image);
      res.status = 200;
      res.set_header("X-Seed", std::to_string(out.seed));
      res.set_header("X-Seed-Source", out.seed_source);
      if (out.miou) res.set_header("X-Miou", std::to_string(*out.miou));
      res.set_header("X-Postprocessed", out.postprocessed ? "true" : "false");
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    }));

    http.Post("/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) { submit(req, res); }));

    http.Get(R"(/jobs/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, engine.job_status(req.matches[1]).to_json());
    }));

    http.Get(R"(/jobs/([A-Za-z0-9_-]+)/download)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               const auto bytes = engine.job_archive(id);
               res.status = 200;
               res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".zip\"");
               res.set_content(std::string(bytes.begin(), bytes.end()), "application/zip");
             }));

    http.Get(R"(/jobs/([A-Za-z0-9_-]+)/stitched)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto bytes = png::encode_rgb(engine.job_stitched(req.matches[1]));
               res.status = 200;
               res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
             }));

    http.Post("/reload", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::filesystem::path path = engine.config().checkpoint;
      if (!req.body.empty()) {
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
          throw ServiceError(400, "bad_request", std::string("reload body must be JSON: ") + e.what());
        }
        if (body.contains("checkpoint")) path = body["checkpoint"].get<std::string>();
      }
      if (path.empty()) throw ServiceError(400, "missing_field", "no checkpoint path configured or given");
      try {
        engine.load_checkpoint(path);
      } catch (const std::exception& e) {
        throw ServiceError(422, "bad_checkpoint", e.what());
      }
      send_json(res, 200, engine.health_json());
    }));

    http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Expose-Headers", "X-Seed, X-Seed-Source, X-Miou, X-Postprocessed"}});
  }

  void submit(const httplib::Request& req, httplib::Response& res) {
    const auto id = engine.submit_job(job_request(req));
    send_json(res, 202, engine.job_status(id).to_json());
  }
};

Server::Server(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}
Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::listen() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace mapgen::service
