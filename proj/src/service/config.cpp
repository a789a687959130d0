#include "mapgen/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "mapgen/errors.hpp"

namespace mapgen::service {

namespace {

StyleId style_from_key(const std::string& key) {
  const StyleSpec* s = find_style(key);
  if (!s) throw ConfigError("unknown style '" + key + "'");
  return s->id;
}

}  // namespace

SeedPolicy ServiceConfig::policy_for(StyleId style_id) const {
  if (auto it = seed_policy.find(style_id); it != seed_policy.end()) return it->second;
  SeedPolicy p;
  if (style_id == StyleId::kVintage) p.mode = SeedPolicy::Mode::kSelect;
  return p;
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (tile_size < 4 || tile_size % 4 != 0) throw ConfigError("tile_size must be a positive multiple of 4");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (sample_steps < 1) throw ConfigError("sample_steps must be >= 1");
  if (styles.empty()) throw ConfigError("at least one style must be served");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  for (const auto& [id, p] : seed_policy)
    if (p.k < 1) throw ConfigError("seed policy k must be >= 1 for " + style(id).key);
}

ServiceConfig config_from_json(const nlohmann::json& j) {
  ServiceConfig c;
  if (!j.is_object()) throw ConfigError("service config must be a JSON object");
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  if (j.contains("checkpoint")) c.checkpoint = j["checkpoint"].get<std::string>();
  c.tile_size = j.value("tile_size", c.tile_size);
  c.workers = j.value("workers", c.workers);
  c.sample_steps = j.value("sample_steps", c.sample_steps);
  if (j.contains("jobs_dir")) c.jobs_dir = j["jobs_dir"].get<std::string>();
  if (j.contains("styles")) {
    c.styles.clear();
    for (const auto& k : j["styles"]) c.styles.push_back(style_from_key(k.get<std::string>()));
  }
  if (j.contains("seed_policy")) {
    for (const auto& [key, v] : j["seed_policy"].items()) {
      SeedPolicy p;
      const auto mode = v.value("mode", std::string("fixed"));
      if (mode == "fixed")
        p.mode = SeedPolicy::Mode::kFixed;
      else if (mode == "select")
        p.mode = SeedPolicy::Mode::kSelect;
      else
        throw ConfigError("seed policy mode must be fixed or select, got '" + mode + "'");
      p.seed = v.value("seed", std::uint64_t{0});
      p.k = v.value("k", 6);
      c.seed_policy[style_from_key(key)] = p;
    }
  }
  c.lambda = j.value("lambda", c.lambda);
  c.segmenter = j.value("segmenter", c.segmenter);
  c.postproc = j.value("postproc", c.postproc);
  c.validate();
  return c;
}

nlohmann::json config_to_json(const ServiceConfig& c) {
  nlohmann::json j;
  j["host"] = c.host;
  j["port"] = c.port;
  j["checkpoint"] = c.checkpoint.string();
  j["tile_size"] = c.tile_size;
  j["workers"] = c.workers;
  j["sample_steps"] = c.sample_steps;
  j["jobs_dir"] = c.jobs_dir.string();
  j["styles"] = nlohmann::json::array();
  for (StyleId s : c.styles) j["styles"].push_back(style(s).key);
  j["seed_policy"] = nlohmann::json::object();
  for (StyleId s : c.styles) {
    const auto p = c.policy_for(s);
    j["seed_policy"][style(s).key] = {
        {"mode", p.mode == SeedPolicy::Mode::kFixed ? "fixed" : "select"}, {"seed", p.seed}, {"k", p.k}};
  }
  j["lambda"] = c.lambda;
  j["segmenter"] = c.segmenter;
  j["postproc"] = c.postproc;
  return j;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open service config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("service config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_env_overrides(ServiceConfig& c) {
  if (const char* port = std::getenv("MAPGEN_PORT"); port && *port) {
    try {
      c.port = std::stoi(port);
    } catch (const std::exception&) {
      throw ConfigError(std::string("MAPGEN_PORT is not a number: ") + port);
    }
  }
  if (const char* ckpt = std::getenv("MAPGEN_CHECKPOINT"); ckpt && *ckpt) c.checkpoint = ckpt;
  c.validate();
}

}  // namespace mapgen::service
