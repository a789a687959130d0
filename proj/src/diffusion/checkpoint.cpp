#include "mapgen/diffusion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mapgen/errors.hpp"

namespace mapgen::diffusion {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'M', 'G', 'D', 'M'};
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const DiffusionModel<T>& model, const NoiseSchedule& schedule,
                     const nlohmann::json& info) {
  nlohmann::json header;
  header["arch"] = arch_to_json(model.arch());
  header["schedule"] = {{"T", schedule.T}, {"beta_min", schedule.beta_min}, {"beta_max", schedule.beta_max}};
  header["info"] = info;
  auto& tensors = header["tensors"] = nlohmann::json::array();
  for (const auto& p : model.params())
    tensors.push_back({{"name", p.name}, {"group", std::string(nn::group_name(p.group))}, {"shape", p.shape}});
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + tmp);
    out.write(kMagic, 4);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<float> buf;
    for (const auto& p : model.params()) {
      buf.assign(p.value.begin(), p.value.end());
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw IoError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError(path.string() + " is not a checkpoint");
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  if (len > (1u << 26)) throw DataError("checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  LoadedCheckpoint<T> out;
  try {
    const auto& s = header.at("schedule");
    out.schedule = make_schedule(s.at("T").get<int>(), s.at("beta_min").get<double>(), s.at("beta_max").get<double>());
    out.model = std::make_unique<DiffusionModel<T>>(arch_from_json(header.at("arch")), 0);
    out.info = header.value("info", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }

  auto& params = out.model->params();
  std::vector<bool> seen(params.size(), false);
  std::vector<float> buf;
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<std::vector<int>>();
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    buf.resize(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint data at tensor " + name);
    const int idx = params.find(name);
    if (idx < 0) throw DataError("checkpoint tensor " + name + " not in architecture");
    if (params[idx].shape != shape) throw DataError("checkpoint tensor " + name + " has the wrong shape");
    std::copy(buf.begin(), buf.end(), params[idx].value.begin());
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!seen[i]) throw DataError("checkpoint lacks tensor " + params[i].name);
  return out;
}

template void save_checkpoint<float>(const std::filesystem::path&, const DiffusionModel<float>&,
                                     const NoiseSchedule&, const nlohmann::json&);
template void save_checkpoint<double>(const std::filesystem::path&, const DiffusionModel<double>&,
                                      const NoiseSchedule&, const nlohmann::json&);
template LoadedCheckpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template LoadedCheckpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace mapgen::diffusion
