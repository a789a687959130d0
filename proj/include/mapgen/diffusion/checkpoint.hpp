#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/schedule.hpp"

namespace mapgen::diffusion {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: "MGDM", u32 version, u64 header length, JSON header, then every tensor
/// listed in header["tensors"] as little-endian float32 in order.
/// The header holds "arch", "schedule" {T, beta_min, beta_max} and a free-form "info" object
/// (training config, phase, step count).
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const DiffusionModel<T>& model, const NoiseSchedule& schedule,
                     const nlohmann::json& info = nlohmann::json::object());

template <typename T>
struct LoadedCheckpoint {
  std::unique_ptr<DiffusionModel<T>> model;
  NoiseSchedule schedule;
  nlohmann::json info;
};

/// Throws IoError when unreadable, DataError when malformed or when tensor names/shapes do not
/// match the architecture in the header.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace mapgen::diffusion
