#include "mapgen/nn/params.hpp"

#include <array>

namespace mapgen::nn {

namespace {
constexpr std::array<std::string_view, kNumParamGroups> kGroupNames = {
    "base_encoder", "base_embedding", "base_decoder", "control_branch", "zero_conv", "cond_encoder"};
}

std::string_view group_name(ParamGroup g) { return kGroupNames.at(static_cast<std::size_t>(g)); }

ParamGroup group_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == name) return static_cast<ParamGroup>(i);
  throw DataError("unknown parameter group '" + std::string(name) + "'");
}

}  // namespace mapgen::nn
