#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mapgen/errors.hpp"

namespace mapgen::nn {

/// Parameter groups that can be frozen independently.
enum class ParamGroup : int {
  kBaseEncoder = 0,   // locked base: input conv, encoder levels, bottleneck
  kBaseEmbedding,     // timestep MLP + style table
  kBaseDecoder,       // decoder levels + output conv (unlocked when sd_locked = false)
  kControlBranch,     // trainable copy of the base encoder + bottleneck
  kZeroConv,          // 1x1 couplings, zero-initialized
  kCondEncoder,       // four-layer control-image encoder
};

inline constexpr int kNumParamGroups = 6;

std::string_view group_name(ParamGroup g);
ParamGroup group_from_name(std::string_view name);

template <typename T>
struct Parameter {
  std::string name;
  ParamGroup group;
  std::vector<int> shape;
  std::vector<T> value;
};

template <typename T>
class ParameterSet {
 public:
  int add(std::string name, ParamGroup group, std::vector<int> shape) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    params_.push_back(Parameter<T>{std::move(name), group, std::move(shape), std::vector<T>(count, T(0))});
    return static_cast<int>(params_.size()) - 1;
  }

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  int find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::vector<Parameter<T>> params_;
};

/// Gradient buffers mirroring a ParameterSet.
template <typename T>
struct Gradients {
  std::vector<std::vector<T>> g;

  explicit Gradients(const ParameterSet<T>& params) {
    g.reserve(params.size());
    for (const auto& p : params) g.emplace_back(p.value.size(), T(0));
  }
  void zero() {
    for (auto& v : g) std::fill(v.begin(), v.end(), T(0));
  }
};

}  // namespace mapgen::nn
