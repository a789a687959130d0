#include "mapgen/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "mapgen/errors.hpp"
#include "mapgen/rng.hpp"

namespace mapgen::diffusion {

std::vector<int> sampling_timesteps(int T, int steps) {
  if (steps < 1) throw ConfigError("sampling needs at least one step");
  std::vector<int> ts;
  if (steps >= T || steps == 1) {
    if (steps == 1) return {T};
    for (int t = T; t >= 1; --t) ts.push_back(t);
    return ts;
  }
  for (int i = 0; i < steps; ++i) {
    const double f = static_cast<double>(i) / (steps - 1);
    const int t = static_cast<int>(std::lround(T - f * (T - 1)));
    if (ts.empty() || ts.back() != t) ts.push_back(t);
  }
  return ts;
}

template <typename T>
std::vector<RgbImage> sample_batch(const DiffusionModel<T>& model, const NoiseSchedule& schedule,
                                   std::span<const SampleRequest> requests, int steps, int width, int height) {
  if (requests.empty()) return {};
  const int n = static_cast<int>(requests.size());
  const bool any_control = requests.front().control != nullptr;
  for (const auto& r : requests) {
    if ((r.control != nullptr) != any_control) throw DataError("sample batch mixes controlled and free requests");
    if (r.control && (r.control->width() != width || r.control->height() != height))
      throw DataError("control size does not match the requested tile size");
  }
  const int K = model.arch().num_classes;
  ModelInput<T> in;
  in.x.reset(n, model.arch().image_channels, height, width);
  in.style.resize(n);
  in.t.resize(n);
  if (any_control) in.control.emplace(n, K, height, width);
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (int i = 0; i < n; ++i) {
    rngs.emplace_back(mix_seed(requests[i].seed, 0x5a3b1e));
    in.style[i] = static_cast<int>(requests[i].style);
    T* x = in.x.sample(i);
    for (std::size_t k = 0; k < in.x.sample_size(); ++k) x[k] = static_cast<T>(rngs[i].normal());
    if (any_control) encode_control(requests[i].control->labels, K, in.control->sample(i));
  }

  const auto ts = sampling_timesteps(schedule.T, steps);
  ForwardCache<T> cache;
  const std::size_t per = in.x.sample_size();
  for (std::size_t s = 0; s < ts.size(); ++s) {
    const int t = ts[s];
    const int prev = s + 1 < ts.size() ? ts[s + 1] : 0;
    std::fill(in.t.begin(), in.t.end(), t);
    model.forward(in, cache);
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = prev > 0 ? schedule.alpha_bar(prev) : 1.0;
    const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
    const double alpha = ab / ab_prev;
    const double beta = 1.0 - alpha;
    const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
    const double ct = std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab);
    const double sigma = prev > 0 ? std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab)) : 0.0;
    for (int i = 0; i < n; ++i) {
      T* x = in.x.sample(i);
      const T* e = cache.out.sample(i);
      for (std::size_t k = 0; k < per; ++k) {
        const double x0 = std::clamp((x[k] - s1a * e[k]) / sa, -1.0, 1.0);
        if (prev == 0) {
          x[k] = static_cast<T>(x0);
        } else {
          x[k] = static_cast<T>(c0 * x0 + ct * x[k] + sigma * rngs[i].normal());
        }
      }
    }
  }
  std::vector<RgbImage> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(decode_image(in.x.sample(i), width, height));
  return out;
}

template <typename T>
RgbImage sample(const DiffusionModel<T>& model, const ControlImage* control, StyleId style, std::uint64_t seed,
                const NoiseSchedule& schedule, int steps, int width, int height) {
  const SampleRequest r{control, style, seed};
  return std::move(sample_batch(model, schedule, std::span<const SampleRequest>(&r, 1), steps, width, height).front());
}

template std::vector<RgbImage> sample_batch<float>(const DiffusionModel<float>&, const NoiseSchedule&,
                                                   std::span<const SampleRequest>, int, int, int);
template std::vector<RgbImage> sample_batch<double>(const DiffusionModel<double>&, const NoiseSchedule&,
                                                    std::span<const SampleRequest>, int, int, int);
template RgbImage sample<float>(const DiffusionModel<float>&, const ControlImage*, StyleId, std::uint64_t,
                                const NoiseSchedule&, int, int, int);
template RgbImage sample<double>(const DiffusionModel<double>&, const ControlImage*, StyleId, std::uint64_t,
                                 const NoiseSchedule&, int, int, int);

}  // namespace mapgen::diffusion
