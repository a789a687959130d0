#include "mapgen/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "mapgen/errors.hpp"

namespace mapgen::diffusion {

NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
  if (T < 2) throw ConfigError("schedule needs T >= 2, got " + std::to_string(T));
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw ConfigError("schedule needs 0 < beta_min <= beta_max < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.betas.resize(T);
  s.alpha_bars.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    s.betas[i] = beta_min + (beta_max - beta_min) * static_cast<double>(i) / static_cast<double>(T - 1);
    prod *= 1.0 - s.betas[i];
    s.alpha_bars[i] = prod;
  }
  return s;
}

template <typename T>
void forward_noise(std::span<const T> x0, double alpha_bar, std::span<const T> eps, std::span<T> out) {
  if (x0.size() != eps.size() || x0.size() != out.size()) throw DataError("forward_noise: shape mismatch");
  const T a = static_cast<T>(std::sqrt(alpha_bar));
  const T b = static_cast<T>(std::sqrt(1.0 - alpha_bar));
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
}

template <typename T>
void forward_noise(std::span<const T> x0, int t, std::span<const T> eps, const NoiseSchedule& schedule,
                   std::span<T> out) {
  if (t < 1 || t > schedule.T)
    throw DataError("forward_noise: t = " + std::to_string(t) + " outside [1, " + std::to_string(schedule.T) + "]");
  forward_noise(x0, schedule.alpha_bar(t), eps, out);
}

template void forward_noise<float>(std::span<const float>, double, std::span<const float>, std::span<float>);
template void forward_noise<double>(std::span<const double>, double, std::span<const double>, std::span<double>);
template void forward_noise<float>(std::span<const float>, int, std::span<const float>, const NoiseSchedule&,
                                   std::span<float>);
template void forward_noise<double>(std::span<const double>, int, std::span<const double>, const NoiseSchedule&,
                                    std::span<double>);

}  // namespace mapgen::diffusion
