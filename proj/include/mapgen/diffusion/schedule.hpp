#pragma once

#include <span>
#include <vector>

namespace mapgen::diffusion {

/// Linear-beta forward process. Step indices are 1-based: beta(t), alpha_bar(t) for t in [1, T].
struct NoiseSchedule {
  int T = 0;
  double beta_min = 0.0;
  double beta_max = 0.0;
  std::vector<double> betas;       // betas[t - 1]
  std::vector<double> alpha_bars;  // cumulative products of (1 - beta)

  double beta(int t) const { return betas.at(static_cast<std::size_t>(t - 1)); }
  double alpha_bar(int t) const { return alpha_bars.at(static_cast<std::size_t>(t - 1)); }
};

/// Throws ConfigError unless 0 < beta_min <= beta_max < 1 and T >= 2.
NoiseSchedule make_schedule(int T, double beta_min, double beta_max);

inline constexpr int kDefaultT = 200;
inline constexpr double kDefaultBetaMin = 1e-4;
inline constexpr double kDefaultBetaMax = 0.02;
inline NoiseSchedule default_schedule() { return make_schedule(kDefaultT, kDefaultBetaMin, kDefaultBetaMax); }

/// x_t = sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) eps, with alpha_bar given explicitly.
template <typename T>
void forward_noise(std::span<const T> x0, double alpha_bar, std::span<const T> eps, std::span<T> out);

/// Same, with alpha_bar = schedule.alpha_bar(t). Throws DataError for t outside [1, T] or
/// mismatched lengths.
template <typename T>
void forward_noise(std::span<const T> x0, int t, std::span<const T> eps, const NoiseSchedule& schedule,
                   std::span<T> out);

}  // namespace mapgen::diffusion
