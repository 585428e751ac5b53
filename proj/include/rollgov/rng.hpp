#pragma once

#include <cmath>
#include <cstdint>

#include "rollgov/types.hpp"

namespace rollgov {

/// SplitMix64 mixing function; the whole noise stream is counter-based so
/// any draw can be reproduced from (seed, step, channel) alone.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline constexpr const char* kRngAlgorithm = "splitmix64+box-muller";

namespace detail {

inline double uniform_open(uint64_t bits) {
  // (0, 1]: avoids log(0) in Box-Muller
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace detail

/// Standard normal draw addressed by (seed, step, channel) via Box-Muller.
inline double normal_draw(uint64_t seed, uint64_t step, uint64_t channel) {
  const uint64_t base = splitmix64(seed ^ splitmix64(step) ^ splitmix64(channel * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
  const double u1 = detail::uniform_open(splitmix64(base));
  const double u2 = detail::uniform_open(splitmix64(base + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Relative (multiplicative) estimation-error magnitudes per measured
/// state, with the correlation time of the error condition. tau = 0 gives
/// white per-step errors.
struct NoiseSpec {
  double sigma_v = 0.0;
  double sigma_r = 0.0;
  double sigma_p = 0.0;
  double sigma_phi = 0.0;
  double tau = 2.0; ///< estimation-error correlation time [s]

  bool any() const { return sigma_v > 0 || sigma_r > 0 || sigma_p > 0 || sigma_phi > 0; }

  void validate() const {
    if (sigma_v < 0 || sigma_r < 0 || sigma_p < 0 || sigma_phi < 0)
      throw std::invalid_argument("NoiseSpec: sigmas must be non-negative");
    if (tau < 0) throw std::invalid_argument("NoiseSpec: tau must be non-negative");
  }
};

/// Applies multiplicative Gaussian estimation error with the given
/// per-channel standard-normal factors. Channels map to (v, r, p, phi).
inline VehicleState apply_noise(const VehicleState& state, const NoiseSpec& noise,
                                const double xi[4]) {
  VehicleState s = state;
  if (noise.sigma_v > 0.0) s.v *= 1.0 + noise.sigma_v * xi[0];
  if (noise.sigma_r > 0.0) s.r *= 1.0 + noise.sigma_r * xi[1];
  if (noise.sigma_p > 0.0) s.p *= 1.0 + noise.sigma_p * xi[2];
  if (noise.sigma_phi > 0.0) s.phi *= 1.0 + noise.sigma_phi * xi[3];
  return s;
}

/// White per-step variant, addressed purely by (seed, step).
inline VehicleState inject_noise(const VehicleState& state, const NoiseSpec& noise, uint64_t seed,
                                 uint64_t step) {
  const double xi[4] = {normal_draw(seed, step, 0), normal_draw(seed, step, 1),
                        normal_draw(seed, step, 2), normal_draw(seed, step, 3)};
  return apply_noise(state, noise, xi);
}

/// Estimation-error condition: a unit-variance Ornstein-Uhlenbeck factor
/// per measured state, redrawn (advanced) every control step and fully
/// reproducible from the seed. tau = 0 degenerates to white noise.
class NoiseProcess {
public:
  NoiseProcess(const NoiseSpec& noise, uint64_t seed, double dt)
      : noise_(noise), seed_(seed),
        rho_(noise.tau > 0.0 ? std::exp(-dt / noise.tau) : 0.0) {
    for (int c = 0; c < 4; ++c) xi_[c] = normal_draw(seed_, 0, c);
    step_ = 0;
  }

  /// Advances the error condition to the next control step.
  void advance() {
    ++step_;
    const double mix = std::sqrt(1.0 - rho_ * rho_);
    for (int c = 0; c < 4; ++c) xi_[c] = rho_ * xi_[c] + mix * normal_draw(seed_, step_, c);
  }

  VehicleState measure(const VehicleState& truth) const {
    return apply_noise(truth, noise_, xi_);
  }

private:
  NoiseSpec noise_;
  uint64_t seed_;
  double rho_;
  uint64_t step_ = 0;
  double xi_[4];
};

} // namespace rollgov
