#pragma once

#include <cmath>
#include <stdexcept>

#include "rollgov/types.hpp"
#include "rollgov/vehicle.hpp"

namespace rollgov {

enum class ManeuverKind { SineWithDwell, JTurn, FishHook };

inline const char* to_string(ManeuverKind k) {
  switch (k) {
    case ManeuverKind::SineWithDwell: return "sine_with_dwell";
    case ManeuverKind::JTurn: return "j_turn";
    case ManeuverKind::FishHook: return "fish_hook";
  }
  return "sine_with_dwell";
}

inline ManeuverKind maneuver_from_string(const std::string& s) {
  if (s == "sine_with_dwell") return ManeuverKind::SineWithDwell;
  if (s == "j_turn") return ManeuverKind::JTurn;
  if (s == "fish_hook") return ManeuverKind::FishHook;
  throw std::invalid_argument("unknown maneuver kind: " + s);
}

/// A test maneuver: steering waveform parameters plus the entry speed.
struct ManeuverSpec {
  ManeuverKind kind = ManeuverKind::SineWithDwell;
  double amplitude = deg2rad(150.0); ///< steering-wheel amplitude [rad]
  double frequency = 0.7;            ///< waveform frequency [Hz]
  double dwell = 0.5;                ///< hold at the second peak [s]
  double speed = 72.0 / 3.6;         ///< entry speed [m/s]
  double duration = 0.0;             ///< run length [s]; 0 = waveform + 2 s
  double amplitude_scale = 1.0;      ///< scaling used by safe-reference search

  /// Time at which the steering waveform returns to zero [s].
  double waveform_end() const {
    switch (kind) {
      case ManeuverKind::SineWithDwell: return 1.0 / frequency + dwell;
      case ManeuverKind::JTurn: return 4.0;
      case ManeuverKind::FishHook: return 4.5;
    }
    return 1.0 / frequency + dwell;
  }

  double run_duration() const { return duration > 0.0 ? duration : waveform_end() + 2.0; }

  void validate() const {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("ManeuverSpec: amplitude must be >= 0");
    if (!(frequency > 0.0)) throw std::invalid_argument("ManeuverSpec: frequency must be positive");
    if (!(dwell >= 0.0)) throw std::invalid_argument("ManeuverSpec: dwell must be >= 0");
    if (!(speed > 0.0)) throw std::invalid_argument("ManeuverSpec: speed must be positive");
    if (duration > 0.0 && duration < waveform_end() + 2.0)
      throw std::invalid_argument("ManeuverSpec: duration must cover the waveform plus 2 s settling");
  }
};

/// Driver steering-wheel reference at time t [rad]. Sine with Dwell: one
/// sinusoid period with the waveform held at the second (opposite-sign) peak
/// for the dwell duration, then zero.
inline double steering_reference(const ManeuverSpec& spec, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("steering_reference: t must be >= 0");
  const double amp = spec.amplitude * spec.amplitude_scale;
  switch (spec.kind) {
    case ManeuverKind::SineWithDwell: {
      const double period = 1.0 / spec.frequency;
      const double dwell_start = 0.75 * period;
      if (t < dwell_start) return amp * std::sin(2.0 * M_PI * spec.frequency * t);
      if (t < dwell_start + spec.dwell) return -amp;
      const double t_shift = t - spec.dwell;
      if (t_shift < period) return amp * std::sin(2.0 * M_PI * spec.frequency * t_shift);
      return 0.0;
    }
    case ManeuverKind::JTurn: {
      // NHTSA-style ramp to the target angle, held until the waveform ends.
      const double ramp = amp / deg2rad(1000.0);
      if (t < ramp) return amp * t / ramp;
      if (t < spec.waveform_end()) return amp;
      return 0.0;
    }
    case ManeuverKind::FishHook: {
      const double ramp = amp / deg2rad(720.0);
      if (t < ramp) return amp * t / ramp;
      if (t < ramp + 0.25) return amp;
      const double rev = 2.0 * ramp;
      const double t2 = t - ramp - 0.25;
      if (t2 < rev) return amp - 2.0 * amp * t2 / rev;
      if (t < spec.waveform_end()) return -amp;
      return 0.0;
    }
  }
  return 0.0;
}

/// Simulates the maneuver open loop (reference applied directly) and
/// returns the maximum wheel lift [m].
inline double open_loop_max_lift(const ManeuverSpec& spec, const VehicleParams& params,
                                 const TireParams& tire, const SimOptions& opts = {},
                                 double control_dt = 0.01) {
  Simulator sim(params, tire, opts);
  sim.reset(VehicleState::straight_running(spec.speed));
  const int n = static_cast<int>(std::lround(spec.run_duration() / control_dt));
  for (int k = 0; k < n; ++k) {
    sim.advance(steering_reference(spec, k * control_dt), control_dt);
  }
  return sim.max_wheel_lift();
}

enum class SafeReferenceTarget { NoLift, LimLift };

/// Finds the largest amplitude scale in [0, 1] meeting the target: NoLift
/// (zero wheel lift) or LimLift (wheel lift equal to lift_limit within
/// 1 mm). Returns 1 when the unscaled maneuver already meets it.
inline double find_safe_reference(const ManeuverSpec& spec, SafeReferenceTarget target,
                                  const VehicleParams& params, const TireParams& tire,
                                  double lift_limit = 0.05, const SimOptions& opts = {}) {
  ManeuverSpec probe = spec;
  probe.amplitude_scale = 1.0;
  const double full_lift = open_loop_max_lift(probe, params, tire, opts);
  const double threshold = target == SafeReferenceTarget::NoLift ? 0.0 : lift_limit;
  if (full_lift <= threshold) return 1.0;

  double lo = 0.0, hi = 1.0; // lift(lo) <= threshold < lift(hi)
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    probe.amplitude_scale = mid;
    const double lift = open_loop_max_lift(probe, params, tire, opts);
    if (target == SafeReferenceTarget::LimLift && std::abs(lift - lift_limit) <= 1e-3) return mid;
    if (lift <= threshold)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

} // namespace rollgov
