#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "czt/rng.hpp"
#include "czt/signal.hpp"

namespace czt {

enum class SynthProfile : std::uint8_t { kSpeed = 0, kYaw = 1 };

// Smooth, bounded random-walk speed profile in [0, 80] MPH at the given
// rate. The sample path is C^1-ish (acceleration is the driven state), which
// keeps it compressible in the transform domain the way real drive traces
// are. Mean-reverts toward a cruise target that switches occasionally.
inline Signal synth_speed_trip(std::uint64_t seed, int len, double rate_hz = 10.0) {
  if (len < 1) throw std::invalid_argument("trip length must be >= 1");
  Signal s;
  s.rate_hz = rate_hz;
  s.unit = Unit::kMph;
  s.samples.resize(static_cast<std::size_t>(len));

  Rng rng(seed);
  const double dt = 1.0 / rate_hz;
  double target = rng.next_range(10.0, 75.0);
  double v = std::clamp(target + rng.next_range(-8.0, 8.0), 0.0, 80.0);
  double accel = 0.0;  // mph per second
  double dwell = rng.next_exponential(1.0 / 45.0);

  for (auto& out : s.samples) {
    dwell -= dt;
    if (dwell <= 0.0) {
      target = rng.next_range(5.0, 75.0);
      dwell = rng.next_exponential(1.0 / 45.0);
    }
    const double pull = 0.10 * (target - v);               // desired accel
    accel += 0.8 * (pull - accel) * dt + 0.35 * std::sqrt(dt) * rng.next_normal();
    accel = std::clamp(accel, -8.0, 6.0);
    v = std::clamp(v + accel * dt, 0.0, 80.0);
    out = v;
  }
  return s;
}

// Yaw-rate profile in deg/s: small-amplitude wander around zero with
// occasional smooth turn excursions, so most samples land in [-60, 60) with
// a minority reaching the outer categories.
inline Signal synth_yaw_trip(std::uint64_t seed, int len, double rate_hz = 10.0) {
  if (len < 1) throw std::invalid_argument("trip length must be >= 1");
  Signal s;
  s.rate_hz = rate_hz;
  s.unit = Unit::kDegPerSec;
  s.samples.resize(static_cast<std::size_t>(len));

  Rng rng(seed);
  const double dt = 1.0 / rate_hz;
  double yaw = 0.0;
  double turn_wait = rng.next_exponential(1.0 / 40.0);  // mean 40 s between turns
  double turn_left = 0.0;
  double turn_peak = 0.0;
  double turn_duration = 0.0;

  for (auto& out : s.samples) {
    turn_wait -= dt;
    if (turn_wait <= 0.0 && turn_left <= 0.0) {
      turn_duration = rng.next_range(2.0, 6.0);
      turn_left = turn_duration;
      const double sign = rng.next_unit() < 0.5 ? -1.0 : 1.0;
      turn_peak = sign * rng.next_range(40.0, 280.0);
      turn_wait = rng.next_exponential(1.0 / 40.0);
    }
    double turn = 0.0;
    if (turn_left > 0.0) {
      const double phase = 1.0 - turn_left / turn_duration;  // 0..1
      turn = turn_peak * 0.5 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * phase));
      turn_left -= dt;
    }
    yaw += 1.5 * (0.0 - yaw) * dt + 2.0 * std::sqrt(dt) * rng.next_normal();
    out = std::clamp(yaw + turn, -360.0, 360.0);
  }
  return s;
}

struct SynthConfig {
  int trips = 1;
  int samples_per_trip = 1000;
  SynthProfile profile = SynthProfile::kSpeed;
  std::uint64_t seed = 1;
  double rate_hz = 10.0;
};

inline std::vector<Signal> generate_corpus(const SynthConfig& cfg) {
  if (cfg.trips < 1 || cfg.samples_per_trip < 1) {
    throw std::invalid_argument("trips and samples_per_trip must be >= 1");
  }
  std::vector<Signal> out;
  out.reserve(static_cast<std::size_t>(cfg.trips));
  for (int t = 0; t < cfg.trips; ++t) {
    const std::uint64_t trip_seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(t));
    out.push_back(cfg.profile == SynthProfile::kSpeed
                      ? synth_speed_trip(trip_seed, cfg.samples_per_trip, cfg.rate_hz)
                      : synth_yaw_trip(trip_seed, cfg.samples_per_trip, cfg.rate_hz));
  }
  return out;
}

}  // namespace czt
