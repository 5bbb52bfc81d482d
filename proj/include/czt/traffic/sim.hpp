#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "czt/recovery.hpp"
#include "czt/rng.hpp"

namespace czt::traffic {

inline constexpr double kStepS = 0.1;         // simulation step; log is 10 Hz
inline constexpr double kMileM = 1609.344;    // meters per mile
inline constexpr double kMphToMps = 0.44704;  // mph to m/s

struct SimConfig {
  double road_length_miles = 5.0;
  int lanes = 2;
  int num_segments = 10;          // S
  double interval_s = 300.0;      // travel-time aggregation interval
  int horizon_intervals = 24;     // T
  double arrival_rate_vph = 1800.0;
  double mpr = 0.6;               // connected-vehicle market penetration
  double capture_rate_hz = 10.0;  // snapshot rate: 1 or 10
  int obu_capacity_snapshots = 100;
  double compression_ratio = 0.2;
  std::uint64_t seed = 1;

  // Road speed profile: base limit everywhere, with a triangular sag between
  // sag_start and sag_end bottoming out at sag_speed. During the incident
  // window the sag bottoms out at incident_speed instead, which is what
  // produces a queue and the congested traversals the estimators disagree on.
  double base_speed_mph = 70.0;
  double sag_start_mile = 2.5;
  double sag_end_mile = 3.5;
  double sag_speed_mph = 15.0;
  double incident_start_s = 900.0;
  double incident_end_s = 3300.0;
  double incident_speed_mph = 4.0;

  // Compressed-source plumbing: recovery runs blockwise over the uploaded
  // buffer span with this block length and solver. Tolerances are on the
  // mph scale; sub-0.01 mph precision buys nothing for travel times. Blocks
  // whose kept samples all sit within cs_skip_band_mph are filled with their
  // mean instead of being solved.
  int cs_block_len = 256;
  SolverConfig cs_solver{/*max_iters=*/60, /*abs_tol=*/1e-4, /*rel_tol=*/1e-3};
  double cs_skip_band_mph = 0.3;

  double missing_penalty = 1.0;   // MAPE contribution of a missing cell
  double speed_floor_mph = 1.0;   // floor before harmonic/arithmetic means
};

inline void validate(const SimConfig& cfg) {
  if (!(cfg.road_length_miles > 0.0)) throw std::invalid_argument("road length must be positive");
  if (cfg.lanes < 1) throw std::invalid_argument("lanes must be >= 1");
  if (cfg.num_segments < 2) throw std::invalid_argument("num_segments must be >= 2");
  if (cfg.horizon_intervals < 4) throw std::invalid_argument("horizon_intervals must be >= 4");
  if (!(cfg.interval_s > 0.0)) throw std::invalid_argument("interval_s must be positive");
  if (cfg.arrival_rate_vph < 0.0) throw std::invalid_argument("arrival rate must be >= 0");
  if (cfg.mpr < 0.0 || cfg.mpr > 1.0) throw std::invalid_argument("mpr must be in [0, 1]");
  if (!(cfg.compression_ratio > 0.0 && cfg.compression_ratio <= 1.0)) {
    throw std::invalid_argument("compression_ratio must be in (0, 1]");
  }
  if (cfg.obu_capacity_snapshots < 1) throw std::invalid_argument("obu capacity must be >= 1");
  const double stride = 1.0 / (cfg.capture_rate_hz * kStepS);
  if (!(cfg.capture_rate_hz > 0.0) || std::fabs(stride - std::llround(stride)) > 1e-9) {
    throw std::invalid_argument("capture_rate_hz must divide the 10 Hz log rate");
  }
  if (cfg.cs_block_len < 2) throw std::invalid_argument("cs_block_len must be >= 2");
}

struct TrackPoint {
  std::uint32_t step = 0;  // time = step * 0.1 s
  float pos_miles = 0.0f;
  float speed_mph = 0.0f;
  std::uint8_t lane = 0;
};

struct VehicleTrack {
  std::uint32_t id = 0;
  bool is_cv = false;
  std::vector<TrackPoint> points;
};

struct TrajectoryLog {
  std::vector<VehicleTrack> vehicles;  // indexed by vehicle id
  std::uint32_t total_steps = 0;
  std::uint32_t entered = 0;
  std::uint32_t exited = 0;
  std::uint32_t on_road_at_end = 0;
  std::uint32_t queued_at_end = 0;  // spawned but never entered
  bool entry_queue_warning = false;
};

namespace detail {

struct Vehicle {
  std::uint32_t id = 0;
  double pos = 0.0;  // front bumper, meters
  double v = 0.0;    // m/s
  double v0 = 30.0;  // personal free speed, m/s
  int lane = 0;
  int cooldown = 0;  // lane-change hold, steps
};

inline constexpr double kVehicleLen = 5.0;   // m
inline constexpr double kMinGap = 2.0;       // IDM s0, m
inline constexpr double kHeadway = 1.3;      // IDM T, s
inline constexpr double kMaxAccel = 1.5;     // IDM a, m/s^2
inline constexpr double kComfortDecel = 2.5; // IDM b, m/s^2
inline constexpr double kHardDecel = 8.0;    // emergency clamp, m/s^2

// Positional speed limit, m/s.
inline double limit_mps(const SimConfig& cfg, double pos_m, double t_s) {
  const double base = cfg.base_speed_mph * kMphToMps;
  const double start = cfg.sag_start_mile * kMileM;
  const double end = cfg.sag_end_mile * kMileM;
  if (!(end > start) || pos_m <= start || pos_m >= end) return base;
  const bool incident = t_s >= cfg.incident_start_s && t_s < cfg.incident_end_s;
  const double floor_mph = incident ? cfg.incident_speed_mph : cfg.sag_speed_mph;
  const double floor = std::min(base, floor_mph * kMphToMps);
  const double mid = 0.5 * (start + end);
  const double frac = 1.0 - std::fabs(pos_m - mid) / (0.5 * (end - start));
  return base - (base - floor) * frac;
}

inline double idm_accel(double v, double v0, double gap, double lead_v) {
  const double free = 1.0 - std::pow(v / std::max(v0, 0.1), 4.0);
  double acc = kMaxAccel * free;
  if (gap < 1e9) {
    const double dv = v - lead_v;
    const double s_star =
        kMinGap + std::max(0.0, v * kHeadway + v * dv / (2.0 * std::sqrt(kMaxAccel * kComfortDecel)));
    const double interaction = s_star / std::max(gap, 0.1);
    acc = kMaxAccel * (free - interaction * interaction);
  }
  return std::clamp(acc, -kHardDecel, kMaxAccel);
}

}  // namespace detail

// Time-stepped microscopic simulation: Poisson arrivals split uniformly
// across lanes, IDM longitudinal dynamics against a positional speed limit,
// and a minimal gap-acceptance lane change. Deterministic for a fixed seed;
// the trajectory depends only on (road, demand, seed) — never on capture
// parameters, so capture scenarios can be evaluated on a shared log.
inline TrajectoryLog simulate(const SimConfig& cfg) {
  validate(cfg);
  using detail::Vehicle;

  const double road_len = cfg.road_length_miles * kMileM;
  const double horizon_s = cfg.interval_s * cfg.horizon_intervals;
  const auto total_steps = static_cast<std::uint32_t>(std::llround(horizon_s / kStepS));

  TrajectoryLog log;
  log.total_steps = total_steps;

  // Arrival times from a dedicated stream.
  Rng arrivals(stream_seed(cfg.seed, 0xA11Aull));
  std::vector<double> arrival_times;
  if (cfg.arrival_rate_vph > 0.0) {
    const double rate_per_s = cfg.arrival_rate_vph / 3600.0;
    double t = arrivals.next_exponential(rate_per_s);
    while (t < horizon_s) {
      arrival_times.push_back(t);
      t += arrivals.next_exponential(rate_per_s);
    }
  }

  // lanes_order[l] holds indices into `fleet`, ascending by position (back of
  // road first). Within a lane, car-following preserves order.
  std::vector<Vehicle> fleet;
  std::vector<std::vector<std::uint32_t>> lane_order(static_cast<std::size_t>(cfg.lanes));
  std::vector<std::deque<std::uint32_t>> entry_queue(static_cast<std::size_t>(cfg.lanes));
  std::size_t next_arrival = 0;
  std::uint32_t queue_peak = 0;

  auto spawn_vehicle = [&](std::uint32_t id) {
    Vehicle veh;
    veh.id = id;
    Rng attr(stream_seed(cfg.seed, 0xCAFEull, id));
    veh.v0 = cfg.base_speed_mph * kMphToMps * attr.next_range(0.92, 1.08);
    veh.lane = static_cast<int>(attr.next_below(static_cast<std::uint64_t>(cfg.lanes)));
    const bool is_cv = attr.next_unit() < cfg.mpr;
    fleet.push_back(veh);
    log.vehicles.push_back(VehicleTrack{id, is_cv, {}});
  };

  std::vector<double> accel;
  for (std::uint32_t step = 0; step < total_steps; ++step) {
    const double t = step * kStepS;

    // Spawn due arrivals into their lane's entry queue.
    while (next_arrival < arrival_times.size() && arrival_times[next_arrival] <= t) {
      const auto id = static_cast<std::uint32_t>(fleet.size());
      spawn_vehicle(id);
      entry_queue[static_cast<std::size_t>(fleet[id].lane)].push_back(id);
      ++next_arrival;
    }

    // Admit queue heads when the entry gap is safe.
    for (int l = 0; l < cfg.lanes; ++l) {
      auto& q = entry_queue[static_cast<std::size_t>(l)];
      if (q.empty()) continue;
      auto& order = lane_order[static_cast<std::size_t>(l)];
      double gap = 1e18;
      double lead_v = 0.0;
      if (!order.empty()) {
        const Vehicle& lead = fleet[order.front()];
        gap = lead.pos - detail::kVehicleLen;
        lead_v = lead.v;
      }
      if (gap > 15.0) {
        const std::uint32_t id = q.front();
        q.pop_front();
        Vehicle& veh = fleet[id];
        const double lim = detail::limit_mps(cfg, 0.0, t);
        veh.v = std::min({veh.v0, lim, gap < 60.0 ? std::max(lead_v, 2.0) : veh.v0});
        veh.pos = 0.0;
        order.insert(order.begin(), id);
        ++log.entered;
      }
    }
    std::uint32_t queued = 0;
    for (const auto& q : entry_queue) queued += static_cast<std::uint32_t>(q.size());
    queue_peak = std::max(queue_peak, queued);

    // Lane changes every second: move over when the current leader is close
    // and the target lane offers a clearly larger gap, front and back safe.
    if (cfg.lanes > 1 && step % 10 == 0) {
      for (int l = 0; l < cfg.lanes; ++l) {
        auto& order = lane_order[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < order.size(); ++k) {
          Vehicle& veh = fleet[order[k]];
          if (veh.cooldown > 0) continue;
          const bool has_lead = k + 1 < order.size();
          const double front_gap =
              has_lead ? fleet[order[k + 1]].pos - detail::kVehicleLen - veh.pos : 1e18;
          if (front_gap > std::max(10.0, veh.v * 1.2)) continue;
          const int target = (l + 1 < cfg.lanes) ? l + 1 : l - 1;
          auto& torder = lane_order[static_cast<std::size_t>(target)];
          auto it = std::lower_bound(torder.begin(), torder.end(), veh.pos,
                                     [&](std::uint32_t idx, double p) { return fleet[idx].pos < p; });
          const double tfront_gap = (it != torder.end())
                                        ? fleet[*it].pos - detail::kVehicleLen - veh.pos
                                        : 1e18;
          double tback_gap = 1e18;
          double back_v = 0.0;
          if (it != torder.begin()) {
            const Vehicle& back = fleet[*(it - 1)];
            tback_gap = veh.pos - detail::kVehicleLen - back.pos;
            back_v = back.v;
          }
          const bool incentive = tfront_gap > front_gap + 10.0;
          const bool safe = tfront_gap > std::max(detail::kMinGap, veh.v * 0.8) &&
                            tback_gap > std::max(detail::kMinGap, back_v * 0.8);
          if (incentive && safe) {
            torder.insert(it, order[k]);
            order.erase(order.begin() + static_cast<std::ptrdiff_t>(k));
            veh.lane = target;
            veh.cooldown = 50;
            --k;
          }
        }
      }
    }

    // Longitudinal update, per lane back-to-front order is irrelevant since
    // accelerations use the previous state.
    for (int l = 0; l < cfg.lanes; ++l) {
      auto& order = lane_order[static_cast<std::size_t>(l)];
      accel.assign(order.size(), 0.0);
      for (std::size_t k = 0; k < order.size(); ++k) {
        const Vehicle& veh = fleet[order[k]];
        const double lim = detail::limit_mps(cfg, veh.pos, t);
        const double v0 = std::min(veh.v0, lim);
        double gap = 1e18, lead_v = 0.0;
        if (k + 1 < order.size()) {
          const Vehicle& lead = fleet[order[k + 1]];
          gap = lead.pos - detail::kVehicleLen - veh.pos;
          lead_v = lead.v;
        }
        accel[k] = detail::idm_accel(veh.v, v0, gap, lead_v);
      }
      for (std::size_t k = 0; k < order.size(); ++k) {
        Vehicle& veh = fleet[order[k]];
        veh.v = std::max(0.0, veh.v + accel[k] * kStepS);
        veh.pos += veh.v * kStepS;
        if (veh.cooldown > 0) --veh.cooldown;
      }
      // Anti-overlap guard; order within the lane is preserved.
      for (std::size_t k = order.size(); k-- > 1;) {
        Vehicle& follower = fleet[order[k - 1]];
        const Vehicle& lead = fleet[order[k]];
        const double max_pos = lead.pos - detail::kVehicleLen - 0.5;
        if (follower.pos > max_pos) {
          follower.pos = max_pos;
          follower.v = std::min(follower.v, lead.v);
        }
      }
    }

    // Log the post-update state and retire exited vehicles.
    for (int l = 0; l < cfg.lanes; ++l) {
      auto& order = lane_order[static_cast<std::size_t>(l)];
      for (std::size_t k = 0; k < order.size(); ++k) {
        const Vehicle& veh = fleet[order[k]];
        log.vehicles[veh.id].points.push_back(
            TrackPoint{step, static_cast<float>(veh.pos / kMileM),
                       static_cast<float>(veh.v / kMphToMps), static_cast<std::uint8_t>(l)});
      }
      while (!order.empty() && fleet[order.back()].pos >= road_len) {
        order.pop_back();
        ++log.exited;
      }
    }
  }

  for (const auto& order : lane_order) {
    log.on_road_at_end += static_cast<std::uint32_t>(order.size());
  }
  for (const auto& q : entry_queue) log.queued_at_end += static_cast<std::uint32_t>(q.size());
  log.entry_queue_warning = queue_peak > 0;
  return log;
}

}  // namespace czt::traffic
