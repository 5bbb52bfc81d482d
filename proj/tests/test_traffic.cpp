#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "czt/traffic/scenario.hpp"
#include "czt/traffic/travel_time.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace tr = czt::traffic;

namespace {

// Small road for estimator tests: 5 segments of 1 mile, 60 s intervals.
tr::SimConfig grid_config() {
  tr::SimConfig cfg;
  cfg.road_length_miles = 5.0;
  cfg.num_segments = 5;
  cfg.interval_s = 60.0;
  cfg.horizon_intervals = 30;
  cfg.sag_speed_mph = cfg.base_speed_mph;       // flat road
  cfg.incident_speed_mph = cfg.base_speed_mph;  // no incident
  return cfg;
}

// Drives a vehicle at piecewise-constant speed: segments[i] = speed (mph)
// held for duration[i] seconds, logged at 10 Hz from t0_step. Positions are
// integrated exactly.
tr::VehicleTrack drive(std::uint32_t id, bool is_cv, std::uint32_t t0_step,
                       const std::vector<std::pair<double, double>>& phases) {
  tr::VehicleTrack veh;
  veh.id = id;
  veh.is_cv = is_cv;
  double pos = 0.0;
  std::uint32_t step = t0_step;
  for (const auto& [speed_mph, duration_s] : phases) {
    const auto nsteps = static_cast<std::uint32_t>(std::llround(duration_s / tr::kStepS));
    for (std::uint32_t k = 0; k < nsteps; ++k) {
      veh.points.push_back(tr::TrackPoint{step, static_cast<float>(pos),
                                          static_cast<float>(speed_mph), 0});
      pos += speed_mph / 3600.0 * tr::kStepS;
      ++step;
    }
  }
  veh.points.push_back(
      tr::TrackPoint{step, static_cast<float>(pos), static_cast<float>(phases.back().first), 0});
  return veh;
}

std::size_t cell(const tr::SimConfig& cfg, int s, int j) {
  return static_cast<std::size_t>(s) * cfg.horizon_intervals + static_cast<std::size_t>(j);
}

}  // namespace

TEST_CASE("single vehicle traverses the road at its free speed") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 2.0;  // sparse: vehicles never interact
  cfg.horizon_intervals = 24;
  cfg.sag_speed_mph = cfg.base_speed_mph;
  cfg.incident_speed_mph = cfg.base_speed_mph;
  cfg.seed = 42;
  auto log = tr::simulate(cfg);
  REQUIRE(log.entered >= 1);
  const auto& veh = log.vehicles[0];
  REQUIRE(veh.points.size() > 100);
  const double v = veh.points.front().speed_mph;
  REQUIRE(v > 0.0);
  // Crossing time of the 5-mile mark, interpolated.
  double exit_t = -1.0;
  for (std::size_t k = 1; k < veh.points.size(); ++k) {
    if (veh.points[k].pos_miles >= 5.0f) {
      const auto& a = veh.points[k - 1];
      const auto& b = veh.points[k];
      const double f = (5.0 - a.pos_miles) / (b.pos_miles - a.pos_miles);
      exit_t = a.step * tr::kStepS + f * tr::kStepS;
      break;
    }
  }
  REQUIRE(exit_t > 0.0);
  const double entry_t = veh.points.front().step * tr::kStepS;
  REQUIRE_THAT(exit_t - entry_t, WithinAbs(5.0 * 3600.0 / v, 0.2));
}

TEST_CASE("zero arrival rate yields an empty log") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 0.0;
  cfg.horizon_intervals = 4;
  auto log = tr::simulate(cfg);
  REQUIRE(log.vehicles.empty());
  REQUIRE(log.entered == 0);
}

TEST_CASE("simulation is deterministic for a fixed seed") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 900.0;
  cfg.horizon_intervals = 4;
  cfg.interval_s = 120.0;
  cfg.seed = 7;
  auto a = tr::simulate(cfg);
  auto b = tr::simulate(cfg);
  REQUIRE(a.vehicles.size() == b.vehicles.size());
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    REQUIRE(a.vehicles[i].is_cv == b.vehicles[i].is_cv);
    REQUIRE(a.vehicles[i].points.size() == b.vehicles[i].points.size());
    for (std::size_t k = 0; k < a.vehicles[i].points.size(); ++k) {
      REQUIRE(a.vehicles[i].points[k].pos_miles == b.vehicles[i].points[k].pos_miles);
      REQUIRE(a.vehicles[i].points[k].speed_mph == b.vehicles[i].points[k].speed_mph);
    }
  }
}

TEST_CASE("no vehicle is lost: entered = exited + on-road") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 1500.0;
  cfg.horizon_intervals = 6;
  cfg.interval_s = 120.0;
  cfg.seed = 11;
  auto log = tr::simulate(cfg);
  REQUIRE(log.entered == log.exited + log.on_road_at_end);
  std::uint32_t with_points = 0;
  for (const auto& v : log.vehicles) {
    if (!v.points.empty()) ++with_points;
  }
  REQUIRE(with_points == log.entered);
}

TEST_CASE("log invariants: monotone time and position, nonnegative speed") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 1200.0;
  cfg.horizon_intervals = 4;
  cfg.interval_s = 150.0;
  cfg.seed = 13;
  auto log = tr::simulate(cfg);
  REQUIRE(log.entered > 0);
  for (const auto& veh : log.vehicles) {
    for (std::size_t k = 1; k < veh.points.size(); ++k) {
      REQUIRE(veh.points[k].step > veh.points[k - 1].step);
      REQUIRE(veh.points[k].pos_miles >= veh.points[k - 1].pos_miles);
      REQUIRE(veh.points[k].speed_mph >= 0.0f);
    }
  }
}

TEST_CASE("ground truth: constant-speed vehicle gives exact segment times") {
  auto cfg = grid_config();
  tr::TrajectoryLog log;
  log.vehicles.push_back(drive(0, false, 0, {{60.0, 350.0}}));  // 1 mile per minute
  auto gr = tr::ground_truth_tt(log, cfg);
  for (int s = 0; s < 5; ++s) {
    const int j = s;  // enters segment s at t = 60 s -> interval s
    REQUIRE(gr[cell(cfg, s, j)].has_value());
    REQUIRE_THAT(*gr[cell(cfg, s, j)], WithinAbs(60.0, 1e-3));
  }
}

TEST_CASE("ground truth: two vehicles entering one cell average their times") {
  auto cfg = grid_config();
  tr::TrajectoryLog log;
  log.vehicles.push_back(drive(0, false, 0, {{60.0, 350.0}}));   // 60 s per segment
  log.vehicles.push_back(drive(1, false, 100, {{45.0, 450.0}}));  // 80 s per segment
  auto gr = tr::ground_truth_tt(log, cfg);
  // Both enter segment 0 during interval 0 (t = 0 s and t = 10 s).
  REQUIRE_THAT(*gr[cell(cfg, 0, 0)], WithinAbs(0.5 * (60.0 + 80.0), 1e-3));
}

TEST_CASE("ground truth: stop-and-go profile matches the hand computation") {
  auto cfg = grid_config();
  tr::TrajectoryLog log;
  // 1 mile at 60 (60 s), 1 mile at 20 (180 s), 1 mile at 36 (100 s),
  // 1 mile at 45 (80 s), 1 mile at 60 (60 s). All boundary crossings land
  // exactly on ticks, so the expected traversals are exact.
  log.vehicles.push_back(
      drive(0, false, 0, {{60.0, 60.0}, {20.0, 180.0}, {36.0, 100.0}, {45.0, 80.0}, {60.0, 61.0}}));
  auto gr = tr::ground_truth_tt(log, cfg);
  const std::vector<double> expect{60.0, 180.0, 100.0, 80.0, 60.0};
  const std::vector<int> entry_interval{0, 1, 4, 5, 7};  // entry times 0,60,240,340,420
  for (int s = 0; s < 5; ++s) {
    REQUIRE(gr[cell(cfg, s, entry_interval[static_cast<std::size_t>(s)])].has_value());
    REQUIRE_THAT(*gr[cell(cfg, s, entry_interval[static_cast<std::size_t>(s)])],
                 WithinAbs(expect[static_cast<std::size_t>(s)], 1e-3));
  }
}

TEST_CASE("loop detector: uniform crossings give segment length over speed") {
  auto cfg = grid_config();
  tr::TrajectoryLog log;
  log.vehicles.push_back(drive(0, false, 0, {{50.0, 400.0}}));
  auto lp = tr::loop_detector_tt(log, cfg);
  // Midpoint of segment 0 is at 0.5 miles: crossed at t = 36 s, interval 0.
  REQUIRE(lp[cell(cfg, 0, 0)].has_value());
  REQUIRE_THAT(*lp[cell(cfg, 0, 0)], WithinAbs(1.0 / 50.0 * 3600.0, 1e-2));
}

TEST_CASE("loop detector: harmonic mean of 30 and 60 mph over one mile is 90 s") {
  auto cfg = grid_config();
  cfg.interval_s = 300.0;
  cfg.horizon_intervals = 4;
  tr::TrajectoryLog log;
  log.vehicles.push_back(drive(0, false, 0, {{30.0, 130.0}}));
  log.vehicles.push_back(drive(1, false, 10, {{60.0, 70.0}}));
  auto lp = tr::loop_detector_tt(log, cfg);
  // Both cross the segment-0 midpoint during interval 0.
  REQUIRE(lp[cell(cfg, 0, 0)].has_value());
  REQUIRE_THAT(*lp[cell(cfg, 0, 0)], WithinAbs(90.0, 1e-2));
}

TEST_CASE("loop detector floors near-zero crossing speeds") {
  auto cfg = grid_config();
  cfg.interval_s = 3600.0;
  cfg.horizon_intervals = 4;
  tr::TrajectoryLog log;
  log.vehicles.push_back(drive(0, false, 0, {{0.4, 3600.0 * 3.0}}));  // crawls over midpoint
  auto lp = tr::loop_detector_tt(log, cfg);
  bool any = false;
  for (const auto& v : lp) {
    if (v.has_value()) {
      any = true;
      REQUIRE(*v <= 3600.0 * 1.0 + 1e-6);  // floored at 1 mph over 1 mile
    }
  }
  REQUIRE(any);
}

TEST_CASE("mape: identical tables give zero") {
  auto cfg = grid_config();
  cfg.horizon_intervals = 6;
  tr::TtSlice gr(static_cast<std::size_t>(cfg.num_segments) * cfg.horizon_intervals);
  for (auto& v : gr) v = 100.0;
  REQUIRE(tr::mape(gr, gr, cfg) == 0.0);
}

TEST_CASE("mape: single scored cell with 20% error") {
  auto cfg = grid_config();
  cfg.num_segments = 2;
  cfg.horizon_intervals = 4;
  const std::size_t cells = 8;
  tr::TtSlice gr(cells), est(cells);
  // Only (s=2, j=4) in 1-based terms is scored: index (1, 3).
  gr[static_cast<std::size_t>(1) * 4 + 3] = 100.0;
  est[static_cast<std::size_t>(1) * 4 + 3] = 120.0;
  REQUIRE_THAT(tr::mape(est, gr, cfg), WithinAbs(0.2, 1e-12));
}

TEST_CASE("mape: hand-computed fixture with a missing cell and a missing truth") {
  // S=3, T=6; scored cells are s in {2,3}, j in {4,5,6} (1-based).
  // GR: (2,4)=100 (2,5)=110 (2,6)=120 (3,4)=200 (3,5)=absent (3,6)=220
  // D:  (2,4)=120 (2,5)=99  (2,6)=absent (3,4)=210 (3,5)=170 (3,6)=220
  // Included cells: 5. Sum = 0.2 + 0.1 + 1.0(penalty) + 0.05 + 0 = 1.35.
  auto cfg = grid_config();
  cfg.num_segments = 3;
  cfg.horizon_intervals = 6;
  const std::size_t cells = 18;
  tr::TtSlice gr(cells), est(cells);
  auto at = [&](int s1, int j1) -> std::size_t {
    return static_cast<std::size_t>(s1 - 1) * 6 + static_cast<std::size_t>(j1 - 1);
  };
  gr[at(2, 4)] = 100.0;
  gr[at(2, 5)] = 110.0;
  gr[at(2, 6)] = 120.0;
  gr[at(3, 4)] = 200.0;
  gr[at(3, 6)] = 220.0;
  est[at(2, 4)] = 120.0;
  est[at(2, 5)] = 99.0;
  est[at(3, 4)] = 210.0;
  est[at(3, 5)] = 170.0;
  est[at(3, 6)] = 220.0;
  REQUIRE_THAT(tr::mape(est, gr, cfg), WithinAbs(0.27, 1e-12));
}

TEST_CASE("mape ignores segment 1 and intervals 1-3") {
  auto cfg = grid_config();
  cfg.num_segments = 3;
  cfg.horizon_intervals = 6;
  const std::size_t cells = 18;
  tr::TtSlice gr(cells), est(cells);
  for (auto& v : gr) v = 50.0;
  for (auto& v : est) v = 55.0;
  const double base = tr::mape(est, gr, cfg);
  // Corrupt every excluded cell wildly.
  for (int j = 0; j < 6; ++j) est[static_cast<std::size_t>(0) * 6 + j] = 9999.0;
  for (int s = 0; s < 3; ++s) {
    for (int j = 0; j < 3; ++j) est[static_cast<std::size_t>(s) * 6 + j] = 9999.0;
  }
  REQUIRE(tr::mape(est, gr, cfg) == base);
}

TEST_CASE("mape is scale invariant") {
  auto cfg = grid_config();
  cfg.num_segments = 4;
  cfg.horizon_intervals = 8;
  const std::size_t cells = 32;
  tr::TtSlice gr(cells), est(cells);
  czt::Rng rng(3);
  for (std::size_t c = 0; c < cells; ++c) {
    gr[c] = rng.next_range(50.0, 200.0);
    est[c] = rng.next_range(50.0, 200.0);
  }
  const double base = tr::mape(est, gr, cfg);
  for (std::size_t c = 0; c < cells; ++c) {
    gr[c] = *gr[c] * 7.5;
    est[c] = *est[c] * 7.5;
  }
  REQUIRE_THAT(tr::mape(est, gr, cfg), WithinRel(base, 1e-12));
}

TEST_CASE("mape rejects an empty index range") {
  auto cfg = grid_config();
  cfg.num_segments = 1;
  cfg.horizon_intervals = 6;
  tr::TtSlice t(6);
  REQUIRE_THROWS_WITH(tr::mape(t, t, cfg), "MAPE index range empty");
}

TEST_CASE("fully observed connected vehicles track ground truth in free flow") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 600.0;
  cfg.horizon_intervals = 8;
  cfg.interval_s = 150.0;
  cfg.mpr = 1.0;
  cfg.obu_capacity_snapshots = 1000000;
  cfg.capture_rate_hz = 10.0;
  cfg.sag_speed_mph = cfg.base_speed_mph;
  cfg.incident_speed_mph = cfg.base_speed_mph;
  cfg.seed = 21;
  auto log = tr::simulate(cfg);
  auto gr = tr::ground_truth_tt(log, cfg);
  auto cv = tr::cv_tt(log, cfg, tr::CvMode::kRaw);
  std::size_t compared = 0;
  for (std::size_t c = 0; c < gr.size(); ++c) {
    if (gr[c].has_value() && cv[c].has_value()) {
      REQUIRE_THAT(*cv[c], WithinRel(*gr[c], 0.05));
      ++compared;
    }
  }
  REQUIRE(compared > 10);
}

TEST_CASE("compressed mode at ratio 1.0 equals raw mode") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 700.0;
  cfg.horizon_intervals = 4;
  cfg.interval_s = 150.0;
  cfg.compression_ratio = 1.0;
  cfg.obu_capacity_snapshots = 200;
  cfg.seed = 23;
  auto log = tr::simulate(cfg);
  auto raw = tr::cv_tt(log, cfg, tr::CvMode::kRaw);
  auto cs = tr::cv_tt(log, cfg, tr::CvMode::kCompressed);
  REQUIRE(raw.size() == cs.size());
  for (std::size_t c = 0; c < raw.size(); ++c) {
    REQUIRE(raw[c].has_value() == cs[c].has_value());
    if (raw[c].has_value()) REQUIRE_THAT(*cs[c], WithinAbs(*raw[c], 1e-9));
  }
}

TEST_CASE("cv_tt is stable across thread counts") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 900.0;
  cfg.horizon_intervals = 4;
  cfg.interval_s = 150.0;
  cfg.compression_ratio = 0.3;
  cfg.seed = 29;
  auto log = tr::simulate(cfg);
  auto a = tr::cv_tt(log, cfg, tr::CvMode::kCompressed, 1);
  auto b = tr::cv_tt(log, cfg, tr::CvMode::kCompressed, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    REQUIRE(a[c].has_value() == b[c].has_value());
    if (a[c].has_value()) REQUIRE(*a[c] == *b[c]);
  }
}

TEST_CASE("zero market penetration leaves CV cells missing and penalized") {
  tr::SimConfig cfg;
  cfg.arrival_rate_vph = 800.0;
  cfg.horizon_intervals = 5;
  cfg.interval_s = 120.0;
  cfg.mpr = 0.0;
  cfg.seed = 31;
  auto log = tr::simulate(cfg);
  auto gr = tr::ground_truth_tt(log, cfg);
  auto cv = tr::cv_tt(log, cfg, tr::CvMode::kRaw);
  for (const auto& v : cv) REQUIRE_FALSE(v.has_value());
  REQUIRE_THAT(tr::mape(cv, gr, cfg), WithinAbs(1.0, 1e-12));
  auto lp = tr::loop_detector_tt(log, cfg);
  REQUIRE(tr::mape(lp, gr, cfg) < 1.0);  // loop detectors unaffected
}

TEST_CASE("scenario rows are deterministic and grouped runs share trajectories") {
  tr::SimConfig base;
  base.arrival_rate_vph = 800.0;
  base.horizon_intervals = 4;
  base.interval_s = 150.0;
  base.seed = 3;
  std::vector<tr::Scenario> scenarios{
      tr::Scenario{10.0, 50, 0.25, 800.0},
      tr::Scenario{10.0, 100, 0.25, 800.0},
  };
  auto rows1 = tr::run_scenarios(base, scenarios, {1, 2}, 1);
  auto rows2 = tr::run_scenarios(base, scenarios, {1, 2}, 2);
  REQUIRE(rows1.size() == 4);
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    REQUIRE(rows1[i].mape_cv == rows2[i].mape_cv);
    REQUIRE(rows1[i].mape_cs == rows2[i].mape_cs);
    REQUIRE(rows1[i].mape_lp == rows2[i].mape_lp);
  }
  // LP does not depend on capture parameters: same per (arrival, seed).
  // Rows are scenario-major: [scenario0 seed1, scenario0 seed2, scenario1 ...].
  REQUIRE(rows1[0].mape_lp == rows1[2].mape_lp);
  REQUIRE(rows1[1].mape_lp == rows1[3].mape_lp);
}
