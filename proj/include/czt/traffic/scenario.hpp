#pragma once

#include <map>
#include <ostream>
#include <vector>

#include "czt/parallel.hpp"
#include "czt/traffic/travel_time.hpp"

namespace czt::traffic {

// One cell of the scenario grid. Only arrival rate (and the base config's
// road/demand fields) affect the simulated trajectories; capture rate, OBU
// capacity and compression ratio are post-processing, so scenarios sharing an
// arrival rate are evaluated on one shared simulation per seed.
struct Scenario {
  double capture_rate_hz = 10.0;
  int obu_capacity = 100;
  double compression_ratio = 0.2;
  double arrival_rate_vph = 1800.0;
};

struct ScenarioRow {
  Scenario scenario;
  std::uint64_t seed = 0;
  double mape_lp = 0.0;
  double mape_cv = 0.0;
  double mape_cs = 0.0;
};

// Default grid: capture rate x OBU capacity at the base arrival rate and
// compression ratio.
inline std::vector<Scenario> default_scenario_grid(const SimConfig& base) {
  std::vector<Scenario> out;
  for (double rate : {10.0, 1.0}) {
    for (int cap : {50, 100, 200, 400}) {
      out.push_back(Scenario{rate, cap, base.compression_ratio, base.arrival_rate_vph});
    }
  }
  return out;
}

inline std::vector<ScenarioRow> run_scenarios(const SimConfig& base,
                                              const std::vector<Scenario>& scenarios,
                                              const std::vector<std::uint64_t>& seeds,
                                              int threads = 1) {
  if (scenarios.empty() || seeds.empty()) {
    throw std::invalid_argument("run_scenarios needs scenarios and seeds");
  }
  for (const auto& sc : scenarios) {
    SimConfig probe = base;
    probe.capture_rate_hz = sc.capture_rate_hz;
    probe.obu_capacity_snapshots = sc.obu_capacity;
    probe.compression_ratio = sc.compression_ratio;
    probe.arrival_rate_vph = sc.arrival_rate_vph;
    validate(probe);
  }

  // Group scenario indices by arrival rate (the only trajectory-affecting
  // grid axis), preserving the caller's ordering within a group.
  std::map<double, std::vector<std::size_t>> by_arrival;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    by_arrival[scenarios[i].arrival_rate_vph].push_back(i);
  }

  std::vector<ScenarioRow> rows(scenarios.size() * seeds.size());
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    for (const auto& [arrival, indices] : by_arrival) {
      SimConfig sim_cfg = base;
      sim_cfg.arrival_rate_vph = arrival;
      sim_cfg.seed = seeds[si];
      const TrajectoryLog log = simulate(sim_cfg);
      const TtSlice gr = ground_truth_tt(log, sim_cfg);
      const TtSlice lp = loop_detector_tt(log, sim_cfg);
      const double lp_mape = mape(lp, gr, sim_cfg);

      parallel_for(indices.size(), threads, [&](std::size_t k) {
        const std::size_t idx = indices[k];
        SimConfig cfg = sim_cfg;
        cfg.capture_rate_hz = scenarios[idx].capture_rate_hz;
        cfg.obu_capacity_snapshots = scenarios[idx].obu_capacity;
        cfg.compression_ratio = scenarios[idx].compression_ratio;
        ScenarioRow row;
        row.scenario = scenarios[idx];
        row.seed = seeds[si];
        row.mape_lp = lp_mape;
        row.mape_cv = mape(cv_tt(log, cfg, CvMode::kRaw), gr, cfg);
        row.mape_cs = mape(cv_tt(log, cfg, CvMode::kCompressed), gr, cfg);
        rows[idx * seeds.size() + si] = row;
      });
    }
  }
  return rows;
}

inline void write_scenario_csv(std::ostream& out, const std::vector<ScenarioRow>& rows) {
  out << "capture_rate_hz,obu_capacity,compression_ratio,arrival_rate_vph,source,seed,mape\n";
  auto emit = [&](const ScenarioRow& r, const char* source, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out << r.scenario.capture_rate_hz << ',' << r.scenario.obu_capacity << ','
        << r.scenario.compression_ratio << ',' << r.scenario.arrival_rate_vph << ',' << source
        << ',' << r.seed << ',' << buf << "\n";
  };
  for (const auto& r : rows) {
    emit(r, "LP", r.mape_lp);
    emit(r, "CV", r.mape_cv);
    emit(r, "CS", r.mape_cs);
  }
}

inline void write_travel_time_csv(std::ostream& out, const TravelTimeTable& table) {
  out << "segment,interval,source,tt_s\n";
  for (TtSource src : {TtSource::kGroundTruth, TtSource::kLoop, TtSource::kCvRaw,
                       TtSource::kCvCompressed}) {
    const TtSlice& slice = table.slice(src);
    for (int s = 0; s < table.segments; ++s) {
      for (int j = 0; j < table.intervals; ++j) {
        const auto c = static_cast<std::size_t>(s) * table.intervals + static_cast<std::size_t>(j);
        out << (s + 1) << ',' << (j + 1) << ',' << tt_source_name(src) << ',';
        if (slice[c].has_value()) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.17g", *slice[c]);
          out << buf;
        }
        out << "\n";
      }
    }
  }
}

inline void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
  out << "vehicle_id,is_cv,t,position_miles,speed_mph,lane\n";
  for (const auto& veh : log.vehicles) {
    for (const auto& p : veh.points) {
      char tbuf[32], pbuf[32], vbuf[32];
      std::snprintf(tbuf, sizeof(tbuf), "%.1f", p.step * kStepS);
      std::snprintf(pbuf, sizeof(pbuf), "%.9g", p.pos_miles);
      std::snprintf(vbuf, sizeof(vbuf), "%.9g", p.speed_mph);
      out << veh.id << ',' << (veh.is_cv ? 1 : 0) << ',' << tbuf << ',' << pbuf << ',' << vbuf
          << ',' << static_cast<int>(p.lane) << "\n";
    }
  }
}

}  // namespace czt::traffic
