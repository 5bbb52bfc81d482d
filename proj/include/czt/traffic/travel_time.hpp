#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "czt/parallel.hpp"
#include "czt/traffic/sim.hpp"

namespace czt::traffic {

enum class TtSource : std::uint8_t { kLoop = 0, kCvRaw = 1, kCvCompressed = 2, kGroundTruth = 3 };

inline const char* tt_source_name(TtSource s) {
  switch (s) {
    case TtSource::kLoop: return "LP";
    case TtSource::kCvRaw: return "CV";
    case TtSource::kCvCompressed: return "CS";
    case TtSource::kGroundTruth: return "GR";
  }
  return "?";
}

// Travel time per (segment, interval); absent where the source saw nothing.
using TtSlice = std::vector<std::optional<double>>;

struct TravelTimeTable {
  int segments = 0;
  int intervals = 0;
  TtSlice lp, cv, cs, gr;

  const TtSlice& slice(TtSource s) const {
    switch (s) {
      case TtSource::kLoop: return lp;
      case TtSource::kCvRaw: return cv;
      case TtSource::kCvCompressed: return cs;
      case TtSource::kGroundTruth: return gr;
    }
    return gr;
  }
};

enum class CvMode : std::uint8_t { kRaw = 0, kCompressed = 1 };

namespace detail {

struct CellAccum {
  std::vector<double> sum;
  std::vector<std::uint32_t> count;

  explicit CellAccum(std::size_t cells) : sum(cells, 0.0), count(cells, 0) {}
  void add(std::size_t cell, double v) {
    sum[cell] += v;
    count[cell] += 1;
  }
  void merge(const CellAccum& other) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += other.sum[i];
      count[i] += other.count[i];
    }
  }
};

struct Grid {
  int segments;
  int intervals;
  double seg_len_miles;
  double interval_s;
  double road_len_miles;

  explicit Grid(const SimConfig& cfg)
      : segments(cfg.num_segments),
        intervals(cfg.horizon_intervals),
        seg_len_miles(cfg.road_length_miles / cfg.num_segments),
        interval_s(cfg.interval_s),
        road_len_miles(cfg.road_length_miles) {}

  std::size_t cells() const {
    return static_cast<std::size_t>(segments) * static_cast<std::size_t>(intervals);
  }
  // -1 when beyond the road end (exit overshoot points).
  int seg_of(double pos_miles) const {
    if (pos_miles >= road_len_miles || pos_miles < 0.0) return -1;
    return std::min(segments - 1, static_cast<int>(pos_miles / seg_len_miles));
  }
  int interval_of(double t_s) const {
    if (t_s < 0.0) return -1;
    const int j = static_cast<int>(t_s / interval_s);
    return j < intervals ? j : -1;
  }
  std::size_t cell(int s, int j) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(intervals) +
           static_cast<std::size_t>(j);
  }
};

inline double point_time(const TrackPoint& p) { return p.step * kStepS; }

}  // namespace detail

// Mean traversal time of vehicles entering segment s during interval j.
// Segment entry/exit instants are interpolated between log points; vehicles
// that do not finish a segment before the horizon contribute nothing to it.
inline TtSlice ground_truth_tt(const TrajectoryLog& log, const SimConfig& cfg) {
  validate(cfg);
  const detail::Grid grid(cfg);
  detail::CellAccum acc(grid.cells());

  for (const auto& veh : log.vehicles) {
    if (veh.points.empty()) continue;
    double entry_time = detail::point_time(veh.points.front());
    int seg = grid.seg_of(veh.points.front().pos_miles);
    if (seg < 0) continue;
    for (std::size_t k = 1; k < veh.points.size(); ++k) {
      const auto& a = veh.points[k - 1];
      const auto& b = veh.points[k];
      const double pa = a.pos_miles;
      const double pb = b.pos_miles;
      if (!(pb > pa)) continue;
      const double ta = detail::point_time(a);
      const double tb = detail::point_time(b);
      // Cross every boundary passed in this step, normally just one.
      for (;;) {
        const double boundary = (seg + 1) * grid.seg_len_miles;
        if (pb < boundary) break;
        const double tc = ta + (tb - ta) * (boundary - pa) / (pb - pa);
        const int j = grid.interval_of(entry_time);
        if (j >= 0) acc.add(grid.cell(seg, j), tc - entry_time);
        entry_time = tc;
        ++seg;
        if (seg >= grid.segments) break;
      }
      if (seg >= grid.segments) break;
    }
  }

  TtSlice out(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    if (acc.count[c] > 0) out[c] = acc.sum[c] / acc.count[c];
  }
  return out;
}

// Virtual point detectors at each segment midpoint record interpolated
// crossing speeds; travel time is segment length over the harmonic mean of
// the crossing speeds in the interval. Zero speeds are floored first.
inline TtSlice loop_detector_tt(const TrajectoryLog& log, const SimConfig& cfg) {
  validate(cfg);
  const detail::Grid grid(cfg);
  detail::CellAccum inv_speed(grid.cells());

  for (const auto& veh : log.vehicles) {
    for (std::size_t k = 1; k < veh.points.size(); ++k) {
      const auto& a = veh.points[k - 1];
      const auto& b = veh.points[k];
      const double pa = a.pos_miles;
      const double pb = b.pos_miles;
      if (!(pb > pa)) continue;
      // Midpoints m_d = (d + 0.5) * L inside (pa, pb].
      const int d_lo = static_cast<int>(std::ceil(pa / grid.seg_len_miles - 0.5 + 1e-12));
      const int d_hi = static_cast<int>(std::floor(pb / grid.seg_len_miles - 0.5));
      for (int d = std::max(0, d_lo); d <= std::min(grid.segments - 1, d_hi); ++d) {
        const double m = (d + 0.5) * grid.seg_len_miles;
        if (!(m > pa && m <= pb)) continue;
        const double f = (m - pa) / (pb - pa);
        const double tc = detail::point_time(a) + f * kStepS;
        const double vc = a.speed_mph + f * (b.speed_mph - a.speed_mph);
        const int j = grid.interval_of(tc);
        if (j < 0) continue;
        inv_speed.add(grid.cell(d, j), 1.0 / std::max(static_cast<double>(vc), cfg.speed_floor_mph));
      }
    }
  }

  TtSlice out(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    if (inv_speed.count[c] > 0) {
      out[c] = 3600.0 * grid.seg_len_miles * inv_speed.sum[c] / inv_speed.count[c];
    }
  }
  return out;
}

namespace detail {

struct ObuSnapshot {
  std::int64_t tick = 0;
  double pos_miles = 0.0;
  double speed_mph = 0.0;
};

// Reconstructs the full-rate speed stream spanned by the uploaded snapshots
// and integrates positions between the observed anchors; every reconstructed
// sample is attributed to its (segment, interval) cell.
inline void accumulate_recovered_upload(const std::vector<ObuSnapshot>& buf, const Grid& grid,
                                        const SimConfig& cfg, double tick_dt_s, CellAccum& acc) {
  const std::int64_t tick0 = buf.front().tick;
  const auto span = static_cast<std::size_t>(buf.back().tick - tick0 + 1);
  if (span == 1 || buf.size() == span) {
    // Nothing to reconstruct: contiguous ticks (or a single one).
    for (const auto& s : buf) {
      const int seg = grid.seg_of(s.pos_miles);
      const int j = grid.interval_of(static_cast<double>(s.tick) * tick_dt_s);
      if (seg >= 0 && j >= 0) acc.add(grid.cell(seg, j), s.speed_mph);
    }
    return;
  }

  // Blockwise recovery over the span. Kept values are centered on their
  // block's mean first: speed spans are dominated by a DC component that the
  // l1 program does not reliably pick at very small kept counts. Blocks whose
  // kept values sit within cs_skip_band_mph of each other are filled with
  // their mean directly (with kept ticks exact), which is what the solver
  // would return to tolerance anyway.
  std::vector<double> v(span, 0.0);
  const auto block_len = static_cast<std::size_t>(cfg.cs_block_len);
  std::size_t consumed = 0;
  double prev_last = buf.front().speed_mph;
  for (std::size_t start = 0; start < span; start += block_len) {
    const auto len = static_cast<std::uint32_t>(std::min(block_len, span - start));
    CompressedBlock block;
    block.block_len = len;
    double lo = 1e300, hi = -1e300, mean = 0.0;
    while (consumed < buf.size()) {
      const auto rel = static_cast<std::size_t>(buf[consumed].tick - tick0);
      if (rel >= start + len) break;
      const double s = buf[consumed].speed_mph;
      block.kept_indices.push_back(static_cast<std::uint32_t>(rel - start));
      block.kept_values.push_back(s);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      mean += s;
      ++consumed;
    }
    double* out = v.data() + start;
    if (block.kept_values.empty()) {
      std::fill(out, out + len, prev_last);
    } else if (hi - lo < cfg.cs_skip_band_mph) {
      mean /= static_cast<double>(block.kept_values.size());
      std::fill(out, out + len, mean);
      for (std::size_t k = 0; k < block.kept_indices.size(); ++k) {
        out[block.kept_indices[k]] = block.kept_values[k];
      }
    } else {
      mean /= static_cast<double>(block.kept_values.size());
      for (double& s : block.kept_values) s -= mean;
      const auto rec = recover_block(block, cfg.cs_solver);
      for (std::uint32_t i = 0; i < len; ++i) out[i] = rec.x_hat[i] + mean;
    }
    prev_last = out[len - 1];
  }

  // Trapezoidal position integral, rescaled between consecutive observed
  // anchors so reconstructed positions match the stored ones exactly.
  std::vector<double> cum(span, 0.0);
  for (std::size_t i = 1; i < span; ++i) {
    const double vi = std::max(0.0, v[i - 1]);
    const double vj = std::max(0.0, v[i]);
    cum[i] = cum[i - 1] + 0.5 * (vi + vj) / 3600.0 * tick_dt_s;
  }
  std::vector<double> pos(span, 0.0);
  for (std::size_t k = 1; k < buf.size(); ++k) {
    const auto ia = static_cast<std::size_t>(buf[k - 1].tick - tick0);
    const auto ib = static_cast<std::size_t>(buf[k].tick - tick0);
    const double pa = buf[k - 1].pos_miles;
    const double pb = buf[k].pos_miles;
    const double raw = cum[ib] - cum[ia];
    for (std::size_t i = ia; i <= ib; ++i) {
      if (raw > 1e-12) {
        pos[i] = pa + (pb - pa) * (cum[i] - cum[ia]) / raw;
      } else {
        pos[i] = pa + (pb - pa) * static_cast<double>(i - ia) / static_cast<double>(ib - ia);
      }
    }
  }

  for (std::size_t i = 0; i < span; ++i) {
    const int seg = grid.seg_of(pos[i]);
    const int j =
        grid.interval_of(static_cast<double>(tick0 + static_cast<std::int64_t>(i)) * tick_dt_s);
    if (seg >= 0 && j >= 0) acc.add(grid.cell(seg, j), std::max(0.0, v[i]));
  }
}

}  // namespace detail

// Travel times from connected-vehicle snapshots. Each CV samples its state at
// capture_rate_hz into a FIFO on-board buffer of obu_capacity_snapshots
// (oldest evicted) and uploads-and-clears at every segment boundary crossing
// (including road exit). In raw mode the uploaded snapshots are used
// directly; in compressed mode the sample stream is thinned at
// compression_ratio during capture, reconstructed blockwise at upload time,
// and the reconstructed full-rate stream is used. The estimate per cell is
// segment length over the mean snapshot speed.
inline TtSlice cv_tt(const TrajectoryLog& log, const SimConfig& cfg, CvMode mode,
                     int threads = 1) {
  validate(cfg);
  const detail::Grid grid(cfg);
  const auto stride = static_cast<std::uint32_t>(std::llround(1.0 / (cfg.capture_rate_hz * kStepS)));
  const double tick_dt_s = stride * kStepS;
  const auto capacity = static_cast<std::size_t>(cfg.obu_capacity_snapshots);

  std::vector<const VehicleTrack*> cvs;
  for (const auto& veh : log.vehicles) {
    if (veh.is_cv && !veh.points.empty()) cvs.push_back(&veh);
  }

  std::vector<detail::CellAccum> per_vehicle(cvs.size(), detail::CellAccum(grid.cells()));
  parallel_for(cvs.size(), threads, [&](std::size_t vi) {
    const VehicleTrack& veh = *cvs[vi];
    detail::CellAccum& acc = per_vehicle[vi];
    Rng thin(stream_seed(cfg.seed, 0x7417ull, veh.id));
    std::vector<detail::ObuSnapshot> buf;
    buf.reserve(capacity + 1);

    auto upload = [&] {
      if (buf.empty()) return;
      if (mode == CvMode::kRaw) {
        for (const auto& s : buf) {
          const int seg = grid.seg_of(s.pos_miles);
          const int j = grid.interval_of(static_cast<double>(s.tick) * tick_dt_s);
          if (seg >= 0 && j >= 0) acc.add(grid.cell(seg, j), s.speed_mph);
        }
      } else {
        detail::accumulate_recovered_upload(buf, grid, cfg, tick_dt_s, acc);
      }
      buf.clear();
    };

    int prev_seg = grid.seg_of(veh.points.front().pos_miles);
    for (const auto& p : veh.points) {
      if (p.step % stride == 0) {
        bool keep = true;
        if (mode == CvMode::kCompressed) keep = thin.next_unit() <= cfg.compression_ratio;
        if (keep) {
          buf.push_back(detail::ObuSnapshot{static_cast<std::int64_t>(p.step / stride),
                                            static_cast<double>(p.pos_miles),
                                            static_cast<double>(p.speed_mph)});
          if (buf.size() > capacity) buf.erase(buf.begin());
        }
      }
      const int seg_now =
          p.pos_miles >= grid.road_len_miles ? grid.segments : grid.seg_of(p.pos_miles);
      if (seg_now > prev_seg) {
        upload();
        prev_seg = seg_now;
      }
    }
    // A buffer still held at the horizon was never uploaded.
  });

  detail::CellAccum total(grid.cells());
  for (const auto& acc : per_vehicle) total.merge(acc);

  TtSlice out(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    if (total.count[c] > 0) {
      const double mean =
          std::max(total.sum[c] / total.count[c], cfg.speed_floor_mph);
      out[c] = 3600.0 * grid.seg_len_miles / mean;
    }
  }
  return out;
}

// Mean absolute percentage error over segments 2..S and intervals 4..T
// (1-based), normalized by the number of scored cells. Cells without ground
// truth are excluded from both sum and denominator; cells the source missed
// contribute `missing_penalty`.
inline double mape(const TtSlice& estimate, const TtSlice& ground_truth, const SimConfig& cfg) {
  if (cfg.num_segments < 2 || cfg.horizon_intervals < 4) {
    throw std::invalid_argument("MAPE index range empty");
  }
  const std::size_t cells =
      static_cast<std::size_t>(cfg.num_segments) * static_cast<std::size_t>(cfg.horizon_intervals);
  if (estimate.size() != cells || ground_truth.size() != cells) {
    throw std::invalid_argument("table shape mismatch");
  }
  double num = 0.0;
  std::size_t den = 0;
  for (int s = 1; s < cfg.num_segments; ++s) {
    for (int j = 3; j < cfg.horizon_intervals; ++j) {
      const std::size_t c = static_cast<std::size_t>(s) * cfg.horizon_intervals +
                            static_cast<std::size_t>(j);
      if (!ground_truth[c].has_value()) continue;
      ++den;
      if (!estimate[c].has_value()) {
        num += cfg.missing_penalty;
      } else {
        num += std::fabs(*estimate[c] - *ground_truth[c]) / *ground_truth[c];
      }
    }
  }
  if (den == 0) throw std::runtime_error("no ground-truth cells in MAPE range");
  return num / static_cast<double>(den);
}

inline double mape(const TravelTimeTable& table, TtSource d, const SimConfig& cfg) {
  return mape(table.slice(d), table.gr, cfg);
}

inline TravelTimeTable travel_time_table(const TrajectoryLog& log, const SimConfig& cfg,
                                         int threads = 1) {
  TravelTimeTable t;
  t.segments = cfg.num_segments;
  t.intervals = cfg.horizon_intervals;
  t.gr = ground_truth_tt(log, cfg);
  t.lp = loop_detector_tt(log, cfg);
  t.cv = cv_tt(log, cfg, CvMode::kRaw, threads);
  t.cs = cv_tt(log, cfg, CvMode::kCompressed, threads);
  return t;
}

}  // namespace czt::traffic
