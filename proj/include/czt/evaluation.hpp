#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "czt/parallel.hpp"
#include "czt/recovery.hpp"

namespace czt {

inline double rmse(const std::vector<double>& x, const std::vector<double>& x_hat) {
  if (x.size() != x_hat.size()) throw std::invalid_argument("length mismatch");
  if (x.empty()) throw std::invalid_argument("empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_hat[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(x.size()));
}

// Half-open bins [edges[k], edges[k+1]).
struct BinSpec {
  std::vector<double> edges;
  Unit unit = Unit::kDimensionless;
};

inline void validate(const BinSpec& spec) {
  if (spec.edges.size() < 2) throw std::invalid_argument("BinSpec needs at least 2 edges");
  for (std::size_t i = 1; i < spec.edges.size(); ++i) {
    if (!(spec.edges[i] > spec.edges[i - 1])) {
      throw std::invalid_argument("BinSpec edges must be strictly increasing");
    }
  }
}

// Speed categories: 10 MPH wide over [0, 80).
inline BinSpec speed_bins() {
  BinSpec s;
  for (int e = 0; e <= 80; e += 10) s.edges.push_back(static_cast<double>(e));
  s.unit = Unit::kMph;
  return s;
}

// Yaw-rate categories: 60 deg/s wide over [-360, 360).
inline BinSpec yaw_bins() {
  BinSpec s;
  for (int e = -360; e <= 360; e += 60) s.edges.push_back(static_cast<double>(e));
  s.unit = Unit::kDegPerSec;
  return s;
}

struct BinStat {
  std::size_t count = 0;
  double sum_sq_err = 0.0;

  // Absent (not zero) when the bin holds no samples.
  std::optional<double> rmse() const {
    if (count == 0) return std::nullopt;
    return std::sqrt(sum_sq_err / static_cast<double>(count));
  }
};

struct BinnedRmse {
  std::vector<BinStat> bins;
  BinStat overflow;  // truth values outside [first edge, last edge)

  std::size_t total_count() const {
    std::size_t n = overflow.count;
    for (const auto& b : bins) n += b.count;
    return n;
  }
};

// Bins paired samples by the *truth* value and accumulates squared error per
// bin. Out-of-range truth values land in the overflow bucket.
inline BinnedRmse binned_rmse(const std::vector<double>& truth,
                              const std::vector<double>& recovered, const BinSpec& spec) {
  validate(spec);
  if (truth.size() != recovered.size()) throw std::invalid_argument("length mismatch");
  BinnedRmse out;
  out.bins.assign(spec.edges.size() - 1, BinStat{});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double v = truth[i];
    const double err = truth[i] - recovered[i];
    BinStat* stat = &out.overflow;
    if (v >= spec.edges.front() && v < spec.edges.back()) {
      const auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), v);
      stat = &out.bins[static_cast<std::size_t>(it - spec.edges.begin()) - 1];
    }
    stat->count += 1;
    stat->sum_sq_err += err * err;
  }
  return out;
}

struct SweepRow {
  int block_len = 0;
  double compression_ratio = 0.0;
  double mean_rmse = 0.0;  // pooled over every sample of every signal
  double mean_time_per_recovery_s = 0.0;
  std::size_t n_blocks = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// Capture + recover every signal at every (N, ratio) pair. RMSE is pooled
// over all samples; timing is the mean wall time per solved block. The
// capture seed for each (N, ratio, signal) cell is derived from the base
// seed and the list positions, so results are reproducible and independent
// of the parallel schedule.
inline SweepResult ratio_sweep(const std::vector<Signal>& signals, const std::vector<int>& ns,
                               const std::vector<double>& ratios, const SolverConfig& solver,
                               std::uint64_t seed, int threads = 1) {
  if (signals.empty() || ns.empty() || ratios.empty()) {
    throw std::invalid_argument("ratio_sweep needs nonempty signals, Ns and ratios");
  }
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("ratios must be in (0, 1]");
  }

  struct CellStat {
    double sse = 0.0;
    std::size_t samples = 0;
    double time_sum = 0.0;
    std::size_t solved_blocks = 0;
    std::size_t blocks = 0;
  };

  const std::size_t cells = ns.size() * ratios.size();
  std::vector<CellStat> stats(cells * signals.size());

  parallel_for(cells * signals.size(), threads, [&](std::size_t task) {
    const std::size_t cell = task / signals.size();
    const std::size_t sig = task % signals.size();
    const std::size_t ni = cell / ratios.size();
    const std::size_t ri = cell % ratios.size();

    CaptureConfig cap;
    cap.block_len = ns[ni];
    cap.compression_ratio = ratios[ri];
    cap.seed = stream_seed(seed, ni, ri, sig);
    CompressedTrip trip;
    TripRecovery rec;
    try {
      trip = capture_stream(signals[sig], cap);
      rec = recover_trip(trip, solver);
    } catch (const std::exception& e) {
      throw std::runtime_error("sweep cell (N=" + std::to_string(ns[ni]) +
                               ", ratio=" + std::to_string(ratios[ri]) + "): " + e.what());
    }

    CellStat& st = stats[task];
    const auto& x = signals[sig].samples;
    const auto& xh = rec.recovered.samples;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - xh[i];
      st.sse += d * d;
    }
    st.samples = x.size();
    st.blocks = rec.blocks.size();
    for (const auto& b : rec.blocks) {
      if (!b.fallback) {
        st.time_sum += b.wall_time_s;
        ++st.solved_blocks;
      }
    }
  });

  SweepResult out;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
      const std::size_t cell = ni * ratios.size() + ri;
      CellStat total;
      for (std::size_t sig = 0; sig < signals.size(); ++sig) {
        const CellStat& st = stats[cell * signals.size() + sig];
        total.sse += st.sse;
        total.samples += st.samples;
        total.time_sum += st.time_sum;
        total.solved_blocks += st.solved_blocks;
        total.blocks += st.blocks;
      }
      SweepRow row;
      row.block_len = ns[ni];
      row.compression_ratio = ratios[ri];
      row.mean_rmse = std::sqrt(total.sse / static_cast<double>(total.samples));
      row.mean_time_per_recovery_s =
          total.solved_blocks > 0 ? total.time_sum / static_cast<double>(total.solved_blocks) : 0.0;
      row.n_blocks = total.blocks;
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace czt
