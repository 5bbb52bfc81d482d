#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "czt/dct.hpp"
#include "czt/rng.hpp"
#include "czt/signal.hpp"

namespace czt {

struct CaptureConfig {
  int block_len = 500;             // N
  double compression_ratio = 0.2;  // target kept fraction, in (0, 1]
  std::uint64_t seed = 1;
  // Keep exactly round(ratio * len) samples per block instead of the
  // per-sample Bernoulli rule. The online rule is the primary mode; exact-M
  // exists for controlled experiments.
  bool exact_m = false;
};

inline void validate(const CaptureConfig& cfg) {
  if (cfg.block_len < 2) throw std::invalid_argument("block_len must be >= 2");
  if (!(cfg.compression_ratio > 0.0 && cfg.compression_ratio <= 1.0)) {
    throw std::invalid_argument("compression_ratio must be in (0, 1]");
  }
}

// Kept samples of one block: values plus their within-block indices.
struct CompressedBlock {
  std::vector<double> kept_values;
  std::vector<std::uint32_t> kept_indices;  // strictly increasing, < block_len
  std::uint32_t block_len = 0;
  std::uint32_t ordinal = 0;

  bool operator==(const CompressedBlock&) const = default;
};

struct CompressedTrip {
  std::vector<CompressedBlock> blocks;
  std::uint32_t tail_len = 0;  // length of the final partial block, 0 if none
  double rate_hz = 10.0;
  Unit unit = Unit::kDimensionless;

  std::size_t total_len() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.block_len;
    return n;
  }
  std::size_t kept_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.kept_values.size();
    return n;
  }

  bool operator==(const CompressedTrip&) const = default;
};

// Online capture: samples are processed in arrival order, partitioned into
// consecutive blocks of length N (final block possibly shorter), and each
// sample is kept iff a uniform draw u <= compression_ratio. The draw stream
// for block b is seeded by (seed, b), so blocks replay independently.
inline CompressedTrip capture_stream(const Signal& x, const CaptureConfig& cfg) {
  validate(cfg);
  validate(x);
  if (x.samples.empty()) throw std::invalid_argument("empty signal");

  CompressedTrip trip;
  trip.rate_hz = x.rate_hz;
  trip.unit = x.unit;

  const std::size_t total = x.samples.size();
  const std::size_t n = static_cast<std::size_t>(cfg.block_len);
  std::size_t start = 0;
  std::uint32_t ordinal = 0;
  while (start < total) {
    const std::size_t len = std::min(n, total - start);
    CompressedBlock block;
    block.block_len = static_cast<std::uint32_t>(len);
    block.ordinal = ordinal;
    Rng rng(stream_seed(cfg.seed, ordinal));
    if (cfg.exact_m) {
      const auto m = static_cast<std::size_t>(
          std::min<long long>(static_cast<long long>(len),
                              std::llround(cfg.compression_ratio * static_cast<double>(len))));
      std::vector<std::uint32_t> idx(len);
      std::iota(idx.begin(), idx.end(), 0u);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(len - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(m);
      std::sort(idx.begin(), idx.end());
      for (std::uint32_t i : idx) {
        block.kept_indices.push_back(i);
        block.kept_values.push_back(x.samples[start + i]);
      }
    } else {
      for (std::size_t i = 0; i < len; ++i) {
        if (rng.next_unit() <= cfg.compression_ratio) {
          block.kept_indices.push_back(static_cast<std::uint32_t>(i));
          block.kept_values.push_back(x.samples[start + i]);
        }
      }
    }
    trip.blocks.push_back(std::move(block));
    start += len;
    ++ordinal;
  }
  if (!trip.blocks.empty() &&
      trip.blocks.back().block_len < static_cast<std::uint32_t>(cfg.block_len)) {
    trip.tail_len = trip.blocks.back().block_len;
  }
  return trip;
}

// Implicit linear operator for the combined measurement map: apply() runs the
// inverse transform and gathers the kept indices, apply_transpose() scatters
// and runs the forward transform. No N x N matrix is ever materialized.
// Instances are immutable and safe to share across threads.
class SensingOperator {
 public:
  explicit SensingOperator(const CompressedBlock& block)
      : n_(static_cast<int>(block.block_len)), indices_(block.kept_indices) {
    if (indices_.empty()) {
      throw std::invalid_argument("empty block: nothing to recover from");
    }
    if (n_ <= 0) throw std::invalid_argument("empty block");
    std::uint32_t prev = 0;
    bool first = true;
    for (std::uint32_t i : indices_) {
      if (i >= block.block_len || (!first && i <= prev)) {
        throw std::invalid_argument("kept_indices must be strictly increasing and < block_len");
      }
      prev = i;
      first = false;
    }
  }

  int n() const { return n_; }
  int m() const { return static_cast<int>(indices_.size()); }
  const std::vector<std::uint32_t>& indices() const { return indices_; }

  // y[k] = idct(alpha)[indices[k]], y has length m.
  void apply(const double* alpha, double* y) const {
    auto& full = buffer();
    idct_into(alpha, full.data(), n_);
    for (std::size_t k = 0; k < indices_.size(); ++k) y[k] = full[indices_[k]];
  }

  // alpha = dct(scatter(r)), alpha has length n.
  void apply_transpose(const double* r, double* alpha) const {
    auto& full = buffer();
    std::fill(full.begin(), full.begin() + n_, 0.0);
    for (std::size_t k = 0; k < indices_.size(); ++k) full[indices_[k]] = r[k];
    dct_forward_into(full.data(), alpha, n_);
  }

  std::vector<double> apply(const std::vector<double>& alpha) const {
    if (alpha.size() != static_cast<std::size_t>(n_)) {
      throw std::invalid_argument("operator input length mismatch");
    }
    std::vector<double> y(indices_.size());
    apply(alpha.data(), y.data());
    return y;
  }

  std::vector<double> apply_transpose(const std::vector<double>& r) const {
    if (r.size() != indices_.size()) {
      throw std::invalid_argument("operator input length mismatch");
    }
    std::vector<double> alpha(static_cast<std::size_t>(n_));
    apply_transpose(r.data(), alpha.data());
    return alpha;
  }

 private:
  std::vector<double>& buffer() const {
    thread_local std::vector<double> buf;
    if (buf.size() < static_cast<std::size_t>(n_)) buf.resize(static_cast<std::size_t>(n_));
    return buf;
  }

  int n_;
  std::vector<std::uint32_t> indices_;
};

inline SensingOperator sensing_rows(const CompressedBlock& block) { return SensingOperator(block); }

}  // namespace czt
