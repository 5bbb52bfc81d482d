#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace czt {

enum class Unit : std::uint8_t { kMph = 0, kDegPerSec = 1, kDimensionless = 2 };

inline const char* unit_name(Unit u) {
  switch (u) {
    case Unit::kMph: return "mph";
    case Unit::kDegPerSec: return "deg_per_s";
    case Unit::kDimensionless: return "dimensionless";
  }
  return "dimensionless";
}

inline Unit unit_from_name(const std::string& s) {
  if (s == "mph") return Unit::kMph;
  if (s == "deg_per_s") return Unit::kDegPerSec;
  if (s == "dimensionless") return Unit::kDimensionless;
  throw std::invalid_argument("unknown unit: " + s);
}

// A fixed-rate real-valued sample sequence with unit metadata.
struct Signal {
  std::vector<double> samples;
  double rate_hz = 10.0;
  Unit unit = Unit::kDimensionless;

  bool operator==(const Signal&) const = default;
};

inline void validate(const Signal& s) {
  if (!(s.rate_hz > 0.0)) throw std::invalid_argument("rate_hz must be positive");
  for (double v : s.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("signal contains non-finite sample");
  }
}

}  // namespace czt
