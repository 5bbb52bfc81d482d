#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "czt/signal.hpp"

namespace czt {

// One trip's rows from the trip CSV schema:
//   trip_id,t,speed_mph,yaw_deg_s
// Rows are grouped by trip_id and strictly time-sorted within a trip.
struct TripRecords {
  std::string trip_id;
  std::vector<double> t;
  std::vector<double> speed_mph;
  std::vector<double> yaw_deg_s;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " value '" +
                             s + "'");
  }
}

// Shortest-ish round-trip formatting: %.9g is exact for float32 payloads,
// %.17g for doubles.
inline std::string format_f32(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string format_f64(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kTripCsvHeader = "trip_id,t,speed_mph,yaw_deg_s";

inline std::vector<TripRecords> read_trip_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTripCsvHeader) {
    throw std::runtime_error(path + ": expected header '" + kTripCsvHeader + "'");
  }

  std::vector<TripRecords> trips;
  std::vector<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    }
    const std::string& id = fields[0];
    const double t = detail::parse_double(fields[1], line_no, "t");
    const double speed = detail::parse_double(fields[2], line_no, "speed_mph");
    const double yaw = detail::parse_double(fields[3], line_no, "yaw_deg_s");
    if (!std::isfinite(t) || !std::isfinite(speed) || !std::isfinite(yaw)) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": non-finite value");
    }
    if (speed < 0.0) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": negative speed");
    }
    if (yaw < -360.0 || yaw > 360.0) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": yaw outside [-360, 360]");
    }

    if (trips.empty() || trips.back().trip_id != id) {
      if (std::find(seen_ids.begin(), seen_ids.end(), id) != seen_ids.end()) {
        throw std::runtime_error("trip '" + id + "' rows are not contiguous (line " +
                                 std::to_string(line_no) + ")");
      }
      seen_ids.push_back(id);
      trips.push_back(TripRecords{id, {}, {}, {}});
    }
    TripRecords& trip = trips.back();
    if (!trip.t.empty() && !(t > trip.t.back())) {
      throw std::runtime_error("trip '" + id + "': non-monotone time at line " +
                               std::to_string(line_no));
    }
    trip.t.push_back(t);
    trip.speed_mph.push_back(speed);
    trip.yaw_deg_s.push_back(yaw);
  }
  if (trips.empty()) throw std::runtime_error(path + ": no data rows");
  return trips;
}

inline void write_trip_csv(std::ostream& out, const std::vector<TripRecords>& trips) {
  out << kTripCsvHeader << "\n";
  for (const auto& trip : trips) {
    for (std::size_t i = 0; i < trip.t.size(); ++i) {
      out << trip.trip_id << ',' << detail::format_f32(trip.t[i]) << ','
          << detail::format_f32(trip.speed_mph[i]) << ','
          << detail::format_f32(trip.yaw_deg_s[i]) << "\n";
    }
  }
}

// Nominal sample rate from the median time step.
inline double infer_rate_hz(const TripRecords& trip) {
  if (trip.t.size() < 2) return 10.0;
  std::vector<double> dts(trip.t.size() - 1);
  for (std::size_t i = 1; i < trip.t.size(); ++i) dts[i - 1] = trip.t[i] - trip.t[i - 1];
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double dt = dts[dts.size() / 2];
  if (!(dt > 0.0)) throw std::runtime_error("trip '" + trip.trip_id + "': cannot infer rate");
  return 1.0 / dt;
}

}  // namespace czt
