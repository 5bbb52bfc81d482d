#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "czt/sampler.hpp"

namespace czt {

// Compressed-trip archive, format "CZT1":
//   magic "CZT1" | version u8 | unit u8 | flags u8 (bit0 = exact-m) | pad u8
//   block_len u32 | compression_ratio f64 | seed u64 | rate_hz f64
//   trip_count u32
//   per trip: id (u16 len + bytes) | total_len u64 | t0 f64 | block_count u32
//     per block: m u32 | indices as varints (first absolute, then gap-1)
//                | m values as f32
//   crc32 u32 over everything before the footer
// All integers little-endian. Values are stored as float32: telemetry source
// precision does not exceed it and it halves storage.
struct ArchiveMeta {
  std::uint8_t version = 1;
  Unit unit = Unit::kMph;
  bool exact_m = false;
  std::uint32_t block_len = 500;
  double compression_ratio = 0.2;
  std::uint64_t seed = 1;
  double rate_hz = 10.0;
};

struct ArchiveTrip {
  std::string trip_id;
  double t0 = 0.0;
  CompressedTrip trip;
};

struct Archive {
  ArchiveMeta meta;
  std::vector<ArchiveTrip> trips;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void bytes(const void* p, std::size_t n) { raw(p, n); }
  const std::string& data() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.append(c, n);
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const char* p, std::size_t n) : p_(p), end_(p + n) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return read<std::uint16_t>(); }
  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }
  float f32() { return read<float>(); }
  double f64() { return read<double>(); }
  std::string str(std::size_t n) { return {take(n), n}; }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  template <typename T>
  T read() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const char* take(std::size_t n) {
    if (remaining() < n) throw std::runtime_error("archive truncated");
    const char* p = p_;
    p_ += n;
    return p;
  }
  const char* p_;
  const char* end_;
};

inline void write_varint(ByteWriter& w, std::uint64_t v) {
  while (v >= 0x80) {
    w.u8(static_cast<std::uint8_t>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  w.u8(static_cast<std::uint8_t>(v));
}

inline std::uint64_t read_varint(ByteReader& r) {
  std::uint64_t v = 0;
  int shift = 0;
  for (;;) {
    const std::uint8_t b = r.u8();
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) return v;
    shift += 7;
    if (shift > 63) throw std::runtime_error("archive varint overflow");
  }
}

}  // namespace detail

inline std::string serialize_archive(const Archive& a) {
  detail::ByteWriter w;
  w.bytes("CZT1", 4);
  w.u8(a.meta.version);
  w.u8(static_cast<std::uint8_t>(a.meta.unit));
  w.u8(a.meta.exact_m ? 1 : 0);
  w.u8(0);
  w.u32(a.meta.block_len);
  w.f64(a.meta.compression_ratio);
  w.u64(a.meta.seed);
  w.f64(a.meta.rate_hz);
  w.u32(static_cast<std::uint32_t>(a.trips.size()));
  for (const auto& t : a.trips) {
    if (t.trip_id.size() > 0xffff) throw std::runtime_error("trip id too long");
    w.u16(static_cast<std::uint16_t>(t.trip_id.size()));
    w.bytes(t.trip_id.data(), t.trip_id.size());
    w.u64(t.trip.total_len());
    w.f64(t.t0);
    w.u32(static_cast<std::uint32_t>(t.trip.blocks.size()));
    for (const auto& b : t.trip.blocks) {
      w.u32(static_cast<std::uint32_t>(b.kept_indices.size()));
      std::uint32_t prev = 0;
      for (std::size_t k = 0; k < b.kept_indices.size(); ++k) {
        const std::uint32_t idx = b.kept_indices[k];
        detail::write_varint(w, k == 0 ? idx : idx - prev - 1);
        prev = idx;
      }
      for (double v : b.kept_values) w.f32(static_cast<float>(v));
    }
  }
  const auto crc =
      static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef*>(w.data().data()),
                                       static_cast<uInt>(w.data().size())));
  detail::ByteWriter footer;
  footer.u32(crc);
  return w.data() + footer.data();
}

inline Archive parse_archive(const std::string& bytes, std::uint32_t expected_block_len = 0) {
  if (bytes.size() < 8) throw std::runtime_error("archive truncated");
  const std::size_t body_len = bytes.size() - 4;
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + body_len, 4);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body_len)));
  if (crc != stored_crc) throw std::runtime_error("archive CRC mismatch");

  detail::ByteReader r(bytes.data(), body_len);
  if (r.str(4) != "CZT1") throw std::runtime_error("bad magic: not a CZT1 archive");
  Archive a;
  a.meta.version = r.u8();
  if (a.meta.version != 1) {
    throw std::runtime_error("unsupported archive version " + std::to_string(a.meta.version));
  }
  const std::uint8_t unit = r.u8();
  if (unit > 2) throw std::runtime_error("bad unit tag in archive");
  a.meta.unit = static_cast<Unit>(unit);
  a.meta.exact_m = (r.u8() & 1) != 0;
  r.u8();
  a.meta.block_len = r.u32();
  a.meta.compression_ratio = r.f64();
  a.meta.seed = r.u64();
  a.meta.rate_hz = r.f64();
  if (expected_block_len != 0 && a.meta.block_len != expected_block_len) {
    throw std::runtime_error("archive block length mismatch");
  }

  const std::uint32_t trip_count = r.u32();
  a.trips.reserve(trip_count);
  for (std::uint32_t ti = 0; ti < trip_count; ++ti) {
    ArchiveTrip t;
    const std::uint16_t id_len = r.u16();
    t.trip_id = r.str(id_len);
    const std::uint64_t total = r.u64();
    t.t0 = r.f64();
    const std::uint32_t block_count = r.u32();
    t.trip.rate_hz = a.meta.rate_hz;
    t.trip.unit = a.meta.unit;
    std::uint64_t seen = 0;
    for (std::uint32_t bi = 0; bi < block_count; ++bi) {
      CompressedBlock b;
      b.ordinal = bi;
      const bool last = (bi + 1 == block_count);
      const std::uint64_t len = last ? total - seen : a.meta.block_len;
      if (len == 0 || len > a.meta.block_len) throw std::runtime_error("archive block sizes inconsistent");
      b.block_len = static_cast<std::uint32_t>(len);
      const std::uint32_t m = r.u32();
      if (m > len) throw std::runtime_error("archive kept count exceeds block length");
      std::uint32_t prev = 0;
      for (std::uint32_t k = 0; k < m; ++k) {
        const std::uint64_t delta = detail::read_varint(r);
        const std::uint64_t idx = (k == 0) ? delta : prev + 1 + delta;
        if (idx >= len) throw std::runtime_error("archive kept index out of range");
        b.kept_indices.push_back(static_cast<std::uint32_t>(idx));
        prev = static_cast<std::uint32_t>(idx);
      }
      b.kept_values.reserve(m);
      for (std::uint32_t k = 0; k < m; ++k) b.kept_values.push_back(static_cast<double>(r.f32()));
      seen += len;
      t.trip.blocks.push_back(std::move(b));
    }
    if (seen != total) throw std::runtime_error("archive trip length mismatch");
    if (!t.trip.blocks.empty() && t.trip.blocks.back().block_len < a.meta.block_len) {
      t.trip.tail_len = t.trip.blocks.back().block_len;
    }
    a.trips.push_back(std::move(t));
  }
  return a;
}

inline void write_archive_file(const std::string& path, const Archive& a) {
  const std::string bytes = serialize_archive(a);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

inline Archive read_archive_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_archive(bytes);
}

}  // namespace czt
