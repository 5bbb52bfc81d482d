#pragma once

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "czt/version.hpp"

namespace czt {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_atomic(const std::string& path, const std::string& bytes) {
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

inline std::string file_crc32_hex(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

// Run manifest: config snapshot, seed, version, input digests and output
// digests. Re-running the recorded command reproduces every non-volatile
// output byte-identically; volatile outputs carry wall-clock timings and are
// exempt from the byte-identity contract.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json args)
      : json_{{"artifact", "czt"},
              {"artifact_version", kVersion},
              {"command", std::move(command)},
              {"args", std::move(args)},
              {"inputs", nlohmann::json::array()},
              {"outputs", nlohmann::json::array()},
              {"created_unix_ms",
               std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count()}} {}

  void add_input(const std::string& path) {
    json_["inputs"].push_back({{"path", path}, {"crc32", file_crc32_hex(path)}});
  }

  void add_output(const std::string& path, bool is_volatile = false) {
    nlohmann::json entry{{"path", path}, {"volatile", is_volatile}};
    if (!is_volatile) entry["crc32"] = file_crc32_hex(path);
    json_["outputs"].push_back(std::move(entry));
  }

  void set(const std::string& key, const nlohmann::json& value) { json_[key] = value; }

  const nlohmann::json& json() const { return json_; }

  void write(const std::string& path) const { write_file_atomic(path, json_.dump(2) + "\n"); }

 private:
  nlohmann::json json_;
};

inline nlohmann::json load_manifest(const std::string& path) {
  auto j = nlohmann::json::parse(read_file_bytes(path));
  if (!j.contains("command") || !j.contains("args")) {
    throw std::runtime_error(path + ": not a run manifest");
  }
  return j;
}

}  // namespace czt
