#pragma once

namespace czt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace czt
