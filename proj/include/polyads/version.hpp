#pragma once

namespace polyads {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace polyads
