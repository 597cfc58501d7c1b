#pragma once

namespace capinfer {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace capinfer
