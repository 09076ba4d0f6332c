#pragma once

namespace latefuse {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace latefuse
