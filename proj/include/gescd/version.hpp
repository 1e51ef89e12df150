#pragma once

namespace gescd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gescd
