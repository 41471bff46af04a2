#pragma once

namespace lofi {

inline constexpr const char* version = "0.1.0";

}  // namespace lofi
