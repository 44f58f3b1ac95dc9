#pragma once

namespace rhd {
inline constexpr const char* kVersion = "1.0.0";
}  // namespace rhd
