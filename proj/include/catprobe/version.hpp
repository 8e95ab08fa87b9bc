#pragma once

namespace catprobe {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace catprobe
