#pragma once

namespace adaptrace {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace adaptrace
