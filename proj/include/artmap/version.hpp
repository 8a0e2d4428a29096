#pragma once

namespace artmap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace artmap
