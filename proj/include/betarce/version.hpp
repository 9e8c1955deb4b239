#pragma once

namespace betarce {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace betarce
