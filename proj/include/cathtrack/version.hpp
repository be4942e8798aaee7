#pragma once

namespace cathtrack {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cathtrack
