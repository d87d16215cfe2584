#pragma once

namespace rsel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rsel
