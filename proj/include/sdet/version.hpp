#pragma once

namespace sdet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sdet
