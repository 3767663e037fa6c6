#pragma once

namespace nvmlens {

inline constexpr const char* kVersion = "0.1.0";

} // namespace nvmlens
