#pragma once

#include <numbers>

namespace spdcsim {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact SI
inline constexpr double kPi = std::numbers::pi;

} // namespace spdcsim
