#pragma once

#include <cmath>
#include <limits>

namespace trafcast {

inline constexpr int kMinutesPerDay = 1440;

enum class VehicleClass { Light, Heavy };

// Free: rho < sigma (flux increasing in density). Congested: rho > sigma.
enum class Regime { Free, Congested };

// Marker for absent observations (e.g. velocity at zero flux).
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

inline bool is_missing(double x) { return std::isnan(x); }

}  // namespace trafcast
