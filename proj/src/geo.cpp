#include "evcharge/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace evcharge {

bool valid_coordinate(LonLat p) {
    return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

double haversine_km(LonLat a, LonLat b) {
    if (a == b) {
        return 0.0;
    }
    constexpr double rad = std::numbers::pi / 180.0;
    const double phi1 = a.lat * rad;
    const double phi2 = b.lat * rad;
    const double dphi = (b.lat - a.lat) * rad;
    const double dlambda = (b.lon - a.lon) * rad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

} // namespace evcharge
