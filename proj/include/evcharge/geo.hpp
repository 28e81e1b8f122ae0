#pragma once

#include <functional>

namespace evcharge {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Geographic position in degrees.
struct LonLat {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const LonLat&, const LonLat&) = default;
};

struct BoundingBox {
    double lon_min = 0.0;
    double lat_min = 0.0;
    double lon_max = 0.0;
    double lat_max = 0.0;

    bool contains(LonLat p) const {
        return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
    }
};

bool valid_coordinate(LonLat p);

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(LonLat a, LonLat b);

/// Pluggable distance used for demand-to-site costs (road distance, etc.).
using DistanceFn = std::function<double(LonLat, LonLat)>;

} // namespace evcharge
