#pragma once

#include "evcharge/demand.hpp"

#include <cstdint>
#include <vector>

namespace evcharge {

/// Synthetic taxi fleet. Vehicles alternate drives between waypoints drawn
/// from a Gaussian hotspot mixture and stops; a stop is a long dwell with a
/// time-of-day dependent probability centred on `peak_hour`.
struct SynthConfig {
    int n_vehicles = 100;
    int n_days = 1;
    BoundingBox bbox{116.20, 39.80, 116.55, 40.02};
    int hotspot_count = 8;
    double hotspot_sigma_km = 1.5;
    /// Share of waypoints drawn uniformly over the bbox instead of from a hotspot.
    double background_share = 0.2;
    /// Expected drive+stop cycles per 24 hours.
    double trips_per_day_mean = 20.0;
    /// Mean probability that a stop is a long dwell (>= 32 minutes).
    double dwell_prob = 0.4;
    int peak_hour = 18;
    /// Relative height of the long-dwell probability bump at `peak_hour`.
    double peak_boost = 2.0;
    double peak_width_h = 2.0;
    double long_dwell_min_minutes = 32.0;
    double long_dwell_max_minutes = 120.0;
    double short_stop_min_minutes = 1.0;
    double short_stop_max_minutes = 20.0;
    double speed_min_kmh = 20.0;
    double speed_max_kmh = 40.0;
    double fix_interval_s = 60.0;
    /// GPS jitter radius while stopped.
    double jitter_m = 15.0;
    Timestamp start = make_timestamp(2016, 7, 1);
    std::uint64_t seed = 20160701;

    /// Throws std::invalid_argument for degenerate boxes, bad probabilities, etc.
    void validate() const;
};

/// Ground-truth stop emitted alongside the fixes, for checking detection.
struct SyntheticStop {
    LonLat location;
    Timestamp arrival;
    Timestamp departure;
    bool long_dwell = false;
};

struct VehicleTrace {
    std::vector<TravelRecord> records;
    std::vector<SyntheticStop> stops;
};

std::vector<LonLat> hotspot_centres(const SynthConfig& config);

/// Generates one vehicle. Each vehicle draws from its own seed stream, so a
/// vehicle's trace does not depend on how many others are generated.
VehicleTrace generate_vehicle(const SynthConfig& config, int vehicle_index);

/// All vehicles concatenated in index order; grouped and time-sorted.
std::vector<TravelRecord> generate_trajectories(const SynthConfig& config);

} // namespace evcharge
