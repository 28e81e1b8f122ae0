#pragma once

#include "evcharge/exec.hpp"
#include "evcharge/geo.hpp"
#include "evcharge/timestamp.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evcharge {

/// One timestamped GPS fix of one vehicle.
struct TravelRecord {
    std::string vehicle_id;
    Timestamp time;
    LonLat position;
};

/// Battery, charger and dwell-detection parameters shared by the demand pipeline.
struct VehicleParams {
    double battery_capacity_kwh = 10.0;
    double electric_range_km = 50.0;
    double charger_power_kw = 10.0;
    double dwell_threshold_min = 30.0;
    double dwell_radius_m = 100.0;
    /// Fixes further apart than this split the trajectory: no distance is
    /// accumulated across the gap and no dwell spans it.
    double max_gap_min = 60.0;

    /// Throws std::invalid_argument unless every field is strictly positive.
    void validate() const;
};

/// A dwell-derived charging opportunity.
struct DemandPoint {
    LonLat location;
    double weight_kwh = 0.0;
    Timestamp arrival;
    double charge_hours = 0.0;
    std::string vehicle_id;
};

struct ParseError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    /// Grouped by vehicle in order of first appearance, time-sorted within a vehicle.
    std::vector<TravelRecord> records;
    std::vector<ParseError> errors;
};

/// Reads `vehicle_id,timestamp,longitude,latitude` rows. A header line is
/// optional. Bad rows become error entries; parsing continues.
ParseResult parse_records(std::istream& in);

struct Dwell {
    LonLat anchor;
    Timestamp start;
    Timestamp end;
    std::size_t first = 0; ///< index of the anchor record
    std::size_t last = 0;  ///< index of the final record in the run

    double duration_min() const;
};

/// Anchor-radius stay-point detection over one vehicle's time-sorted records.
std::vector<Dwell> detect_dwells(std::span<const TravelRecord> records, const VehicleParams& params);

/// Traveled-distance bookkeeping for one vehicle. Distance accumulates over
/// consecutive fixes (gaps excluded) and is handed to a dwell when it starts.
struct TravelSegments {
    std::vector<Dwell> dwells;
    std::vector<double> km_before_dwell; ///< one entry per dwell
    double tail_km = 0.0;                ///< distance after the final dwell
    double path_km = 0.0;                ///< total path length, gaps excluded
};

TravelSegments segment_travel(std::span<const TravelRecord> records, const VehicleParams& params);

/// Energy needed to cover `traveled_km`, capped at the battery capacity.
double demand_weight_kwh(double traveled_km, const VehicleParams& params);

/// Index ranges [begin, end) of each vehicle's records in a grouped sequence.
std::vector<std::pair<std::size_t, std::size_t>> vehicle_ranges(std::span<const TravelRecord> records);

/// Sorts records into per-vehicle groups (first-appearance order) with
/// non-decreasing timestamps; stable for equal timestamps.
void group_by_vehicle(std::vector<TravelRecord>& records);

/// Converts every dwell with positive prior travel into a demand point. The
/// input must be grouped by vehicle (as produced by parse_records).
std::vector<DemandPoint> extract_demands(std::span<const TravelRecord> records,
                                         const VehicleParams& params, Exec exec = Exec::parallel);

using HourlyRates = std::array<double, 24>;

/// Number of calendar days from the first to the last arrival, inclusive.
long days_spanned(std::span<const DemandPoint> points);

/// Arrivals per hour of day averaged over `n_days` (days_spanned when absent).
HourlyRates hourly_arrival_rates(std::span<const DemandPoint> points,
                                 std::optional<long> n_days = std::nullopt);

/// argmax with ties resolved toward the earliest hour.
int peak_hour(const HourlyRates& rates);

void write_demands_csv(std::ostream& out, std::span<const DemandPoint> points);
std::vector<DemandPoint> read_demands_csv(std::istream& in);
/// `header` = false appends rows only, for writing one vehicle at a time.
void write_records_csv(std::ostream& out, std::span<const TravelRecord> records, bool header = true);

/// Keeps each vehicle with probability `fraction`, decided by a seeded draw per vehicle.
std::vector<TravelRecord> sample_vehicles(std::span<const TravelRecord> records, double fraction,
                                          std::uint64_t seed);

} // namespace evcharge
