#include "evcharge/demand.hpp"
#include "evcharge/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace evcharge;

namespace {

std::string as_csv(const std::vector<TravelRecord>& recs) {
    std::ostringstream out;
    write_records_csv(out, recs);
    return out.str();
}

} // namespace

TEST_CASE("generation is deterministic under a fixed seed") {
    SynthConfig c;
    c.n_vehicles = 1;
    const auto a = as_csv(generate_trajectories(c));
    const auto b = as_csv(generate_trajectories(c));
    CHECK(a == b);
    CHECK(a.size() > 1000);
    c.seed += 1;
    CHECK(as_csv(generate_trajectories(c)) != a);
}

TEST_CASE("a vehicle does not depend on the fleet size") {
    SynthConfig c;
    c.n_vehicles = 3;
    const auto fleet = generate_trajectories(c);
    const auto third = generate_vehicle(c, 2).records;
    const auto ranges = vehicle_ranges(fleet);
    REQUIRE(ranges.size() == 3);
    const auto [b, e] = ranges[2];
    CHECK(std::equal(fleet.begin() + static_cast<std::ptrdiff_t>(b), fleet.begin() + static_cast<std::ptrdiff_t>(e),
                     third.begin(), third.end(), [](const TravelRecord& x, const TravelRecord& y) {
                         return x.vehicle_id == y.vehicle_id && x.time == y.time && x.position == y.position;
                     }));
}

TEST_CASE("fixes stay inside the box and below 60 km/h") {
    SynthConfig c;
    c.n_vehicles = 20;
    c.n_days = 2;
    const auto recs = generate_trajectories(c);
    for (const auto& r : recs) {
        CHECK(c.bbox.contains(r.position));
        CHECK(r.time >= c.start);
        CHECK(r.time < c.start + std::chrono::days(c.n_days));
    }
    double fastest = 0.0;
    for (const auto [b, e] : vehicle_ranges(recs)) {
        for (std::size_t k = b + 1; k < e; ++k) {
            const double h = std::chrono::duration<double>(recs[k].time - recs[k - 1].time).count() / 3600.0;
            REQUIRE(h > 0.0);
            fastest = std::max(fastest, haversine_km(recs[k - 1].position, recs[k].position) / h);
        }
    }
    CHECK(fastest <= 60.0);
    CHECK(fastest > 15.0);
}

TEST_CASE("no long dwells means no demand") {
    SynthConfig c;
    c.n_vehicles = 10;
    c.dwell_prob = 0.0;
    CHECK(extract_demands(generate_trajectories(c), VehicleParams{}).empty());
}

TEST_CASE("every long stop is detected and becomes a demand point") {
    SynthConfig c; // 100 vehicles
    const VehicleParams params;
    std::size_t long_stops = 0, demands = 0;
    for (int v = 0; v < c.n_vehicles; ++v) {
        const auto trace = generate_vehicle(c, v);
        const auto dwells = detect_dwells(trace.records, params);
        const auto points = extract_demands(trace.records, params, Exec::serial);
        // every detected dwell follows some driving, so each yields a demand point
        CHECK(points.size() == dwells.size());
        demands += points.size();
        for (const auto& stop : trace.stops) {
            if (!stop.long_dwell || stop.departure - stop.arrival < std::chrono::minutes(31)) {
                continue;
            }
            if (stop.arrival == trace.records.front().time) {
                continue; // no driving before the first stop
            }
            ++long_stops;
            // anchor-radius detection may split a stop when the anchor is an
            // approach fix; the dwells near the stop must still cover it
            auto covered = stop.arrival + std::chrono::minutes(1);
            for (const auto& d : dwells) {
                if (haversine_km(d.anchor, stop.location) <= 0.1 && d.start <= covered && d.end >= covered) {
                    covered = d.end + std::chrono::minutes(1);
                }
            }
            CHECK(covered >= stop.departure);
        }
        // short stops never trigger a dwell
        for (const auto& d : dwells) {
            const bool matches_long = std::any_of(trace.stops.begin(), trace.stops.end(), [&](const SyntheticStop& s) {
                return s.long_dwell && s.arrival <= d.end && d.start <= s.departure;
            });
            CHECK(matches_long);
        }
    }
    CHECK(long_stops > 100);
    CHECK(demands > 0);
}

TEST_CASE("the long-dwell probability peaks at the configured hour") {
    SynthConfig c;
    c.n_vehicles = 200;
    c.peak_boost = 4.0;
    std::array<int, 24> by_hour{};
    for (int v = 0; v < c.n_vehicles; ++v) {
        for (const auto& s : generate_vehicle(c, v).stops) {
            by_hour[static_cast<std::size_t>(hour_of_day(s.arrival))] += s.long_dwell;
        }
    }
    CHECK(by_hour[18] > 2 * by_hour[6]);
}

TEST_CASE("invalid configurations are rejected") {
    SynthConfig c;
    c.bbox = {116.3, 39.9, 116.3, 40.0};
    CHECK_THROWS_AS(generate_trajectories(c), std::invalid_argument);
    c = SynthConfig{};
    c.dwell_prob = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SynthConfig{};
    c.speed_max_kmh = 80.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SynthConfig{};
    c.trips_per_day_mean = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(hotspot_centres(SynthConfig{}).size() == 8);
}
