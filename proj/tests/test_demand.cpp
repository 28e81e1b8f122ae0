#include "evcharge/demand.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace evcharge;

namespace {

constexpr double kDegPerKmLat = 180.0 / (std::numbers::pi * kEarthRadiusKm);

Timestamp at(int h, int m, int s = 0, unsigned day = 4) { return make_timestamp(2016, 7, day, h, m, s); }

/// Fixes every `step_min` minutes at one spot.
void park(std::vector<TravelRecord>& out, const std::string& id, LonLat where, Timestamp from, int minutes,
          int step_min) {
    for (int m = 0; m <= minutes; m += step_min) {
        out.push_back({id, from + std::chrono::minutes(m), where});
    }
}

/// Drives north along a meridian in `legs` equal legs of `leg_km`, one leg per
/// `leg_min` minutes; returns the arrival position.
LonLat drive_north(std::vector<TravelRecord>& out, const std::string& id, LonLat from, Timestamp start, int legs,
                   double leg_km, int leg_min) {
    LonLat p = from;
    for (int k = 1; k <= legs; ++k) {
        p.lat += leg_km * kDegPerKmLat;
        out.push_back({id, start + std::chrono::minutes(k * leg_min), p});
    }
    return p;
}

/// Spherical law of cosines, an independent route to the great-circle distance.
double law_of_cosines_km(LonLat a, LonLat b) {
    const double r = std::numbers::pi / 180.0;
    const double c = std::sin(a.lat * r) * std::sin(b.lat * r) +
                     std::cos(a.lat * r) * std::cos(b.lat * r) * std::cos((b.lon - a.lon) * r);
    return kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

} // namespace

TEST_CASE("parse_records reads the compact timestamp row format") {
    std::istringstream in("26491,20160704141051,116.426285,39.921867\n");
    const auto res = parse_records(in);
    REQUIRE(res.errors.empty());
    REQUIRE(res.records.size() == 1);
    const auto& r = res.records[0];
    CHECK(r.vehicle_id == "26491");
    CHECK(r.time == make_timestamp(2016, 7, 4, 14, 10, 51));
    CHECK(r.position.lon == doctest::Approx(116.426285).epsilon(1e-12));
    CHECK(r.position.lat == doctest::Approx(39.921867).epsilon(1e-12));
    CHECK(format_iso8601(r.time) == "2016-07-04T14:10:51");
}

TEST_CASE("parse_records edge cases") {
    SUBCASE("empty stream") {
        std::istringstream in("");
        const auto res = parse_records(in);
        CHECK(res.records.empty());
        CHECK(res.errors.empty());
    }
    SUBCASE("out-of-range latitude becomes a row error") {
        std::istringstream in("1,20160704141051,116.4,39.9\n2,20160704141051,116.4,95.0\n");
        const auto res = parse_records(in);
        CHECK(res.records.size() == 1);
        REQUIRE(res.errors.size() == 1);
        CHECK(res.errors[0].line == 2);
        CHECK(res.errors[0].message == "latitude out of range");
    }
    SUBCASE("malformed timestamps, longitudes and field counts") {
        std::istringstream in("vehicle_id,timestamp,longitude,latitude\n"
                              "1,20161304141051,116.4,39.9\n"
                              "1,2016070414105,116.4,39.9\n"
                              "1,20160704141051,abc,39.9\n"
                              "1,20160704141051,190.0,39.9\n"
                              "1,20160704141051,116.4\n"
                              "1,20160704141051,116.4,39.9\n");
        const auto res = parse_records(in);
        CHECK(res.records.size() == 1);
        REQUIRE(res.errors.size() == 5);
        CHECK(res.errors[0].message == "malformed timestamp");
        CHECK(res.errors[1].message == "malformed timestamp");
        CHECK(res.errors[2].message == "malformed longitude");
        CHECK(res.errors[3].message == "longitude out of range");
        CHECK(res.errors[4].line == 6);
    }
    SUBCASE("records are grouped by vehicle and time-sorted") {
        std::istringstream in("b,20160704100000,116.4,39.9\n"
                              "a,20160704090000,116.4,39.9\n"
                              "b,20160704080000,116.4,39.9\n"
                              "a,20160704070000,116.4,39.9\n");
        const auto res = parse_records(in);
        REQUIRE(res.records.size() == 4);
        CHECK(res.records[0].vehicle_id == "b");
        CHECK(hour_of_day(res.records[0].time) == 8);
        CHECK(hour_of_day(res.records[1].time) == 10);
        CHECK(res.records[2].vehicle_id == "a");
        CHECK(hour_of_day(res.records[2].time) == 7);
        CHECK(vehicle_ranges(res.records).size() == 2);
    }
}

TEST_CASE("haversine_km") {
    const LonLat a{116.0, 39.0};
    CHECK(haversine_km(a, a) == 0.0);
    const LonLat b{117.0, 39.0};
    const double d = haversine_km(a, b);
    CHECK(std::fabs(d - 86.3) <= 0.5);
    CHECK(d == doctest::Approx(law_of_cosines_km(a, b)).epsilon(1e-9));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lon(-180.0, 180.0);
    std::uniform_real_distribution<double> lat(-90.0, 90.0);
    for (int k = 0; k < 500; ++k) {
        const LonLat p{lon(rng), lat(rng)};
        const LonLat q{lon(rng), lat(rng)};
        CHECK(haversine_km(p, q) == haversine_km(q, p));
        CHECK(haversine_km(p, q) >= 0.0);
        CHECK(haversine_km(p, q) <= std::numbers::pi * kEarthRadiusKm + 1e-9);
    }
}

TEST_CASE("detect_dwells") {
    const VehicleParams params;
    const LonLat spot{116.4, 39.9};
    SUBCASE("10 fixes at one spot spanning 45 minutes") {
        std::vector<TravelRecord> recs;
        for (int k = 0; k < 10; ++k) {
            recs.push_back({"v", at(8, 0) + std::chrono::seconds(300 * k), spot});
        }
        const auto dwells = detect_dwells(recs, params);
        REQUIRE(dwells.size() == 1);
        CHECK(dwells[0].duration_min() == doctest::Approx(45.0));
        CHECK(dwells[0].anchor == spot);
    }
    SUBCASE("20 minutes is below the threshold") {
        std::vector<TravelRecord> recs;
        park(recs, "v", spot, at(8, 0), 20, 5);
        CHECK(detect_dwells(recs, params).empty());
    }
    SUBCASE("fewer than two records") {
        std::vector<TravelRecord> recs{{"v", at(8, 0), spot}};
        CHECK(detect_dwells(recs, params).empty());
        CHECK(detect_dwells({}, params).empty());
    }
    SUBCASE("two stops separated by driving") {
        // 08:00-08:40 parked at A (jitter 30 m), 6 km drive, 09:00-09:35 parked at B.
        std::vector<TravelRecord> recs;
        const LonLat a{116.40, 39.90};
        for (int m = 0; m <= 40; m += 5) {
            recs.push_back({"v", at(8, m), {a.lon + (m % 10 == 0 ? 0.0 : 0.0003), a.lat}});
        }
        const LonLat b = drive_north(recs, "v", a, at(8, 40), 4, 1.5, 5);
        for (int m = 5; m <= 35; m += 5) {
            recs.push_back({"v", at(9, 0) + std::chrono::minutes(m), b});
        }
        const auto dwells = detect_dwells(recs, params);
        REQUIRE(dwells.size() == 2);
        CHECK(dwells[0].anchor == a);
        CHECK(dwells[0].start == at(8, 0));
        CHECK(dwells[0].end == at(8, 40));
        CHECK(dwells[1].anchor == b);
        CHECK(dwells[1].start == at(9, 0));
        CHECK(dwells[1].end == at(9, 35));
        CHECK(dwells[0].last < dwells[1].first);
    }
    SUBCASE("a GPS gap splits a stay") {
        std::vector<TravelRecord> recs;
        park(recs, "v", spot, at(8, 0), 20, 5);
        park(recs, "v", spot, at(9, 30), 20, 5);
        CHECK(detect_dwells(recs, params).empty());
    }
}

TEST_CASE("extract_demands converts traveled distance into energy") {
    const VehicleParams params;
    const LonLat home{116.4, 39.8};
    const auto trip_then_dwell = [&](double km) {
        std::vector<TravelRecord> recs;
        park(recs, "v", home, at(7, 0), 10, 5); // short start, no dwell
        const LonLat end = drive_north(recs, "v", home, at(7, 10), 5, km / 5.0, 10);
        park(recs, "v", end, at(8, 0) + std::chrono::minutes(10), 40, 10);
        recs.erase(recs.end() - 5); // drop the duplicate arrival fix
        return extract_demands(recs, params);
    };
    SUBCASE("25 km -> 5 kWh, 0.5 h") {
        const auto pts = trip_then_dwell(25.0);
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].weight_kwh == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(pts[0].charge_hours == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(pts[0].arrival == at(8, 0));
    }
    SUBCASE("80 km is capped at the battery capacity") {
        const auto pts = trip_then_dwell(80.0);
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].weight_kwh == 10.0);
        CHECK(pts[0].charge_hours == 1.0);
    }
    SUBCASE("a vehicle that never moves produces nothing") {
        std::vector<TravelRecord> recs;
        park(recs, "v", home, at(7, 0), 120, 5);
        CHECK(detect_dwells(recs, params).size() == 1);
        CHECK(extract_demands(recs, params).empty());
    }
    CHECK(demand_weight_kwh(25.0, params) == 5.0);
}

TEST_CASE("distance across a GPS gap is not accumulated") {
    const VehicleParams params;
    std::vector<TravelRecord> recs;
    park(recs, "v", {116.4, 39.8}, at(7, 0), 10, 5);
    // jump 20 km north after a two-hour gap, then park
    park(recs, "v", {116.4, 39.8 + 20.0 * kDegPerKmLat}, at(9, 10), 40, 5);
    const auto seg = segment_travel(recs, params);
    CHECK(seg.path_km == 0.0);
    CHECK(extract_demands(recs, params).empty());
}

TEST_CASE("segment bookkeeping conserves path length") {
    std::ifstream in(EVCHARGE_FIXTURES "/three_vehicles.csv");
    const auto parsed = parse_records(in);
    const VehicleParams params;
    for (const auto [b, e] : vehicle_ranges(parsed.records)) {
        const std::span<const TravelRecord> recs(parsed.records.data() + b, e - b);
        const auto seg = segment_travel(recs, params);
        double sum = seg.tail_km;
        for (double km : seg.km_before_dwell) {
            sum += km;
        }
        CHECK(std::fabs(sum - seg.path_km) <= 1e-9);
        for (std::size_t k = 1; k < seg.dwells.size(); ++k) {
            CHECK(seg.dwells[k - 1].end < seg.dwells[k].start);
        }
    }
}

TEST_CASE("three-vehicle fixture matches the frozen demand csv") {
    std::ifstream in(EVCHARGE_FIXTURES "/three_vehicles.csv");
    const auto parsed = parse_records(in);
    REQUIRE(parsed.errors.size() == 2);
    CHECK(parsed.errors[0].message == "latitude out of range");
    CHECK(parsed.errors[1].message == "malformed timestamp");

    const VehicleParams params;
    const auto pts = extract_demands(parsed.records, params, Exec::serial);
    for (const auto& p : pts) {
        CHECK(p.weight_kwh > 0.0);
        CHECK(p.weight_kwh <= params.battery_capacity_kwh);
        CHECK(p.charge_hours == doctest::Approx(p.weight_kwh / params.charger_power_kw));
    }
    std::ostringstream out;
    write_demands_csv(out, pts);
    std::ifstream expected_in(EVCHARGE_FIXTURES "/three_vehicles_demands.csv");
    std::stringstream expected;
    expected << expected_in.rdbuf();
    CHECK(out.str() == expected.str());

    // deterministic and identical between the serial and OpenMP paths
    const auto again = extract_demands(parsed.records, params, Exec::parallel);
    std::ostringstream out2;
    write_demands_csv(out2, again);
    CHECK(out2.str() == out.str());

    // round trip through the csv reader
    std::istringstream back(out.str());
    const auto reread = read_demands_csv(back);
    REQUIRE(reread.size() == pts.size());
    CHECK(reread[1].vehicle_id == pts[1].vehicle_id);
    CHECK(reread[1].arrival == pts[1].arrival);
}

TEST_CASE("hourly_arrival_rates") {
    const auto point = [](Timestamp t) { return DemandPoint{{116.4, 39.9}, 1.0, t, 0.1, "v"}; };
    SUBCASE("48 arrivals at 09h over two days") {
        std::vector<DemandPoint> pts;
        for (int k = 0; k < 48; ++k) {
            pts.push_back(point(at(9, k % 60, 0, k < 24 ? 4 : 5)));
        }
        const auto rates = hourly_arrival_rates(pts);
        CHECK(rates[9] == 24.0);
        for (int h = 0; h < 24; ++h) {
            if (h != 9) {
                CHECK(rates[static_cast<std::size_t>(h)] == 0.0);
            }
        }
        CHECK(peak_hour(rates) == 9);
    }
    SUBCASE("one arrival per hour over a day") {
        std::vector<DemandPoint> pts;
        for (int h = 0; h < 24; ++h) {
            pts.push_back(point(at(h, 30)));
        }
        const auto rates = hourly_arrival_rates(pts);
        for (double r : rates) {
            CHECK(r == 1.0);
        }
        CHECK(peak_hour(rates) == 0);
    }
    SUBCASE("known histogram over three days") {
        // hour: count -> 6:3, 7:6, 18:9, 23:3 spread over July 4-6
        std::vector<DemandPoint> pts;
        const std::pair<int, int> hist[] = {{6, 3}, {7, 6}, {18, 9}, {23, 3}};
        for (const auto [h, c] : hist) {
            for (int k = 0; k < c; ++k) {
                pts.push_back(point(at(h, k, 0, 4 + static_cast<unsigned>(k % 3))));
            }
        }
        CHECK(days_spanned(pts) == 3);
        const auto rates = hourly_arrival_rates(pts);
        CHECK(rates[6] == 1.0);
        CHECK(rates[7] == 2.0);
        CHECK(rates[18] == 3.0);
        CHECK(rates[23] == 1.0);
        CHECK(peak_hour(rates) == 18);
        CHECK(hourly_arrival_rates(pts, 6)[18] == 1.5);
    }
    SUBCASE("empty input") {
        const auto rates = hourly_arrival_rates({});
        for (double r : rates) {
            CHECK(r == 0.0);
        }
    }
    SUBCASE("peak ties resolve to the earliest hour") {
        HourlyRates r{};
        r[5] = 2.0;
        r[17] = 2.0;
        CHECK(peak_hour(r) == 5);
    }
}

TEST_CASE("vehicle sampling is seeded and per-vehicle") {
    std::vector<TravelRecord> recs;
    for (int v = 0; v < 200; ++v) {
        recs.push_back({std::to_string(v), at(8, 0), {116.4, 39.9}});
        recs.push_back({std::to_string(v), at(8, 5), {116.4, 39.9}});
    }
    CHECK(sample_vehicles(recs, 1.0, 3).size() == recs.size());
    CHECK(sample_vehicles(recs, 0.0, 3).empty());
    const auto a = sample_vehicles(recs, 0.1, 3);
    const auto b = sample_vehicles(recs, 0.1, 3);
    CHECK(a.size() == b.size());
    CHECK(a.size() % 2 == 0);
    CHECK(a.size() / 2 > 5);
    CHECK(a.size() / 2 < 40);
    CHECK_THROWS_AS(sample_vehicles(recs, 1.5, 3), std::invalid_argument);
}

TEST_CASE("vehicle parameters are validated") {
    VehicleParams p;
    p.charger_power_kw = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
