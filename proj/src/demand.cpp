#include "evcharge/demand.hpp"

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace evcharge {

void VehicleParams::validate() const {
    if (!(battery_capacity_kwh > 0.0) || !(electric_range_km > 0.0) || !(charger_power_kw > 0.0) ||
        !(dwell_threshold_min > 0.0) || !(dwell_radius_m > 0.0) || !(max_gap_min > 0.0)) {
        throw std::invalid_argument("vehicle parameters must all be strictly positive");
    }
}

double Dwell::duration_min() const {
    return std::chrono::duration<double, std::ratio<60>>(end - start).count();
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

std::optional<double> parse_double(std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

bool has_alpha(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

double minutes_between(Timestamp a, Timestamp b) {
    return std::chrono::duration<double, std::ratio<60>>(b - a).count();
}

} // namespace

void group_by_vehicle(std::vector<TravelRecord>& records) {
    std::unordered_map<std::string, std::size_t> order;
    for (const auto& r : records) {
        order.try_emplace(r.vehicle_id, order.size());
    }
    std::stable_sort(records.begin(), records.end(), [&](const TravelRecord& a, const TravelRecord& b) {
        const auto oa = order.at(a.vehicle_id);
        const auto ob = order.at(b.vehicle_id);
        if (oa != ob) {
            return oa < ob;
        }
        return a.time < b.time;
    });
}

ParseResult parse_records(std::istream& in) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) {
            continue;
        }
        const auto fields = split_csv(view);
        const bool first_content = !seen_content;
        seen_content = true;
        if (fields.size() != 4) {
            if (first_content && has_alpha(view)) {
                continue;
            }
            result.errors.push_back({line_no, fmt::format("expected 4 fields, found {}", fields.size())});
            continue;
        }
        const auto time = parse_compact_timestamp(fields[1]);
        if (!time) {
            if (first_content && has_alpha(fields[1])) {
                continue; // header row
            }
            result.errors.push_back({line_no, "malformed timestamp"});
            continue;
        }
        if (fields[0].empty()) {
            result.errors.push_back({line_no, "empty vehicle id"});
            continue;
        }
        const auto lon = parse_double(fields[2]);
        const auto lat = parse_double(fields[3]);
        if (!lon) {
            result.errors.push_back({line_no, "malformed longitude"});
            continue;
        }
        if (!lat) {
            result.errors.push_back({line_no, "malformed latitude"});
            continue;
        }
        if (*lon < -180.0 || *lon > 180.0) {
            result.errors.push_back({line_no, "longitude out of range"});
            continue;
        }
        if (*lat < -90.0 || *lat > 90.0) {
            result.errors.push_back({line_no, "latitude out of range"});
            continue;
        }
        result.records.push_back({std::string(fields[0]), *time, {*lon, *lat}});
    }
    group_by_vehicle(result.records);
    return result;
}

std::vector<Dwell> detect_dwells(std::span<const TravelRecord> records, const VehicleParams& params) {
    std::vector<Dwell> dwells;
    const std::size_t n = records.size();
    const double radius_km = params.dwell_radius_m / 1000.0;
    std::size_t i = 0;
    while (i + 1 < n) {
        std::size_t j = i + 1;
        while (j < n && minutes_between(records[j - 1].time, records[j].time) <= params.max_gap_min &&
               haversine_km(records[i].position, records[j].position) <= radius_km) {
            ++j;
        }
        const std::size_t last = j - 1;
        if (last > i && minutes_between(records[i].time, records[last].time) >= params.dwell_threshold_min) {
            dwells.push_back({records[i].position, records[i].time, records[last].time, i, last});
            i = j;
        } else {
            ++i;
        }
    }
    return dwells;
}

TravelSegments segment_travel(std::span<const TravelRecord> records, const VehicleParams& params) {
    TravelSegments seg;
    seg.dwells = detect_dwells(records, params);
    seg.km_before_dwell.reserve(seg.dwells.size());
    std::size_t next = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (k > 0 && minutes_between(records[k - 1].time, records[k].time) <= params.max_gap_min) {
            const double d = haversine_km(records[k - 1].position, records[k].position);
            acc += d;
            seg.path_km += d;
        }
        if (next < seg.dwells.size() && seg.dwells[next].first == k) {
            seg.km_before_dwell.push_back(acc);
            acc = 0.0;
            ++next;
        }
    }
    seg.tail_km = acc;
    return seg;
}

double demand_weight_kwh(double traveled_km, const VehicleParams& params) {
    return std::min(params.battery_capacity_kwh,
                    traveled_km / params.electric_range_km * params.battery_capacity_kwh);
}

std::vector<std::pair<std::size_t, std::size_t>> vehicle_ranges(std::span<const TravelRecord> records) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t begin = 0;
    for (std::size_t k = 1; k <= records.size(); ++k) {
        if (k == records.size() || records[k].vehicle_id != records[begin].vehicle_id) {
            ranges.emplace_back(begin, k);
            begin = k;
        }
    }
    return ranges;
}

namespace {

std::vector<DemandPoint> vehicle_demands(std::span<const TravelRecord> records, const VehicleParams& params) {
    std::vector<DemandPoint> out;
    const TravelSegments seg = segment_travel(records, params);
    for (std::size_t k = 0; k < seg.dwells.size(); ++k) {
        const double km = seg.km_before_dwell[k];
        if (!(km > 0.0)) {
            continue;
        }
        const double weight = demand_weight_kwh(km, params);
        out.push_back({seg.dwells[k].anchor, weight, seg.dwells[k].start, weight / params.charger_power_kw,
                       records.front().vehicle_id});
    }
    return out;
}

} // namespace

std::vector<DemandPoint> extract_demands(std::span<const TravelRecord> records, const VehicleParams& params,
                                         Exec exec) {
    params.validate();
    const auto ranges = vehicle_ranges(records);
    std::vector<std::vector<DemandPoint>> per_vehicle(ranges.size());
    const auto n = static_cast<std::ptrdiff_t>(ranges.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::ptrdiff_t v = 0; v < n; ++v) {
            const auto [b, e] = ranges[v];
            per_vehicle[v] = vehicle_demands(records.subspan(b, e - b), params);
        }
    } else {
        for (std::ptrdiff_t v = 0; v < n; ++v) {
            const auto [b, e] = ranges[v];
            per_vehicle[v] = vehicle_demands(records.subspan(b, e - b), params);
        }
    }
    std::vector<DemandPoint> all;
    for (auto& pts : per_vehicle) {
        all.insert(all.end(), std::make_move_iterator(pts.begin()), std::make_move_iterator(pts.end()));
    }
    return all;
}

long days_spanned(std::span<const DemandPoint> points) {
    if (points.empty()) {
        return 0;
    }
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const auto& a, const auto& b) { return a.arrival < b.arrival; });
    return day_index(hi->arrival) - day_index(lo->arrival) + 1;
}

HourlyRates hourly_arrival_rates(std::span<const DemandPoint> points, std::optional<long> n_days) {
    HourlyRates rates{};
    if (points.empty()) {
        return rates;
    }
    const long days = n_days.value_or(days_spanned(points));
    if (days <= 0) {
        throw std::invalid_argument("day count must be positive");
    }
    for (const auto& p : points) {
        rates[static_cast<std::size_t>(hour_of_day(p.arrival))] += 1.0;
    }
    for (double& r : rates) {
        r /= static_cast<double>(days);
    }
    return rates;
}

int peak_hour(const HourlyRates& rates) {
    return static_cast<int>(std::max_element(rates.begin(), rates.end()) - rates.begin());
}

void write_demands_csv(std::ostream& out, std::span<const DemandPoint> points) {
    out << "lon,lat,weight_kwh,arrival_iso8601,charge_hours,vehicle_id\n";
    for (const auto& p : points) {
        fmt::print(out, "{:.6f},{:.6f},{:.6f},{},{:.6f},{}\n", p.location.lon, p.location.lat, p.weight_kwh,
                   format_iso8601(p.arrival), p.charge_hours, p.vehicle_id);
    }
}

std::vector<DemandPoint> read_demands_csv(std::istream& in) {
    std::vector<DemandPoint> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || (line_no == 1 && view.starts_with("lon"))) {
            continue;
        }
        const auto f = split_csv(view);
        if (f.size() != 6) {
            throw std::runtime_error(fmt::format("demand csv line {}: expected 6 fields", line_no));
        }
        const auto lon = parse_double(f[0]);
        const auto lat = parse_double(f[1]);
        const auto weight = parse_double(f[2]);
        const auto arrival = parse_iso8601(f[3]);
        const auto charge = parse_double(f[4]);
        if (!lon || !lat || !weight || !arrival || !charge || !valid_coordinate({*lon, *lat})) {
            throw std::runtime_error(fmt::format("demand csv line {}: malformed row", line_no));
        }
        points.push_back({{*lon, *lat}, *weight, *arrival, *charge, std::string(f[5])});
    }
    return points;
}

void write_records_csv(std::ostream& out, std::span<const TravelRecord> records, bool header) {
    if (header) {
        out << "vehicle_id,timestamp,longitude,latitude\n";
    }
    for (const auto& r : records) {
        fmt::print(out, "{},{},{:.6f},{:.6f}\n", r.vehicle_id, format_compact(r.time), r.position.lon,
                   r.position.lat);
    }
}

std::vector<TravelRecord> sample_vehicles(std::span<const TravelRecord> records, double fraction,
                                          std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw std::invalid_argument("sample fraction must lie in [0, 1]");
    }
    std::vector<TravelRecord> kept;
    for (const auto& [b, e] : vehicle_ranges(records)) {
        // FNV-1a keeps the per-vehicle decision independent of file order.
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : records[b].vehicle_id) {
            h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
        }
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
        std::mt19937_64 rng(seq);
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < fraction) {
            kept.insert(kept.end(), records.begin() + static_cast<std::ptrdiff_t>(b),
                        records.begin() + static_cast<std::ptrdiff_t>(e));
        }
    }
    return kept;
}

} // namespace evcharge
