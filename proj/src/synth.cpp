#include "evcharge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace evcharge {

namespace {

constexpr double kKmPerDegreeLat = kEarthRadiusKm * std::numbers::pi / 180.0;

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t a, std::uint32_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), a, b};
    return std::mt19937_64(seq);
}

double circular_hour_distance(double a, double b) {
    const double d = std::fabs(a - b);
    return std::min(d, 24.0 - d);
}

class FleetModel {
  public:
    explicit FleetModel(const SynthConfig& config) : config_(config), centres_(hotspot_centres(config)) {
        auto rng = make_stream(config.seed, 0xFFFFFFFFu, 2u);
        std::uniform_real_distribution<double> w(0.5, 1.5);
        std::vector<double> weights(centres_.size());
        for (double& x : weights) {
            x = w(rng);
        }
        pick_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());

        double sum = 0.0;
        for (int m = 0; m < 1440; ++m) {
            sum += bump((m + 0.5) / 60.0);
        }
        bump_mean_ = sum / 1440.0;

        const double mean_long = 0.5 * (config.long_dwell_min_minutes + config.long_dwell_max_minutes);
        const double mean_short = 0.5 * (config.short_stop_min_minutes + config.short_stop_max_minutes);
        const double mean_stop = config.dwell_prob * mean_long + (1.0 - config.dwell_prob) * mean_short;
        mean_drive_min_ = 1440.0 / config.trips_per_day_mean - mean_stop;
        if (mean_drive_min_ < kMinDriveMinutes) {
            throw std::invalid_argument("trips_per_day_mean too high for the configured stop durations");
        }
    }

    static constexpr double kMinDriveMinutes = 5.0;
    static constexpr double kMinLegKm = 1.0;

    double long_dwell_probability(double hour) const {
        const double f = (1.0 + config_.peak_boost * bump(hour)) / (1.0 + config_.peak_boost * bump_mean_);
        return std::clamp(config_.dwell_prob * f, 0.0, 1.0);
    }

    double mean_drive_minutes() const { return mean_drive_min_; }

    LonLat draw_waypoint(std::mt19937_64& rng) {
        const auto& box = config_.bbox;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (centres_.empty() || unit(rng) < config_.background_share) {
            return {box.lon_min + unit(rng) * (box.lon_max - box.lon_min),
                    box.lat_min + unit(rng) * (box.lat_max - box.lat_min)};
        }
        const LonLat c = centres_[pick_(rng)];
        const double sd_lat = config_.hotspot_sigma_km / kKmPerDegreeLat;
        const double sd_lon = sd_lat / std::cos(c.lat * std::numbers::pi / 180.0);
        std::normal_distribution<double> n01(0.0, 1.0);
        LonLat p = c;
        for (int attempt = 0; attempt < 20; ++attempt) {
            p = {c.lon + sd_lon * n01(rng), c.lat + sd_lat * n01(rng)};
            if (box.contains(p)) {
                return p;
            }
        }
        return clamp(p);
    }

    LonLat clamp(LonLat p) const {
        const auto& box = config_.bbox;
        return {std::clamp(p.lon, box.lon_min, box.lon_max), std::clamp(p.lat, box.lat_min, box.lat_max)};
    }

  private:
    double bump(double hour) const {
        const double d = circular_hour_distance(hour, config_.peak_hour);
        return std::exp(-d * d / (2.0 * config_.peak_width_h * config_.peak_width_h));
    }

    const SynthConfig& config_;
    std::vector<LonLat> centres_;
    std::discrete_distribution<std::size_t> pick_;
    double bump_mean_ = 0.0;
    double mean_drive_min_ = 0.0;
};

} // namespace

void SynthConfig::validate() const {
    if (!(bbox.lon_max > bbox.lon_min) || !(bbox.lat_max > bbox.lat_min)) {
        throw std::invalid_argument("bounding box is degenerate");
    }
    if (!valid_coordinate({bbox.lon_min, bbox.lat_min}) || !valid_coordinate({bbox.lon_max, bbox.lat_max})) {
        throw std::invalid_argument("bounding box outside valid coordinates");
    }
    const auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!is_prob(dwell_prob) || !is_prob(background_share)) {
        throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
    if (n_vehicles < 0 || n_days < 1 || hotspot_count < 0) {
        throw std::invalid_argument("vehicle, day and hotspot counts must be non-negative (days >= 1)");
    }
    if (!(trips_per_day_mean > 0.0) || !(speed_min_kmh > 0.0) || speed_max_kmh < speed_min_kmh ||
        speed_max_kmh > 60.0 || !(fix_interval_s > 0.0) || !(hotspot_sigma_km > 0.0) || jitter_m < 0.0) {
        throw std::invalid_argument("rates, speeds and intervals must be positive (speed <= 60 km/h)");
    }
    if (peak_hour < 0 || peak_hour > 23 || peak_boost < 0.0 || !(peak_width_h > 0.0)) {
        throw std::invalid_argument("peak hour must lie in [0, 23] with a non-negative boost");
    }
    if (!(short_stop_min_minutes > 0.0) || short_stop_max_minutes < short_stop_min_minutes ||
        long_dwell_max_minutes < long_dwell_min_minutes) {
        throw std::invalid_argument("stop duration ranges are inverted");
    }
}

std::vector<LonLat> hotspot_centres(const SynthConfig& config) {
    auto rng = make_stream(config.seed, 0xFFFFFFFFu, 1u);
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    std::vector<LonLat> centres;
    centres.reserve(static_cast<std::size_t>(config.hotspot_count));
    const auto& box = config.bbox;
    for (int k = 0; k < config.hotspot_count; ++k) {
        const double u = unit(rng);
        const double v = unit(rng);
        centres.push_back({box.lon_min + u * (box.lon_max - box.lon_min), box.lat_min + v * (box.lat_max - box.lat_min)});
    }
    return centres;
}

VehicleTrace generate_vehicle(const SynthConfig& config, int vehicle_index) {
    config.validate();
    FleetModel model(config);
    auto rng = make_stream(config.seed, static_cast<std::uint32_t>(vehicle_index), 0x5eedu);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    VehicleTrace trace;
    const std::string id = std::to_string(10000 + vehicle_index);
    const double horizon = config.n_days * 86400.0;
    const double step = config.fix_interval_s;
    const double jitter_deg = config.jitter_m / 1000.0 / kKmPerDegreeLat;

    double t = 0.0;          // seconds since config.start
    double next_fix = 0.0;   // fixes sit on a fixed grid of fix_interval_s
    LonLat pos = model.draw_waypoint(rng);

    const auto stamp = [&](double seconds) {
        return config.start + std::chrono::seconds(static_cast<long long>(std::llround(seconds)));
    };
    const auto emit = [&](double when, LonLat where) {
        trace.records.push_back({id, stamp(when), where});
    };

    std::exponential_distribution<double> extra_drive(
        1.0 / std::max(model.mean_drive_minutes() - FleetModel::kMinDriveMinutes, 1e-9));

    while (t < horizon) {
        const double target_s = 60.0 * (FleetModel::kMinDriveMinutes + extra_drive(rng));
        double driven = 0.0;
        do {
            LonLat wp = model.draw_waypoint(rng);
            for (int attempt = 0; attempt < 50 && haversine_km(pos, wp) < FleetModel::kMinLegKm; ++attempt) {
                wp = model.draw_waypoint(rng);
            }
            const double speed = config.speed_min_kmh + unit(rng) * (config.speed_max_kmh - config.speed_min_kmh);
            const double leg_s = haversine_km(pos, wp) / speed * 3600.0;
            while (next_fix <= t + leg_s && next_fix < horizon) {
                const double f = leg_s > 0.0 ? (next_fix - t) / leg_s : 1.0;
                emit(next_fix, {pos.lon + f * (wp.lon - pos.lon), pos.lat + f * (wp.lat - pos.lat)});
                next_fix += step;
            }
            t += leg_s;
            driven += leg_s;
            pos = wp;
        } while (driven < target_s && t < horizon);
        if (t >= horizon) {
            break;
        }

        const double hour = std::fmod(t / 3600.0, 24.0);
        const bool long_dwell = unit(rng) < model.long_dwell_probability(hour);
        const double minutes =
            long_dwell ? config.long_dwell_min_minutes +
                             unit(rng) * (config.long_dwell_max_minutes - config.long_dwell_min_minutes)
                       : config.short_stop_min_minutes +
                             unit(rng) * (config.short_stop_max_minutes - config.short_stop_min_minutes);
        const double stop_s = 60.0 * minutes;
        trace.stops.push_back({pos, stamp(t), stamp(std::min(t + stop_s, horizon)), long_dwell});
        while (next_fix <= t + stop_s && next_fix < horizon) {
            const double r = jitter_deg * std::sqrt(unit(rng));
            const double a = 2.0 * std::numbers::pi * unit(rng);
            const double coslat = std::cos(pos.lat * std::numbers::pi / 180.0);
            emit(next_fix, model.clamp({pos.lon + r * std::cos(a) / coslat, pos.lat + r * std::sin(a)}));
            next_fix += step;
        }
        t += stop_s;
    }
    return trace;
}

std::vector<TravelRecord> generate_trajectories(const SynthConfig& config) {
    config.validate();
    std::vector<TravelRecord> all;
    for (int v = 0; v < config.n_vehicles; ++v) {
        auto trace = generate_vehicle(config, v);
        all.insert(all.end(), std::make_move_iterator(trace.records.begin()),
                   std::make_move_iterator(trace.records.end()));
    }
    return all;
}

} // namespace evcharge
