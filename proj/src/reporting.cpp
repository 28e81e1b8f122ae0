#include "evcharge/reporting.hpp"

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace evcharge {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Station profiles

std::vector<StationProfile> build_station_profiles(std::span<const LonLat> sites, std::span<const std::size_t> site_ids,
                                                   std::span<const DemandPoint> demands, long n_days,
                                                   const ReportConfig& config) {
    if (sites.size() != site_ids.size()) {
        throw std::invalid_argument("one site id per site is required");
    }
    std::vector<StationProfile> stations(sites.size());
    for (std::size_t k = 0; k < sites.size(); ++k) {
        stations[k].site_index = site_ids[k];
        stations[k].site = sites[k];
    }
    if (sites.empty()) {
        return stations;
    }
    std::vector<LonLat> locations;
    locations.reserve(demands.size());
    for (const auto& d : demands) {
        locations.push_back(d.location);
    }
    const DistanceMatrix dist = distance_matrix(locations, sites, config.distance);

    std::vector<double> drive_km(demands.size(), 0.0);
    for (std::size_t i = 0; i < demands.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < sites.size(); ++k) {
            const double d = dist(i, k);
            if (d < dist(i, best) || (d == dist(i, best) && site_ids[k] < site_ids[best])) {
                best = k;
            }
        }
        stations[best].demands.push_back(i);
        drive_km[i] = dist(i, best);
    }

    for (auto& st : stations) {
        std::vector<DemandPoint> mine;
        mine.reserve(st.demands.size());
        double weighted_km = 0.0;
        double sum_h = 0.0;
        for (std::size_t i : st.demands) {
            mine.push_back(demands[i]);
            st.total_weight_kwh += demands[i].weight_kwh;
            weighted_km += demands[i].weight_kwh * drive_km[i];
            sum_h += demands[i].charge_hours;
        }
        if (mine.empty()) {
            continue;
        }
        st.lambda_hourly = hourly_arrival_rates(mine, n_days);
        st.peak_hour = peak_hour(st.lambda_hourly);
        st.peak_lambda = st.lambda_hourly[static_cast<std::size_t>(st.peak_hour)];
        const double n = static_cast<double>(mine.size());
        st.mean_charge_hours = sum_h / n;
        double ss = 0.0;
        for (const auto& d : mine) {
            ss += (d.charge_hours - st.mean_charge_hours) * (d.charge_hours - st.mean_charge_hours);
        }
        st.sigma_charge_hours = std::sqrt(ss / n);
        st.mean_drive_km = st.total_weight_kwh > 0.0 ? weighted_km / st.total_weight_kwh : 0.0;
        st.mean_drive_min = st.mean_drive_km / config.drive_speed_kmh * 60.0;
    }
    return stations;
}

std::vector<StationProfile> build_station_profiles(const PlanningInstance& instance, const PlanSolution& plan,
                                                   std::span<const DemandPoint> demands, long n_days,
                                                   const ReportConfig& config) {
    std::vector<LonLat> sites;
    for (std::size_t j : plan.open_sites) {
        sites.push_back(instance.candidates.at(j));
    }
    return build_station_profiles(sites, plan.open_sites, demands, n_days, config);
}

// ---------------------------------------------------------------------------
// Charger allocation

InfeasibleAllocationError::InfeasibleAllocationError(int minimum_total)
    : std::runtime_error(fmt::format("at least {} chargers are needed to keep every station stable", minimum_total)),
      minimum_(minimum_total) {}

int minimum_chargers(double offered_load) {
    if (!(offered_load >= 0.0) || !std::isfinite(offered_load)) {
        throw std::invalid_argument("offered load must be finite and non-negative");
    }
    return std::max(1, static_cast<int>(std::floor(offered_load)) + 1);
}

double utilization_spread(std::span<const double> a, std::span<const int> s) {
    double hi = -kInf;
    double lo = kInf;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double rho = a[j] / s[j];
        hi = std::max(hi, rho);
        lo = std::min(lo, rho);
    }
    return a.empty() ? 0.0 : hi - lo;
}

namespace {

/// Adds `extra` chargers one at a time; `key(j, s_j)` ranks candidates and the
/// largest key wins, ties to the lowest index.
template <class Key>
void add_greedily(std::span<const double> a, std::vector<int>& s, int extra, Key key) {
    for (int step = 0; step < extra; ++step) {
        std::size_t pick = 0;
        double best = -kInf;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double k = key(a[j], s[j]);
            if (k > best) {
                best = k;
                pick = j;
            }
        }
        ++s[pick];
    }
}

/// Highest-current-utilization first: minimises the largest utilization.
void add_minimax(std::span<const double> a, std::vector<int>& s, int extra) {
    add_greedily(a, s, extra, [](double load, int n) { return load / n; });
}

/// Highest utilization-after-adding first: maximises the smallest utilization.
void add_maximin(std::span<const double> a, std::vector<int>& s, int extra) {
    add_greedily(a, s, extra, [](double load, int n) { return load / (n + 1); });
}

int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

double min_utilization(std::span<const double> a, const std::vector<int>& s) {
    double lo = kInf;
    for (std::size_t j = 0; j < a.size(); ++j) {
        lo = std::min(lo, a[j] / s[j]);
    }
    return lo;
}

double max_utilization(std::span<const double> a, const std::vector<int>& s) {
    double hi = -kInf;
    for (std::size_t j = 0; j < a.size(); ++j) {
        hi = std::max(hi, a[j] / s[j]);
    }
    return hi;
}

} // namespace

std::vector<int> allocate_chargers(std::span<const double> a, int total, AllocationRule rule) {
    if (a.empty()) {
        throw std::invalid_argument("no stations to allocate chargers to");
    }
    std::vector<int> floor_counts(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        floor_counts[j] = minimum_chargers(a[j]);
    }
    const int minimum = sum(floor_counts);
    if (total < minimum) {
        throw InfeasibleAllocationError(minimum);
    }
    const int spare = total - minimum;
    if (rule == AllocationRule::minimax) {
        add_minimax(a, floor_counts, spare);
        return floor_counts;
    }

    // Smallest achievable peak utilization and largest achievable floor.
    std::vector<int> minimax = floor_counts;
    add_minimax(a, minimax, spare);
    const double u_min = max_utilization(a, minimax);
    std::vector<int> maximin = floor_counts;
    add_maximin(a, maximin, spare);
    const double l_max = min_utilization(a, maximin);

    // The optimal peak utilization is one of the values a_j / k.
    std::vector<double> caps{u_min};
    for (std::size_t j = 0; j < a.size(); ++j) {
        for (int k = floor_counts[j]; k <= floor_counts[j] + spare; ++k) {
            const double u = a[j] / k;
            if (u < u_min) {
                break;
            }
            caps.push_back(u);
        }
    }
    std::sort(caps.begin(), caps.end());
    caps.erase(std::unique(caps.begin(), caps.end()), caps.end());

    std::vector<int> best = minimax;
    double best_spread = u_min - min_utilization(a, minimax);
    std::vector<int> lower(a.size());
    for (double cap : caps) {
        if (cap - l_max >= best_spread) {
            break;
        }
        // Fewest chargers per station that keep utilization <= cap.
        int used = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            int k = std::max(floor_counts[j], static_cast<int>(std::ceil(a[j] / cap)));
            while (k > floor_counts[j] && a[j] / (k - 1) <= cap) {
                --k;
            }
            while (a[j] / k > cap) {
                ++k;
            }
            lower[j] = k;
            used += k;
        }
        if (used > total) {
            continue;
        }
        std::vector<int> s = lower;
        add_maximin(a, s, total - used);
        const double spread = max_utilization(a, s) - min_utilization(a, s);
        if (spread < best_spread - 1e-15) {
            best_spread = spread;
            best = std::move(s);
        }
    }
    return best;
}

std::vector<int> allocate_chargers(std::span<const StationProfile> stations, int total, AllocationRule rule) {
    std::vector<double> loads;
    loads.reserve(stations.size());
    for (const auto& st : stations) {
        loads.push_back(st.offered_load());
    }
    return allocate_chargers(loads, total, rule);
}

// ---------------------------------------------------------------------------
// Metrics

QueueParams station_queue_params(const StationProfile& station, int chargers) {
    QueueParams q;
    q.lambda = station.peak_lambda;
    q.mu = station.mean_charge_hours > 0.0 ? 1.0 / station.mean_charge_hours : 1.0;
    q.sigma = station.sigma_charge_hours;
    q.servers = chargers;
    return q;
}

StationMetrics station_metrics(const StationProfile& station, int chargers, const ReportConfig& config) {
    StationMetrics m;
    m.chargers = chargers;
    m.mean_drive_km = station.mean_drive_km;
    m.mean_drive_min = station.mean_drive_min;
    if (station.demands.empty() || station.peak_lambda == 0.0) {
        m.queue = QueueMetrics{};
        return m;
    }
    try {
        m.queue = evaluate(station_queue_params(station, chargers), config.mds_variant);
    } catch (const UnstableQueueError&) {
        m.overloaded = true;
        m.queue.reset();
    }
    return m;
}

std::vector<StationMetrics> all_station_metrics(std::span<const StationProfile> stations, std::span<const int> chargers,
                                                const ReportConfig& config, Exec exec) {
    std::vector<StationMetrics> out(stations.size());
    const auto n = static_cast<std::ptrdiff_t>(stations.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            out[k] = station_metrics(stations[k], chargers[k], config);
        }
    } else {
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            out[k] = station_metrics(stations[k], chargers[k], config);
        }
    }
    return out;
}

std::vector<SweepRow> sweep_chargers(std::span<const StationProfile> stations, std::vector<int> totals,
                                     const ReportConfig& config, Exec exec) {
    std::sort(totals.begin(), totals.end());
    std::vector<SweepRow> rows;
    rows.reserve(totals.size());
    for (int total : totals) {
        SweepRow row;
        row.total_chargers = total;
        std::vector<int> alloc;
        try {
            alloc = allocate_chargers(stations, total, config.allocation);
        } catch (const InfeasibleAllocationError& e) {
            row.minimum_total = e.minimum_total();
            rows.push_back(row);
            continue;
        }
        const auto metrics = all_station_metrics(stations, alloc, config, exec);
        row.feasible = true;
        row.minimum_total = 0;
        for (const auto& st : stations) {
            row.minimum_total += minimum_chargers(st.offered_load());
        }
        double wsum = 0.0;
        row.max_rho = -kInf;
        row.min_rho = kInf;
        for (std::size_t k = 0; k < stations.size(); ++k) {
            const auto& q = *metrics[k].queue;
            const double w = stations[k].total_weight_kwh;
            wsum += w;
            row.weighted_mean_wait_h += w * q.w_mgs;
            row.weighted_p_wait += w * q.p_wait;
            row.mean_wait_h += q.w_mgs;
            row.mean_p_wait += q.p_wait;
            row.max_rho = std::max(row.max_rho, q.rho);
            row.min_rho = std::min(row.min_rho, q.rho);
        }
        const double n = static_cast<double>(stations.size());
        if (wsum > 0.0) {
            row.weighted_mean_wait_h /= wsum;
            row.weighted_p_wait /= wsum;
        }
        row.mean_wait_h /= n;
        row.mean_p_wait /= n;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Histograms

Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi) {
    if (bins < 1 || !(hi > lo)) {
        throw std::invalid_argument("histogram needs at least one bin and hi > lo");
    }
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int k = 0; k <= bins; ++k) {
        h.edges.push_back(lo + (hi - lo) * k / bins);
    }
    for (double v : values) {
        auto k = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
        k = std::clamp(k, 0L, static_cast<long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(k)];
    }
    return h;
}

std::vector<double> station_values(std::span<const StationMetrics> metrics, StationMetric metric) {
    std::vector<double> values;
    for (const auto& m : metrics) {
        if (!m.queue) {
            continue;
        }
        values.push_back(metric == StationMetric::mean_wait ? m.queue->w_mgs * 60.0 : m.queue->p_wait);
    }
    return values;
}

Histogram station_histogram(std::span<const StationMetrics> metrics, StationMetric metric, int bins, double lo,
                            double hi) {
    return make_histogram(station_values(metrics, metric), bins, lo, hi);
}

// ---------------------------------------------------------------------------
// Wait / drive tradeoff

double weighted_mean_drive_km(std::span<const StationProfile> stations) {
    double w = 0.0;
    double km = 0.0;
    for (const auto& st : stations) {
        w += st.total_weight_kwh;
        km += st.total_weight_kwh * st.mean_drive_km;
    }
    return w > 0.0 ? km / w : 0.0;
}

TradeoffReport tradeoff_report(std::span<const TradeoffPlan> plans, std::vector<int> totals,
                               const ReportConfig& config) {
    std::sort(totals.begin(), totals.end());
    TradeoffReport report;
    std::vector<std::vector<SweepRow>> sweeps;
    for (const auto& plan : plans) {
        sweeps.push_back(sweep_chargers(plan.stations, totals, config));
    }
    for (std::size_t t = 0; t < totals.size(); ++t) {
        std::size_t best_p = 0;
        double best_cost = kInf;
        for (std::size_t k = 0; k < plans.size(); ++k) {
            const auto& sw = sweeps[k][t];
            TradeoffRow row;
            row.p = plans[k].p;
            row.total_chargers = totals[t];
            row.feasible = sw.feasible;
            row.weighted_mean_drive_min = weighted_mean_drive_km(plans[k].stations) / config.drive_speed_kmh * 60.0;
            if (sw.feasible) {
                row.weighted_mean_wait_min = sw.weighted_mean_wait_h * 60.0;
                row.total_cost_min =
                    config.wait_weight * row.weighted_mean_wait_min + config.drive_weight * row.weighted_mean_drive_min;
                if (row.total_cost_min < best_cost) {
                    best_cost = row.total_cost_min;
                    best_p = row.p;
                }
            }
            report.rows.push_back(row);
        }
        report.best_p.emplace_back(totals[t], best_p);
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV output

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "total_chargers,feasible,minimum_total,weighted_mean_wait_min,mean_wait_min,weighted_p_wait,mean_p_wait,"
           "max_rho,min_rho\n";
    for (const auto& r : rows) {
        if (!r.feasible) {
            fmt::print(out, "{},0,{},,,,,,\n", r.total_chargers, r.minimum_total);
            continue;
        }
        fmt::print(out, "{},1,{},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", r.total_chargers, r.minimum_total,
                   r.weighted_mean_wait_h * 60.0, r.mean_wait_h * 60.0, r.weighted_p_wait, r.mean_p_wait, r.max_rho,
                   r.min_rho);
    }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        fmt::print(out, "{:.9g},{:.9g},{}\n", h.edges[k], h.edges[k + 1], h.counts[k]);
    }
}

void write_stations_csv(std::ostream& out, std::span<const StationProfile> stations,
                        std::span<const StationMetrics> metrics) {
    out << "site_index,lon,lat,demands,total_weight_kwh,peak_hour,peak_lambda,mean_charge_h,sigma_charge_h,chargers,"
           "overloaded,rho,xi,w_mms_min,w_mds_min,w_mgs_min,p0,c_delay,zeta,p_wait,mean_drive_km,mean_drive_min\n";
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& st = stations[k];
        const auto& m = metrics[k];
        fmt::print(out, "{},{:.6f},{:.6f},{},{:.6f},{},{:.6f},{:.6f},{:.6f},{},{},", st.site_index, st.site.lon,
                   st.site.lat, st.demands.size(), st.total_weight_kwh, st.peak_hour, st.peak_lambda,
                   st.mean_charge_hours, st.sigma_charge_hours, m.chargers, m.overloaded ? 1 : 0);
        if (m.queue) {
            const auto& q = *m.queue;
            fmt::print(out, "{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},", q.rho, q.xi,
                       q.w_mms * 60.0, q.w_mds * 60.0, q.w_mgs * 60.0, q.p0, q.c_delay, q.zeta, q.p_wait);
        } else {
            out << ",,,,,,,,,";
        }
        fmt::print(out, "{:.6f},{:.6f}\n", st.mean_drive_km, st.mean_drive_min);
    }
}

void write_tradeoff_csv(std::ostream& out, const TradeoffReport& report) {
    out << "p,total_chargers,feasible,weighted_mean_wait_min,weighted_mean_drive_min,total_cost_min,best_p_for_S\n";
    for (const auto& r : report.rows) {
        std::size_t best = 0;
        for (const auto& [s, p] : report.best_p) {
            if (s == r.total_chargers) {
                best = p;
            }
        }
        if (!r.feasible) {
            fmt::print(out, "{},{},0,,{:.9f},,{}\n", r.p, r.total_chargers, r.weighted_mean_drive_min, best);
            continue;
        }
        fmt::print(out, "{},{},1,{:.9f},{:.9f},{:.9f},{}\n", r.p, r.total_chargers, r.weighted_mean_wait_min,
                   r.weighted_mean_drive_min, r.total_cost_min, best);
    }
}

} // namespace evcharge
