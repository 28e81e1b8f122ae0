#pragma once

#include "evcharge/demand.hpp"
#include "evcharge/exec.hpp"
#include "evcharge/planner.hpp"
#include "evcharge/queueing.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evcharge {

/// How a total charger budget is split across stations.
enum class AllocationRule {
    /// Each extra charger goes to the station with the highest utilization.
    /// Minimises the peak utilization and never takes a charger away from a
    /// station when the budget grows, so sweeps are monotone in S.
    minimax,
    /// Smallest max - min utilization spread integrality allows. Not monotone
    /// in the budget: a station can lose a charger when S grows by one.
    min_spread,
};

struct ReportConfig {
    double drive_speed_kmh = 25.0;
    /// Weights of the per-vehicle cost wait + drive used by the tradeoff table.
    double wait_weight = 1.0;
    double drive_weight = 1.0;
    MdsVariant mds_variant = MdsVariant::damped;
    AllocationRule allocation = AllocationRule::minimax;
    DistanceFn distance = haversine_km;
};

/// One planned station and the demand it serves.
struct StationProfile {
    std::size_t site_index = 0;
    LonLat site;
    std::vector<std::size_t> demands; ///< indices into the demand list
    HourlyRates lambda_hourly{};
    double peak_lambda = 0.0;
    int peak_hour = 0;
    double mean_charge_hours = 0.0;  ///< 1 / mu
    double sigma_charge_hours = 0.0; ///< population standard deviation
    double total_weight_kwh = 0.0;
    double mean_drive_km = 0.0;      ///< demand-weighted
    double mean_drive_min = 0.0;

    /// Peak-hour offered load lambda / mu in Erlangs.
    double offered_load() const { return peak_lambda * mean_charge_hours; }
};

/// Assigns every demand to its nearest open site (ties to the lowest index)
/// and summarises each station. `n_days` scales the hourly arrival counts.
std::vector<StationProfile> build_station_profiles(std::span<const LonLat> sites, std::span<const std::size_t> site_ids,
                                                   std::span<const DemandPoint> demands, long n_days,
                                                   const ReportConfig& config = {});

std::vector<StationProfile> build_station_profiles(const PlanningInstance& instance, const PlanSolution& plan,
                                                   std::span<const DemandPoint> demands, long n_days,
                                                   const ReportConfig& config = {});

class InfeasibleAllocationError : public std::runtime_error {
  public:
    explicit InfeasibleAllocationError(int minimum_total);
    int minimum_total() const { return minimum_; }

  private:
    int minimum_;
};

/// Smallest per-station count keeping rho < 1: max(1, floor(a) + 1).
int minimum_chargers(double offered_load);

/// Distributes `total` chargers so every station is stable (s_j >= floor(a_j) + 1)
/// and utilizations a_j / s_j are as even as the rule allows. Ties go to the
/// lowest station index.
std::vector<int> allocate_chargers(std::span<const double> offered_loads, int total,
                                   AllocationRule rule = AllocationRule::minimax);
std::vector<int> allocate_chargers(std::span<const StationProfile> stations, int total,
                                   AllocationRule rule = AllocationRule::minimax);

/// rho spread of an allocation (helper for tests and reports).
double utilization_spread(std::span<const double> offered_loads, std::span<const int> chargers);

struct StationMetrics {
    int chargers = 0;
    bool overloaded = false;
    std::optional<QueueMetrics> queue; ///< absent when overloaded
    double mean_drive_km = 0.0;
    double mean_drive_min = 0.0;
};

QueueParams station_queue_params(const StationProfile& station, int chargers);

StationMetrics station_metrics(const StationProfile& station, int chargers, const ReportConfig& config = {});

std::vector<StationMetrics> all_station_metrics(std::span<const StationProfile> stations, std::span<const int> chargers,
                                                const ReportConfig& config = {}, Exec exec = Exec::parallel);

struct SweepRow {
    int total_chargers = 0;
    bool feasible = false;
    int minimum_total = 0;
    double weighted_mean_wait_h = 0.0;
    double mean_wait_h = 0.0; ///< unweighted over stations
    double weighted_p_wait = 0.0;
    double mean_p_wait = 0.0;
    double max_rho = 0.0;
    double min_rho = 0.0;
};

/// Aggregates station waits at each total charger count (sorted ascending).
/// Station weights are the assigned energy demand.
std::vector<SweepRow> sweep_chargers(std::span<const StationProfile> stations, std::vector<int> totals,
                                     const ReportConfig& config = {}, Exec exec = Exec::parallel);

struct Histogram {
    std::vector<double> edges; ///< bins [edges[k], edges[k+1]); the last bin is closed
    std::vector<int> counts;
};

enum class StationMetric { mean_wait, p_wait };

/// Equal-width bins over [lo, hi]; values outside are clamped into the end bins.
Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi);

Histogram station_histogram(std::span<const StationMetrics> metrics, StationMetric metric, int bins, double lo,
                            double hi);

/// Metric values in minutes (waits) or probability, skipping overloaded stations.
std::vector<double> station_values(std::span<const StationMetrics> metrics, StationMetric metric);

struct TradeoffRow {
    std::size_t p = 0;
    int total_chargers = 0;
    bool feasible = false;
    double weighted_mean_wait_min = 0.0;
    double weighted_mean_drive_min = 0.0;
    double total_cost_min = 0.0;
};

struct TradeoffPlan {
    std::size_t p = 0;
    std::vector<StationProfile> stations;
};

struct TradeoffReport {
    std::vector<TradeoffRow> rows;
    /// For each S the p with the smallest total cost among feasible plans (0 if none).
    std::vector<std::pair<int, std::size_t>> best_p;
};

TradeoffReport tradeoff_report(std::span<const TradeoffPlan> plans, std::vector<int> totals,
                               const ReportConfig& config = {});

/// Demand-weighted mean drive distance of a plan (objective / total weight).
double weighted_mean_drive_km(std::span<const StationProfile> stations);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_histogram_csv(std::ostream& out, const Histogram& h);
void write_stations_csv(std::ostream& out, std::span<const StationProfile> stations,
                        std::span<const StationMetrics> metrics);
void write_tradeoff_csv(std::ostream& out, const TradeoffReport& report);

} // namespace evcharge
