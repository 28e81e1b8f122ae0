#pragma once

#include "evcharge/planner.hpp"
#include "evcharge/reporting.hpp"

#include <map>
#include <string>
#include <vector>

namespace scenario {

/// The frozen desk-scale run: ~500 vehicles for a week, plans with p = 5 and
/// p = 10, a charger sweep, station histograms at one S, and the tradeoff table.
struct Plan {
    std::size_t p = 0;
    evcharge::PlanSolution solution;
    std::vector<evcharge::StationProfile> stations;
    int minimum_total = 0;
    std::vector<evcharge::SweepRow> sweep;
    std::vector<evcharge::StationMetrics> metrics_at_histogram_s;
    evcharge::Histogram wait_hist;
    evcharge::Histogram p_wait_hist;
};

struct Result {
    std::size_t vehicles = 0;
    std::size_t demand_points = 0;
    std::size_t demand_sites = 0;
    std::vector<int> totals;
    int histogram_s = 0;
    std::vector<Plan> plans; ///< p = 5 then p = 10
    evcharge::TradeoffReport tradeoff;

    /// CSV tables keyed by file name, as frozen under tests/fixtures/scenario.
    std::map<std::string, std::string> tables() const;
};

Result run();

} // namespace scenario
