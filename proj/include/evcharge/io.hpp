#pragma once

#include "evcharge/planner.hpp"
#include "evcharge/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace evcharge {

using json = nlohmann::json;

/// {"p", "candidates": [{"lon","lat"}], "demands": [{"lon","lat","weight"}],
///  optional "distances": [[...]]}. Missing distances are computed by haversine.
json instance_to_json(const PlanningInstance& instance, bool include_distances = false);
PlanningInstance instance_from_json(const json& j);

/// {"p", "objective", "optimality", "wall_time_s", "nodes_explored",
///  "open_sites": [{"index","lon","lat"}], "assignment": [site index per demand]}
json solution_to_json(const PlanSolution& solution, const PlanningInstance& instance);

struct LoadedSolution {
    std::size_t p = 0;
    double objective = 0.0;
    Optimality optimality = Optimality::heuristic;
    std::vector<std::size_t> open_sites;
    std::vector<LonLat> site_locations;
};

LoadedSolution solution_from_json(const json& j);

json sim_result_to_json(const SimResult& result, const SimConfig& config);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

} // namespace evcharge
