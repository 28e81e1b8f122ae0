#include "evcharge/io.hpp"

#include <fstream>
#include <stdexcept>

namespace evcharge {

json instance_to_json(const PlanningInstance& instance, bool include_distances) {
    json j;
    j["p"] = instance.p;
    j["candidates"] = json::array();
    for (const auto& c : instance.candidates) {
        j["candidates"].push_back({{"lon", c.lon}, {"lat", c.lat}});
    }
    j["demands"] = json::array();
    for (const auto& d : instance.demands) {
        j["demands"].push_back({{"lon", d.location.lon}, {"lat", d.location.lat}, {"weight", d.weight}});
    }
    if (include_distances) {
        json rows = json::array();
        for (std::size_t i = 0; i < instance.distances.rows(); ++i) {
            const auto r = instance.distances.row(i);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        j["distances"] = std::move(rows);
    }
    return j;
}

PlanningInstance instance_from_json(const json& j) {
    PlanningInstance inst;
    inst.p = j.at("p").get<std::size_t>();
    for (const auto& c : j.at("candidates")) {
        inst.candidates.push_back({c.at("lon").get<double>(), c.at("lat").get<double>()});
    }
    for (const auto& d : j.at("demands")) {
        inst.demands.push_back({{d.at("lon").get<double>(), d.at("lat").get<double>()}, d.at("weight").get<double>()});
    }
    if (j.contains("distances")) {
        const auto& rows = j.at("distances");
        const std::size_t cols = rows.empty() ? inst.candidates.size() : rows.front().size();
        inst.distances = DistanceMatrix(rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) {
                throw PlanningError("distance matrix rows have unequal length");
            }
            for (std::size_t k = 0; k < cols; ++k) {
                inst.distances(i, k) = rows[i][k].get<double>();
            }
        }
    } else {
        std::vector<LonLat> from;
        for (const auto& d : inst.demands) {
            from.push_back(d.location);
        }
        inst.distances = distance_matrix(from, inst.candidates);
    }
    inst.validate();
    return inst;
}

json solution_to_json(const PlanSolution& solution, const PlanningInstance& instance) {
    json j;
    j["p"] = solution.open_sites.size();
    j["objective"] = solution.objective;
    j["optimality"] = to_string(solution.optimality);
    j["wall_time_s"] = solution.wall_time_s;
    j["nodes_explored"] = solution.nodes_explored;
    j["open_sites"] = json::array();
    for (std::size_t s : solution.open_sites) {
        json site{{"index", s}};
        if (s < instance.candidates.size()) {
            site["lon"] = instance.candidates[s].lon;
            site["lat"] = instance.candidates[s].lat;
        }
        j["open_sites"].push_back(std::move(site));
    }
    j["assignment"] = solution.assignment;
    return j;
}

LoadedSolution solution_from_json(const json& j) {
    LoadedSolution s;
    s.p = j.at("p").get<std::size_t>();
    s.objective = j.value("objective", 0.0);
    s.optimality = j.value("optimality", std::string("heuristic")) == "proven_optimal" ? Optimality::proven_optimal
                                                                                       : Optimality::heuristic;
    for (const auto& site : j.at("open_sites")) {
        s.open_sites.push_back(site.at("index").get<std::size_t>());
        s.site_locations.push_back({site.at("lon").get<double>(), site.at("lat").get<double>()});
    }
    return s;
}

namespace {

json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"half_width", e.half_width}}; }

} // namespace

json sim_result_to_json(const SimResult& result, const SimConfig& config) {
    json j;
    j["config"] = {{"service", config.service.describe()},
                   {"servers", config.servers},
                   {"n_arrivals", config.n_arrivals},
                   {"warmup", config.effective_warmup()},
                   {"seed", config.seed},
                   {"replications", config.replications}};
    if (const auto* c = std::get_if<double>(&config.arrival)) {
        j["config"]["lambda"] = *c;
    } else {
        const auto& h = std::get<HourlyRates>(config.arrival);
        j["config"]["lambda_hourly"] = std::vector<double>(h.begin(), h.end());
    }
    j["mean_wait_h"] = estimate_json(result.mean_wait);
    j["p_wait"] = estimate_json(result.p_wait);
    j["p_more_than_s"] = estimate_json(result.p_more_than_s);
    j["mean_queue_length"] = estimate_json(result.mean_queue_length);
    j["utilization_observed"] = result.utilization_observed;
    j["offered_utilization"] = result.offered_utilization;
    j["unstable"] = result.unstable;
    j["replications"] = json::array();
    for (const auto& r : result.replications) {
        j["replications"].push_back({{"mean_wait_h", r.mean_wait},
                                     {"p_wait", r.p_wait},
                                     {"p_more_than_s", r.p_more_than_s},
                                     {"mean_queue_length", r.mean_queue_length},
                                     {"utilization", r.utilization},
                                     {"arrival_rate", r.arrival_rate},
                                     {"measured", r.measured}});
    }
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace evcharge
