#include "evcharge/io.hpp"

#include <doctest.h>

#include <filesystem>

using namespace evcharge;

TEST_CASE("instance json round trip") {
    std::vector<WeightedSite> demands{{{116.30, 39.90}, 2.5}, {{116.35, 39.95}, 1.0}, {{116.41, 39.93}, 7.25}};
    const auto inst = build_instance(demands, GridSpec{3, 2}, 2);

    const auto with = instance_from_json(instance_to_json(inst, true));
    CHECK(with.p == 2);
    CHECK(with.candidates == inst.candidates);
    CHECK(with.distances == inst.distances);
    CHECK(with.demands[2].weight == 7.25);

    const auto without = instance_from_json(instance_to_json(inst, false));
    CHECK(without.distances == inst.distances);

    auto bad = instance_to_json(inst);
    bad["p"] = 9;
    CHECK_THROWS_AS(instance_from_json(bad), PlanningError);
}

TEST_CASE("solution json round trip") {
    std::vector<WeightedSite> demands{{{116.30, 39.90}, 2.5}, {{116.35, 39.95}, 1.0}, {{116.41, 39.93}, 7.25}};
    const auto inst = build_instance(demands, GridSpec{3, 2}, 2);
    const auto sol = solve_exact(inst);
    const auto j = solution_to_json(sol, inst);
    CHECK(j["optimality"] == "proven_optimal");
    CHECK(j["assignment"].size() == 3);

    const auto path = std::filesystem::temp_directory_path() / "evcharge_solution_roundtrip.json";
    write_json_file(path, j);
    const auto back = solution_from_json(read_json_file(path));
    std::filesystem::remove(path);
    CHECK(back.p == 2);
    CHECK(back.objective == sol.objective);
    CHECK(back.optimality == Optimality::proven_optimal);
    CHECK(back.open_sites == sol.open_sites);
    REQUIRE(back.site_locations.size() == 2);
    CHECK(back.site_locations[1] == inst.candidates[sol.open_sites[1]]);
}

TEST_CASE("simulation results serialise every replication") {
    SimConfig c;
    c.arrival = 0.5;
    c.n_arrivals = 20'000;
    c.replications = 3;
    const auto r = simulate(c);
    const auto j = sim_result_to_json(r, c);
    CHECK(j["replications"].size() == 3);
    CHECK(j["mean_wait_h"]["mean"].get<double>() == r.mean_wait.mean);
    CHECK(j["config"]["servers"] == 1);
}

TEST_CASE("missing files raise") {
    CHECK_THROWS(read_json_file("/nonexistent/evcharge.json"));
}
