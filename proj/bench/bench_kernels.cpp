#include "evcharge/demand.hpp"
#include "evcharge/planner.hpp"
#include "evcharge/simulator.hpp"
#include "evcharge/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace evcharge;

namespace {

Exec exec_arg(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

std::vector<LonLat> random_points(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lon(116.2, 116.5), lat(39.8, 40.0);
    std::vector<LonLat> pts(n);
    for (auto& p : pts) {
        p = {lon(rng), lat(rng)};
    }
    return pts;
}

void BM_DistanceMatrix(benchmark::State& state) {
    const auto from = random_points(1, 5000);
    const auto to = random_points(2, 500);
    for (auto _ : state) {
        benchmark::DoNotOptimize(distance_matrix(from, to, haversine_km, exec_arg(state)));
    }
}

void BM_ExtractDemands(benchmark::State& state) {
    SynthConfig config;
    config.n_vehicles = 100;
    config.n_days = 2;
    const auto records = generate_trajectories(config);
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_demands(records, VehicleParams{}, exec_arg(state)));
    }
}

void BM_SolveExact(benchmark::State& state) {
    std::vector<WeightedSite> demands;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> w(0.5, 10.0);
    for (const auto& p : random_points(3, 300)) {
        demands.push_back({p, w(rng)});
    }
    const auto inst = build_instance(std::move(demands), random_points(4, 30), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_exact(inst, {}, exec_arg(state)));
    }
}

void BM_Simulate(benchmark::State& state) {
    SimConfig config;
    config.arrival = 8.0;
    config.service = ServiceDistribution::deterministic(1.0);
    config.servers = 10;
    config.n_arrivals = 100'000;
    config.replications = 8;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(config, exec_arg(state)));
    }
}

} // namespace

BENCHMARK(BM_DistanceMatrix)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractDemands)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveExact)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
