// evcharge: trajectories -> demand -> station plan -> congestion reports.

#include "evcharge/demand.hpp"
#include "evcharge/io.hpp"
#include "evcharge/planner.hpp"
#include "evcharge/queueing.hpp"
#include "evcharge/reporting.hpp"
#include "evcharge/simulator.hpp"
#include "evcharge/synth.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace evcharge;

namespace {

struct Globals {
    std::uint64_t seed = 20160701;
    fs::path out_dir = ".";
    bool serial = false;

    Exec exec() const { return serial ? Exec::serial : Exec::parallel; }
};

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    return out;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    }
    return in;
}

/// Resolves relative output names against --out-dir.
fs::path output_path(const Globals& g, const fs::path& name) { return name.is_absolute() ? name : g.out_dir / name; }

/// Records one run in <out-dir>/manifest.json under "<command>:<first output>",
/// so repeated commands writing different files keep separate entries.
void record_run(const Globals& g, const std::string& command, json params, const std::vector<fs::path>& outputs,
                json summary = json::object()) {
    const fs::path path = g.out_dir / "manifest.json";
    json manifest = json::object();
    if (fs::exists(path)) {
        manifest = read_json_file(path);
    }
    json outs = json::array();
    for (const auto& o : outputs) {
        outs.push_back(o.lexically_relative(g.out_dir).generic_string());
    }
    const std::string key = outs.empty() ? command : command + ":" + outs[0].get<std::string>();
    manifest["tool"] = "evcharge";
    manifest["runs"][key] = {{"command", command},
                             {"seed", g.seed},
                             {"exec", g.serial ? "serial" : "parallel"},
                             {"parameters", std::move(params)},
                             {"outputs", std::move(outs)},
                             {"summary", std::move(summary)}};
    fs::create_directories(g.out_dir);
    write_json_file(path, manifest);
}

std::vector<DemandPoint> load_demands(const fs::path& path) {
    auto in = open_input(path);
    return read_demands_csv(in);
}

std::vector<int> charger_range(int lo, int hi, int step) {
    if (step < 1 || hi < lo) {
        throw std::invalid_argument("charger range needs s-min <= s-max and step >= 1");
    }
    std::vector<int> out;
    for (int s = lo; s <= hi; s += step) {
        out.push_back(s);
    }
    return out;
}

int minimum_total(std::span<const StationProfile> stations) {
    int total = 0;
    for (const auto& st : stations) {
        total += minimum_chargers(st.offered_load());
    }
    return total;
}

AllocationRule parse_allocation(const std::string& name) {
    if (name == "minimax") {
        return AllocationRule::minimax;
    }
    if (name == "min-spread") {
        return AllocationRule::min_spread;
    }
    throw std::invalid_argument("allocation rule must be minimax or min-spread");
}

MdsVariant parse_variant(const std::string& name) {
    if (name == "damped") {
        return MdsVariant::damped;
    }
    if (name == "cosmetatos") {
        return MdsVariant::cosmetatos;
    }
    throw std::invalid_argument("mds variant must be damped or cosmetatos");
}

/// Station profiles of a saved plan; demands are re-assigned to the nearest open site.
std::vector<StationProfile> plan_stations(const fs::path& solution_path, std::span<const DemandPoint> demands,
                                          long n_days, const ReportConfig& config) {
    const auto sol = solution_from_json(read_json_file(solution_path));
    return build_station_profiles(sol.site_locations, sol.open_sites, demands, n_days, config);
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    SynthConfig config;
    std::vector<double> bbox;
    std::string start = "2016-07-01";
    fs::path output = "records.csv";
};

void run_synth(const Globals& g, SynthArgs& a) {
    auto& c = a.config;
    c.seed = g.seed;
    if (!a.bbox.empty()) {
        c.bbox = {a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]};
    }
    const auto start = parse_iso8601(a.start + "T00:00:00");
    if (!start) {
        throw std::invalid_argument("--start must be YYYY-MM-DD");
    }
    c.start = *start;
    c.validate();

    const auto path = output_path(g, a.output);
    auto out = open_output(path);
    std::size_t n_records = 0, n_long = 0;
    for (int v = 0; v < c.n_vehicles; ++v) {
        const auto trace = generate_vehicle(c, v);
        write_records_csv(out, trace.records, v == 0);
        n_records += trace.records.size();
        n_long += static_cast<std::size_t>(std::count_if(trace.stops.begin(), trace.stops.end(),
                                                         [](const SyntheticStop& s) { return s.long_dwell; }));
    }
    if (c.n_vehicles == 0) {
        write_records_csv(out, {});
    }
    fmt::print("synth: {} vehicles, {} records, {} long dwells -> {}\n", c.n_vehicles, n_records, n_long,
               path.string());
    record_run(g, "synth",
               {{"vehicles", c.n_vehicles},
                {"days", c.n_days},
                {"bbox", {c.bbox.lon_min, c.bbox.lat_min, c.bbox.lon_max, c.bbox.lat_max}},
                {"hotspots", c.hotspot_count},
                {"trips_per_day", c.trips_per_day_mean},
                {"dwell_prob", c.dwell_prob},
                {"peak_hour", c.peak_hour},
                {"start", a.start}},
               {path}, {{"records", n_records}, {"long_dwells", n_long}});
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
    fs::path input;
    fs::path output = "demands.csv";
    fs::path errors = "parse_errors.csv";
    double sample_fraction = 1.0;
    VehicleParams params;
};

void run_extract(const Globals& g, ExtractArgs& a) {
    a.params.validate();
    auto in = open_input(a.input);
    auto parsed = parse_records(in);
    std::vector<TravelRecord> records = a.sample_fraction < 1.0
                                            ? sample_vehicles(parsed.records, a.sample_fraction, g.seed)
                                            : std::move(parsed.records);
    const auto points = extract_demands(records, a.params, g.exec());

    const auto out_path = output_path(g, a.output);
    auto out = open_output(out_path);
    write_demands_csv(out, points);
    const auto err_path = output_path(g, a.errors);
    auto err = open_output(err_path);
    err << "line,message\n";
    for (const auto& e : parsed.errors) {
        fmt::print(err, "{},{}\n", e.line, e.message);
    }
    const std::size_t vehicles = vehicle_ranges(records).size();
    fmt::print("extract: {} vehicles, {} records, {} rejected rows, {} demand points -> {}\n", vehicles,
               records.size(), parsed.errors.size(), points.size(), out_path.string());
    record_run(g, "extract",
               {{"input", a.input.string()},
                {"sample_fraction", a.sample_fraction},
                {"battery_kwh", a.params.battery_capacity_kwh},
                {"range_km", a.params.electric_range_km},
                {"charger_kw", a.params.charger_power_kw},
                {"dwell_min", a.params.dwell_threshold_min},
                {"dwell_radius_m", a.params.dwell_radius_m},
                {"max_gap_min", a.params.max_gap_min}},
               {out_path, err_path},
               {{"vehicles", vehicles}, {"demand_points", points.size()}, {"rejected_rows", parsed.errors.size()}});
}

// ---------------------------------------------------------------- plan

struct PlanArgs {
    fs::path demands;
    std::size_t p = 0;
    int grid_count = 500;
    std::vector<int> grid;
    fs::path candidates;
    std::string method = "auto";
    double aggregate_m = 0.0;
    ExactOptions exact;
    bool verify = false;
    fs::path output = "solution.json";
    fs::path instance_out;
};

std::vector<LonLat> read_candidates(const fs::path& path) {
    auto in = open_input(path);
    std::vector<LonLat> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || (n == 1 && line.rfind("lon", 0) == 0)) {
            continue;
        }
        LonLat p{};
        char comma = 0;
        std::istringstream row(line);
        if (!(row >> p.lon >> comma >> p.lat) || comma != ',' || !valid_coordinate(p)) {
            throw std::runtime_error(fmt::format("{}:{}: expected lon,lat", path.string(), n));
        }
        out.push_back(p);
    }
    return out;
}

void run_plan(const Globals& g, PlanArgs& a) {
    const auto points = load_demands(a.demands);
    if (points.empty()) {
        throw std::runtime_error("no demand points to plan for");
    }
    auto sites = to_weighted_sites(points);
    if (a.aggregate_m > 0.0) {
        sites = aggregate_demands(sites, a.aggregate_m);
    }
    CandidateSpec spec = GridCount{a.grid_count};
    if (!a.candidates.empty()) {
        spec = read_candidates(a.candidates);
    } else if (!a.grid.empty()) {
        spec = GridSpec{a.grid[0], a.grid[1]};
    }
    const auto inst = build_instance(std::move(sites), spec, a.p, haversine_km, g.exec());

    std::string method = a.method;
    if (method == "auto") {
        method = inst.n_candidates() <= a.exact.max_candidates ? "exact" : "heuristic";
    }
    PlanSolution sol;
    if (method == "exact") {
        sol = solve_exact(inst, a.exact, g.exec());
    } else if (method == "heuristic") {
        sol = solve_heuristic(inst, g.seed);
    } else {
        throw std::invalid_argument("--method must be auto, exact or heuristic");
    }

    json j = solution_to_json(sol, inst);
    if (a.verify) {
        const auto rep = verify_relaxation(inst, a.exact);
        j["relaxation"] = {{"binary_objective", rep.binary_objective},
                           {"relaxed_objective", rep.relaxed_objective},
                           {"ties", rep.ties.size()},
                           {"consistent", rep.consistent()}};
    }
    const auto path = output_path(g, a.output);
    fs::create_directories(path.parent_path());
    write_json_file(path, j);
    std::vector<fs::path> outputs{path};
    if (!a.instance_out.empty()) {
        const auto ipath = output_path(g, a.instance_out);
        write_json_file(ipath, instance_to_json(inst));
        outputs.push_back(ipath);
    }
    fmt::print("plan: p={} |U|={} |V|={} objective={:.6f} kWh*km ({}, {} nodes, {:.3f}s) -> {}\n", a.p,
               inst.n_candidates(), inst.n_demands(), sol.objective, to_string(sol.optimality), sol.nodes_explored,
               sol.wall_time_s, path.string());
    record_run(g, "plan",
               {{"demands", a.demands.string()},
                {"p", a.p},
                {"grid_count", a.grid_count},
                {"grid", a.grid},
                {"candidates", a.candidates.string()},
                {"method", method},
                {"aggregate_m", a.aggregate_m},
                {"max_candidates", a.exact.max_candidates}},
               outputs,
               {{"objective", sol.objective},
                {"optimality", to_string(sol.optimality)},
                {"candidates", inst.n_candidates()},
                {"demand_sites", inst.n_demands()}});
}

// ---------------------------------------------------------------- analyze / sweep / tradeoff

struct ReportArgs {
    fs::path demands;
    fs::path solution;
    std::vector<fs::path> solutions;
    long days = 0;
    int chargers = 0;
    int s_min = 0;
    int s_max = 0;
    int s_step = 1;
    int bins = 20;
    double wait_max_min = 0.0;
    double pwait_max = 1.0;
    std::string variant = "damped";
    std::string allocation = "minimax";
    ReportConfig config;
    fs::path output;
};

long report_days(const ReportArgs& a, std::span<const DemandPoint> demands) {
    return a.days > 0 ? a.days : std::max(1L, days_spanned(demands));
}

json report_params(const ReportArgs& a, long n_days) {
    return {{"demands", a.demands.string()},
            {"days", n_days},
            {"speed_kmh", a.config.drive_speed_kmh},
            {"mds_variant", a.variant},
            {"allocation", a.allocation},
            {"wait_weight", a.config.wait_weight},
            {"drive_weight", a.config.drive_weight}};
}

void run_analyze(const Globals& g, ReportArgs& a) {
    a.config.mds_variant = parse_variant(a.variant);
    a.config.allocation = parse_allocation(a.allocation);
    const auto demands = load_demands(a.demands);
    const long n_days = report_days(a, demands);
    const auto stations = plan_stations(a.solution, demands, n_days, a.config);
    const int total = a.chargers > 0 ? a.chargers : minimum_total(stations);
    const auto chargers = allocate_chargers(stations, total, a.config.allocation);
    const auto metrics = all_station_metrics(stations, chargers, a.config, g.exec());

    const auto stations_path = output_path(g, a.output.empty() ? fs::path("stations.csv") : a.output);
    auto out = open_output(stations_path);
    write_stations_csv(out, stations, metrics);

    const auto waits = station_values(metrics, StationMetric::mean_wait);
    const double wait_hi =
        a.wait_max_min > 0.0 ? a.wait_max_min : std::max(1e-9, waits.empty() ? 1.0 : *std::max_element(waits.begin(), waits.end()));
    const auto wait_path = output_path(g, "hist_mean_wait.csv");
    auto wout = open_output(wait_path);
    write_histogram_csv(wout, station_histogram(metrics, StationMetric::mean_wait, a.bins, 0.0, wait_hi));
    const auto pwait_path = output_path(g, "hist_p_wait.csv");
    auto pout = open_output(pwait_path);
    write_histogram_csv(pout, station_histogram(metrics, StationMetric::p_wait, a.bins, 0.0, a.pwait_max));

    const auto rows = sweep_chargers(stations, {total}, a.config, g.exec());
    fmt::print("analyze: {} stations, S={}, weighted mean wait {:.3f} min, weighted P(wait) {:.4f} -> {}\n",
               stations.size(), total, rows[0].weighted_mean_wait_h * 60.0, rows[0].weighted_p_wait,
               stations_path.string());
    auto params = report_params(a, n_days);
    params["solution"] = a.solution.string();
    params["chargers"] = total;
    params["bins"] = a.bins;
    record_run(g, "analyze", params, {stations_path, wait_path, pwait_path},
               {{"stations", stations.size()},
                {"weighted_mean_wait_min", rows[0].weighted_mean_wait_h * 60.0},
                {"weighted_p_wait", rows[0].weighted_p_wait},
                {"weighted_mean_drive_km", weighted_mean_drive_km(stations)}});
}

void run_sweep(const Globals& g, ReportArgs& a) {
    a.config.mds_variant = parse_variant(a.variant);
    a.config.allocation = parse_allocation(a.allocation);
    const auto demands = load_demands(a.demands);
    const long n_days = report_days(a, demands);
    const auto stations = plan_stations(a.solution, demands, n_days, a.config);
    const int lo = a.s_min > 0 ? a.s_min : minimum_total(stations);
    const int hi = a.s_max > 0 ? a.s_max : lo + 4 * static_cast<int>(stations.size());
    const auto rows = sweep_chargers(stations, charger_range(lo, hi, a.s_step), a.config, g.exec());

    const auto path = output_path(g, a.output.empty() ? fs::path("sweep.csv") : a.output);
    auto out = open_output(path);
    write_sweep_csv(out, rows);
    fmt::print("sweep: {} stations, S={}..{} ({} rows) -> {}\n", stations.size(), lo, hi, rows.size(),
               path.string());
    auto params = report_params(a, n_days);
    params["solution"] = a.solution.string();
    params["s_min"] = lo;
    params["s_max"] = hi;
    params["s_step"] = a.s_step;
    record_run(g, "sweep", params, {path}, {{"stations", stations.size()}, {"minimum_total", minimum_total(stations)}});
}

void run_tradeoff(const Globals& g, ReportArgs& a) {
    a.config.mds_variant = parse_variant(a.variant);
    a.config.allocation = parse_allocation(a.allocation);
    const auto demands = load_demands(a.demands);
    const long n_days = report_days(a, demands);
    std::vector<TradeoffPlan> plans;
    int lo = 0;
    for (const auto& s : a.solutions) {
        auto stations = plan_stations(s, demands, n_days, a.config);
        lo = std::max(lo, minimum_total(stations));
        plans.push_back({stations.size(), std::move(stations)});
    }
    if (a.s_min > 0) {
        lo = a.s_min;
    }
    const int hi = a.s_max > 0 ? a.s_max : 2 * lo;
    const auto report = tradeoff_report(plans, charger_range(lo, hi, a.s_step), a.config);

    const auto path = output_path(g, a.output.empty() ? fs::path("tradeoff.csv") : a.output);
    auto out = open_output(path);
    write_tradeoff_csv(out, report);
    json best = json::array();
    for (const auto& [s, p] : report.best_p) {
        best.push_back({{"total_chargers", s}, {"best_p", p}});
    }
    fmt::print("tradeoff: {} plans, S={}..{} -> {}\n", plans.size(), lo, hi, path.string());
    auto params = report_params(a, n_days);
    json sols = json::array();
    for (const auto& s : a.solutions) {
        sols.push_back(s.string());
    }
    params["solutions"] = sols;
    params["s_min"] = lo;
    params["s_max"] = hi;
    params["s_step"] = a.s_step;
    record_run(g, "tradeoff", params, {path}, {{"best_p", best}});
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    double lambda = 1.0;
    std::vector<double> hourly;
    std::string service = "exponential";
    double mean = 1.0;
    double sd = 1.0;
    int erlang_k = 2;
    int servers = 1;
    long arrivals = 1'000'000;
    long warmup = -1;
    int replications = 20;
    std::string variant = "damped";
    fs::path output = "simulation.json";
};

ServiceDistribution make_service(const SimulateArgs& a) {
    if (a.service == "deterministic") {
        return ServiceDistribution::deterministic(a.mean);
    }
    if (a.service == "exponential") {
        return ServiceDistribution::exponential(a.mean);
    }
    if (a.service == "erlang") {
        return ServiceDistribution::erlang(a.erlang_k, a.mean);
    }
    if (a.service == "lognormal") {
        return ServiceDistribution::lognormal(a.mean, a.sd);
    }
    throw std::invalid_argument("--service must be deterministic, exponential, erlang or lognormal");
}

void run_simulate(const Globals& g, SimulateArgs& a) {
    SimConfig c;
    if (a.hourly.empty()) {
        c.arrival = a.lambda;
    } else {
        HourlyRates r{};
        std::copy(a.hourly.begin(), a.hourly.end(), r.begin());
        c.arrival = r;
    }
    c.service = make_service(a);
    c.servers = a.servers;
    c.n_arrivals = a.arrivals;
    c.warmup = a.warmup;
    c.seed = g.seed;
    c.replications = a.replications;
    const auto result = simulate(c, g.exec());

    json j = sim_result_to_json(result, c);
    j["empirical_p_wait"] = {{"mean", empirical_waiting_probability(result).mean},
                             {"half_width", empirical_waiting_probability(result).half_width}};
    if (a.hourly.empty() && !result.unstable) {
        const QueueParams q{a.lambda, 1.0 / c.service.mean(), c.service.stddev(), c.servers};
        const auto m = evaluate(q, parse_variant(a.variant));
        j["analytic"] = {{"w_mms_h", m.w_mms}, {"w_mds_h", m.w_mds}, {"w_mgs_h", m.w_mgs},
                         {"c_delay", m.c_delay}, {"p_wait", m.p_wait}, {"variant", a.variant}};
    }
    const auto path = output_path(g, a.output);
    fs::create_directories(path.parent_path());
    write_json_file(path, j);
    fmt::print("simulate: {} s={} rho={:.4f} mean wait {:.6f} h +/- {:.6f}, P(wait) {:.4f}{} -> {}\n",
               c.service.describe(), c.servers, result.offered_utilization, result.mean_wait.mean,
               result.mean_wait.half_width, result.p_wait.mean, result.unstable ? " (unstable)" : "",
               path.string());
    record_run(g, "simulate",
               {{"lambda", a.lambda},
                {"hourly", a.hourly},
                {"service", c.service.describe()},
                {"servers", a.servers},
                {"arrivals", a.arrivals},
                {"warmup", c.effective_warmup()},
                {"replications", a.replications}},
               {path}, {{"mean_wait_h", result.mean_wait.mean}, {"unstable", result.unstable}});
}

void add_report_options(CLI::App* cmd, ReportArgs& a) {
    cmd->add_option("--demands", a.demands, "demand-point CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--days", a.days, "days used to turn arrival counts into hourly rates (default: spanned)");
    cmd->add_option("--speed", a.config.drive_speed_kmh, "driving speed for access times, km/h")
        ->capture_default_str();
    cmd->add_option("--mds-variant", a.variant, "M/D/s correction: damped or cosmetatos")->capture_default_str();
    cmd->add_option("--allocation", a.allocation, "charger split: minimax or min-spread")->capture_default_str();
    cmd->add_option("--wait-weight", a.config.wait_weight, "weight of waiting time in the tradeoff cost")
        ->capture_default_str();
    cmd->add_option("--drive-weight", a.config.drive_weight, "weight of driving time in the tradeoff cost")
        ->capture_default_str();
    cmd->add_option("--output", a.output, "output file (relative to --out-dir)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Charging-station siting and congestion analysis"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value configuration file ([command] sections for subcommands)");
    Globals g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "directory for outputs and manifest.json")->capture_default_str();
    app.add_flag("--serial", g.serial, "run the serial reference kernels instead of OpenMP");

    SynthArgs synth;
    auto* cmd_synth = app.add_subcommand("synth", "generate synthetic taxi trajectories");
    cmd_synth->add_option("--vehicles", synth.config.n_vehicles)->capture_default_str();
    cmd_synth->add_option("--days", synth.config.n_days)->capture_default_str();
    cmd_synth->add_option("--bbox", synth.bbox, "lon_min lat_min lon_max lat_max")->expected(4)->delimiter(',');
    cmd_synth->add_option("--hotspots", synth.config.hotspot_count)->capture_default_str();
    cmd_synth->add_option("--hotspot-sigma-km", synth.config.hotspot_sigma_km)->capture_default_str();
    cmd_synth->add_option("--trips-per-day", synth.config.trips_per_day_mean)->capture_default_str();
    cmd_synth->add_option("--dwell-prob", synth.config.dwell_prob, "mean share of stops >= 32 min")
        ->capture_default_str();
    cmd_synth->add_option("--peak-hour", synth.config.peak_hour)->capture_default_str();
    cmd_synth->add_option("--peak-boost", synth.config.peak_boost)->capture_default_str();
    cmd_synth->add_option("--start", synth.start, "first day, YYYY-MM-DD")->capture_default_str();
    cmd_synth->add_option("--output", synth.output)->capture_default_str();
    cmd_synth->callback([&] { run_synth(g, synth); });

    ExtractArgs extract;
    auto* cmd_extract = app.add_subcommand("extract", "turn trajectory records into charging demand points");
    cmd_extract->add_option("--input", extract.input, "vehicle_id,timestamp,longitude,latitude CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_extract->add_option("--output", extract.output)->capture_default_str();
    cmd_extract->add_option("--errors", extract.errors, "rejected rows")->capture_default_str();
    cmd_extract->add_option("--sample-fraction", extract.sample_fraction, "share of vehicles kept (seeded)")
        ->capture_default_str();
    cmd_extract->add_option("--battery-kwh", extract.params.battery_capacity_kwh)->capture_default_str();
    cmd_extract->add_option("--range-km", extract.params.electric_range_km)->capture_default_str();
    cmd_extract->add_option("--charger-kw", extract.params.charger_power_kw)->capture_default_str();
    cmd_extract->add_option("--dwell-min", extract.params.dwell_threshold_min)->capture_default_str();
    cmd_extract->add_option("--dwell-radius-m", extract.params.dwell_radius_m)->capture_default_str();
    cmd_extract->add_option("--max-gap-min", extract.params.max_gap_min)->capture_default_str();
    cmd_extract->callback([&] { run_extract(g, extract); });

    PlanArgs plan;
    auto* cmd_plan = app.add_subcommand("plan", "choose p station sites (p-median)");
    cmd_plan->add_option("--demands", plan.demands)->required()->check(CLI::ExistingFile);
    cmd_plan->add_option("-p,--p", plan.p, "number of stations")->required();
    cmd_plan->add_option("--grid-count", plan.grid_count, "candidate grid size")->capture_default_str();
    cmd_plan->add_option("--grid", plan.grid, "explicit candidate grid nx,ny")->expected(2)->delimiter(',');
    cmd_plan->add_option("--candidates", plan.candidates, "lon,lat candidate CSV")->check(CLI::ExistingFile);
    cmd_plan->add_option("--method", plan.method, "auto, exact or heuristic")->capture_default_str();
    cmd_plan->add_option("--aggregate-m", plan.aggregate_m, "snap demands to square cells (0 = off)")
        ->capture_default_str();
    cmd_plan->add_option("--max-candidates", plan.exact.max_candidates, "largest |U| for the exact solver")
        ->capture_default_str();
    cmd_plan->add_flag("--allow-large", plan.exact.allow_large, "let the exact solver run past the limit");
    cmd_plan->add_flag("--verify-relaxation", plan.verify, "check the relaxed assignment on the exact optimum");
    cmd_plan->add_option("--output", plan.output)->capture_default_str();
    cmd_plan->add_option("--instance-output", plan.instance_out, "also write the instance JSON");
    cmd_plan->callback([&] { run_plan(g, plan); });

    ReportArgs analyze;
    auto* cmd_analyze = app.add_subcommand("analyze", "per-station peak-hour congestion for one plan");
    add_report_options(cmd_analyze, analyze);
    cmd_analyze->add_option("--solution", analyze.solution)->required()->check(CLI::ExistingFile);
    cmd_analyze->add_option("-S,--chargers", analyze.chargers, "total chargers (default: stability minimum)");
    cmd_analyze->add_option("--bins", analyze.bins)->capture_default_str();
    cmd_analyze->add_option("--wait-max", analyze.wait_max_min, "upper edge of the wait histogram, minutes");
    cmd_analyze->add_option("--pwait-max", analyze.pwait_max)->capture_default_str();
    cmd_analyze->callback([&] { run_analyze(g, analyze); });

    ReportArgs sweep;
    auto* cmd_sweep = app.add_subcommand("sweep", "aggregate waits over a range of total charger counts");
    add_report_options(cmd_sweep, sweep);
    cmd_sweep->add_option("--solution", sweep.solution)->required()->check(CLI::ExistingFile);
    cmd_sweep->add_option("--s-min", sweep.s_min, "default: stability minimum");
    cmd_sweep->add_option("--s-max", sweep.s_max, "default: s-min + 4 per station");
    cmd_sweep->add_option("--s-step", sweep.s_step)->capture_default_str();
    cmd_sweep->callback([&] { run_sweep(g, sweep); });

    ReportArgs tradeoff;
    auto* cmd_tradeoff = app.add_subcommand("tradeoff", "waiting vs driving time across plans");
    add_report_options(cmd_tradeoff, tradeoff);
    cmd_tradeoff->add_option("--solutions", tradeoff.solutions, "solution JSON files")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_tradeoff->add_option("--s-min", tradeoff.s_min, "default: largest stability minimum");
    cmd_tradeoff->add_option("--s-max", tradeoff.s_max, "default: 2 * s-min");
    cmd_tradeoff->add_option("--s-step", tradeoff.s_step)->capture_default_str();
    cmd_tradeoff->callback([&] { run_tradeoff(g, tradeoff); });

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "discrete-event simulation of an M/G/s queue");
    cmd_sim->add_option("--lambda", sim.lambda, "arrivals per hour")->capture_default_str();
    cmd_sim->add_option("--hourly", sim.hourly, "24 hourly arrival rates (overrides --lambda)")
        ->expected(24)
        ->delimiter(',');
    cmd_sim->add_option("--service", sim.service, "deterministic, exponential, erlang or lognormal")
        ->capture_default_str();
    cmd_sim->add_option("--mean", sim.mean, "mean service time, hours")->capture_default_str();
    cmd_sim->add_option("--sd", sim.sd, "lognormal standard deviation, hours")->capture_default_str();
    cmd_sim->add_option("--erlang-k", sim.erlang_k)->capture_default_str();
    cmd_sim->add_option("-s,--servers", sim.servers)->capture_default_str();
    cmd_sim->add_option("--arrivals", sim.arrivals, "arrivals per replication")->capture_default_str();
    cmd_sim->add_option("--warmup", sim.warmup, "default: 10% of arrivals, at least 10^4");
    cmd_sim->add_option("--replications", sim.replications)->capture_default_str();
    cmd_sim->add_option("--mds-variant", sim.variant)->capture_default_str();
    cmd_sim->add_option("--output", sim.output)->capture_default_str();
    cmd_sim->callback([&] { run_simulate(g, sim); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        fmt::print(stderr, "evcharge: {}\n", e.what());
        return 1;
    }
    return 0;
}
