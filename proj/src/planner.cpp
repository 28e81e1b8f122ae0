#include "evcharge/planner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>

namespace evcharge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

DistanceMatrix distance_matrix(std::span<const LonLat> from, std::span<const LonLat> to, const DistanceFn& dist,
                               Exec exec) {
    DistanceMatrix m(from.size(), to.size());
    const auto rows = static_cast<std::ptrdiff_t>(from.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < to.size(); ++j) {
                m(i, j) = dist(from[i], to[j]);
            }
        }
    } else {
        for (std::ptrdiff_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < to.size(); ++j) {
                m(i, j) = dist(from[i], to[j]);
            }
        }
    }
    return m;
}

void PlanningInstance::validate() const {
    if (distances.rows() != demands.size()) {
        throw PlanningError("distance matrix rows do not match the demand count");
    }
    if (!candidates.empty() && distances.cols() != candidates.size()) {
        throw PlanningError("distance matrix columns do not match the candidate count");
    }
    const std::size_t nu = distances.cols();
    if (p < 1 || p > nu) {
        throw PlanningError("station budget p must satisfy 1 <= p <= number of candidates");
    }
    for (const auto& d : demands) {
        if (!(d.weight > 0.0)) {
            throw PlanningError("demand weights must be positive");
        }
    }
    for (std::size_t i = 0; i < distances.rows(); ++i) {
        for (double v : distances.row(i)) {
            if (!(v >= 0.0)) {
                throw PlanningError("distances must be non-negative");
            }
        }
    }
}

BoundingBox demand_bounds(std::span<const WeightedSite> demands) {
    if (demands.empty()) {
        throw PlanningError("cannot bound an empty demand set");
    }
    BoundingBox box{kInf, kInf, -kInf, -kInf};
    for (const auto& d : demands) {
        box.lon_min = std::min(box.lon_min, d.location.lon);
        box.lat_min = std::min(box.lat_min, d.location.lat);
        box.lon_max = std::max(box.lon_max, d.location.lon);
        box.lat_max = std::max(box.lat_max, d.location.lat);
    }
    return box;
}

std::vector<LonLat> grid_candidates(const BoundingBox& box, GridSpec grid) {
    if (grid.nx < 1 || grid.ny < 1) {
        throw PlanningError("grid dimensions must be positive");
    }
    std::vector<LonLat> cells;
    cells.reserve(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny));
    const double dlon = (box.lon_max - box.lon_min) / grid.nx;
    const double dlat = (box.lat_max - box.lat_min) / grid.ny;
    for (int y = 0; y < grid.ny; ++y) {
        for (int x = 0; x < grid.nx; ++x) {
            cells.push_back({box.lon_min + (x + 0.5) * dlon, box.lat_min + (y + 0.5) * dlat});
        }
    }
    return cells;
}

GridSpec grid_for_count(const BoundingBox& box, int count) {
    if (count < 1) {
        throw PlanningError("grid count must be positive");
    }
    const double mid_lat = 0.5 * (box.lat_min + box.lat_max) * std::numbers::pi / 180.0;
    const double width = (box.lon_max - box.lon_min) * kKmPerDegree * std::cos(mid_lat);
    const double height = (box.lat_max - box.lat_min) * kKmPerDegree;
    const double target = std::log(std::max(width, 1e-9) / std::max(height, 1e-9));
    GridSpec best{count, 1};
    double best_err = kInf;
    for (int nx = 1; nx <= count; ++nx) {
        if (count % nx != 0) {
            continue;
        }
        const int ny = count / nx;
        const double err = std::fabs(std::log(static_cast<double>(nx) / ny) - target);
        if (err < best_err) {
            best_err = err;
            best = {nx, ny};
        }
    }
    return best;
}

PlanningInstance build_instance(std::vector<WeightedSite> demands, const CandidateSpec& candidates, std::size_t p,
                                const DistanceFn& dist, Exec exec) {
    PlanningInstance inst;
    inst.p = p;
    if (const auto* explicit_sites = std::get_if<std::vector<LonLat>>(&candidates)) {
        inst.candidates = *explicit_sites;
    } else if (const auto* grid = std::get_if<GridSpec>(&candidates)) {
        inst.candidates = grid_candidates(demand_bounds(demands), *grid);
    } else {
        const auto box = demand_bounds(demands);
        inst.candidates = grid_candidates(box, grid_for_count(box, std::get<GridCount>(candidates).count));
    }
    if (p > inst.candidates.size()) {
        throw PlanningError("station budget p exceeds the number of candidate sites");
    }
    std::vector<LonLat> locations;
    locations.reserve(demands.size());
    for (const auto& d : demands) {
        locations.push_back(d.location);
    }
    inst.demands = std::move(demands);
    inst.distances = distance_matrix(locations, inst.candidates, dist, exec);
    inst.validate();
    return inst;
}

PlanningInstance instance_from_matrix(DistanceMatrix distances, std::vector<double> weights, std::size_t p) {
    PlanningInstance inst;
    inst.p = p;
    inst.demands.reserve(weights.size());
    for (double w : weights) {
        inst.demands.push_back({{}, w});
    }
    inst.distances = std::move(distances);
    inst.validate();
    return inst;
}

std::vector<WeightedSite> to_weighted_sites(std::span<const DemandPoint> points) {
    std::vector<WeightedSite> sites;
    sites.reserve(points.size());
    for (const auto& p : points) {
        sites.push_back({p.location, p.weight_kwh});
    }
    return sites;
}

std::vector<WeightedSite> aggregate_demands(std::span<const WeightedSite> demands, double cell_m) {
    if (!(cell_m > 0.0)) {
        throw PlanningError("aggregation cell size must be positive");
    }
    if (demands.empty()) {
        return {};
    }
    const auto box = demand_bounds(demands);
    const double mid_lat = 0.5 * (box.lat_min + box.lat_max) * std::numbers::pi / 180.0;
    const double cell_km = cell_m / 1000.0;
    struct Acc {
        double w = 0.0, lon = 0.0, lat = 0.0;
    };
    std::map<std::pair<long, long>, Acc> cells;
    for (const auto& d : demands) {
        const long x = static_cast<long>(
            std::floor((d.location.lon - box.lon_min) * kKmPerDegree * std::cos(mid_lat) / cell_km));
        const long y = static_cast<long>(std::floor((d.location.lat - box.lat_min) * kKmPerDegree / cell_km));
        auto& a = cells[{y, x}];
        a.w += d.weight;
        a.lon += d.weight * d.location.lon;
        a.lat += d.weight * d.location.lat;
    }
    std::vector<WeightedSite> out;
    out.reserve(cells.size());
    for (const auto& [key, a] : cells) {
        out.push_back({{a.lon / a.w, a.lat / a.w}, a.w});
    }
    return out;
}

std::string to_string(Optimality o) { return o == Optimality::proven_optimal ? "proven_optimal" : "heuristic"; }

std::vector<std::size_t> nearest_assignment(const PlanningInstance& instance, std::span<const std::size_t> open) {
    std::vector<std::size_t> sorted(open.begin(), open.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> assign(instance.n_demands(), 0);
    for (std::size_t i = 0; i < instance.n_demands(); ++i) {
        double best = kInf;
        for (std::size_t j : sorted) {
            const double d = instance.distances(i, j);
            if (d < best) {
                best = d;
                assign[i] = j;
            }
        }
    }
    return assign;
}

double assignment_objective(const PlanningInstance& instance, std::span<const std::size_t> assignment) {
    double total = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        total += instance.demands[i].weight * instance.distances(i, assignment[i]);
    }
    return total;
}

double evaluate_open_set(const PlanningInstance& instance, std::span<const std::size_t> open) {
    return assignment_objective(instance, nearest_assignment(instance, open));
}

PlanSolution make_solution(const PlanningInstance& instance, std::vector<std::size_t> open, Optimality optimality) {
    std::sort(open.begin(), open.end());
    PlanSolution sol;
    sol.assignment = nearest_assignment(instance, open);
    sol.objective = assignment_objective(instance, sol.assignment);
    sol.open_sites = std::move(open);
    sol.optimality = optimality;
    return sol;
}

// ---------------------------------------------------------------------------
// Greedy + Teitz-Bart interchange

namespace {

std::vector<std::size_t> greedy_sites(const PlanningInstance& inst) {
    const std::size_t nv = inst.n_demands();
    const std::size_t nu = inst.distances.cols();
    std::vector<double> nearest(nv, kInf);
    std::vector<char> is_open(nu, 0);
    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < inst.p; ++k) {
        std::size_t best_j = nu;
        double best_cost = kInf;
        for (std::size_t j = 0; j < nu; ++j) {
            if (is_open[j]) {
                continue;
            }
            double cost = 0.0;
            for (std::size_t i = 0; i < nv; ++i) {
                cost += inst.demands[i].weight * std::min(nearest[i], inst.distances(i, j));
            }
            if (cost < best_cost || best_j == nu) {
                best_cost = cost;
                best_j = j;
            }
        }
        is_open[best_j] = 1;
        open.push_back(best_j);
        for (std::size_t i = 0; i < nv; ++i) {
            nearest[i] = std::min(nearest[i], inst.distances(i, best_j));
        }
    }
    std::sort(open.begin(), open.end());
    return open;
}

/// Nearest / second-nearest open site per demand.
struct Coverage {
    std::vector<double> d1, d2;
    std::vector<std::size_t> c1;

    void rebuild(const PlanningInstance& inst, std::span<const std::size_t> open) {
        const std::size_t nv = inst.n_demands();
        d1.assign(nv, kInf);
        d2.assign(nv, kInf);
        c1.assign(nv, 0);
        for (std::size_t i = 0; i < nv; ++i) {
            for (std::size_t j : open) {
                const double d = inst.distances(i, j);
                if (d < d1[i]) {
                    d2[i] = d1[i];
                    d1[i] = d;
                    c1[i] = j;
                } else if (d < d2[i]) {
                    d2[i] = d;
                }
            }
        }
    }
};

std::vector<std::size_t> interchange(const PlanningInstance& inst, std::vector<std::size_t> open, std::uint64_t seed) {
    const std::size_t nv = inst.n_demands();
    const std::size_t nu = inst.distances.cols();
    std::vector<char> is_open(nu, 0);
    for (std::size_t j : open) {
        is_open[j] = 1;
    }
    Coverage cov;
    cov.rebuild(inst, open);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(nu);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> loss(nu, 0.0);

    double objective = evaluate_open_set(inst, open);
    bool improved = true;
    while (improved) {
        improved = false;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t j : order) {
            if (is_open[j]) {
                continue;
            }
            double common = 0.0;
            for (std::size_t r : open) {
                loss[r] = 0.0;
            }
            for (std::size_t i = 0; i < nv; ++i) {
                const double w = inst.demands[i].weight;
                const double dij = inst.distances(i, j);
                if (dij < cov.d1[i]) {
                    common += w * (dij - cov.d1[i]);
                } else {
                    loss[cov.c1[i]] += w * (std::min(dij, cov.d2[i]) - cov.d1[i]);
                }
            }
            std::size_t best_r = open.front();
            for (std::size_t r : open) {
                if (loss[r] < loss[best_r] || (loss[r] == loss[best_r] && r < best_r)) {
                    best_r = r;
                }
            }
            const double delta = common + loss[best_r];
            if (delta < -1e-12 * std::max(1.0, objective)) {
                std::replace(open.begin(), open.end(), best_r, j);
                is_open[best_r] = 0;
                is_open[j] = 1;
                cov.rebuild(inst, open);
                objective = evaluate_open_set(inst, open);
                improved = true;
            }
        }
    }
    std::sort(open.begin(), open.end());
    return open;
}

} // namespace

PlanSolution solve_greedy(const PlanningInstance& instance) {
    instance.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto sol = make_solution(instance, greedy_sites(instance), Optimality::heuristic);
    sol.wall_time_s = seconds_since(t0);
    return sol;
}

PlanSolution solve_heuristic(const PlanningInstance& instance, std::uint64_t seed) {
    instance.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto open = interchange(instance, greedy_sites(instance), seed);
    auto sol = make_solution(instance, std::move(open), Optimality::heuristic);
    sol.wall_time_s = seconds_since(t0);
    return sol;
}

// ---------------------------------------------------------------------------
// Lagrangian relaxation

namespace {

enum class SiteStatus : signed char { closed = -1, free = 0, open = 1 };

struct NodeBound {
    double value = 0.0;
    std::vector<double> site_gain; ///< sum_i min(0, c_ij - u_i) per candidate
    std::vector<std::size_t> sites;
    std::vector<double> subgradient;
};

/// Lagrangian bound with some sites forced open or closed.
NodeBound node_bound(const PlanningInstance& inst, std::span<const SiteStatus> status, std::span<const double> u) {
    const std::size_t nv = inst.n_demands();
    const std::size_t nu = inst.distances.cols();
    NodeBound nb;
    nb.site_gain.assign(nu, 0.0);
    for (std::size_t i = 0; i < nv; ++i) {
        const double w = inst.demands[i].weight;
        const auto row = inst.distances.row(i);
        for (std::size_t j = 0; j < nu; ++j) {
            const double reduced = w * row[j] - u[i];
            if (reduced < 0.0) {
                nb.site_gain[j] += reduced;
            }
        }
    }
    std::vector<std::size_t> free_sites;
    for (std::size_t j = 0; j < nu; ++j) {
        if (status[j] == SiteStatus::open) {
            nb.sites.push_back(j);
        } else if (status[j] == SiteStatus::free) {
            free_sites.push_back(j);
        }
    }
    const std::size_t need = inst.p - nb.sites.size();
    std::partial_sort(free_sites.begin(), free_sites.begin() + static_cast<std::ptrdiff_t>(need), free_sites.end(),
                      [&](std::size_t a, std::size_t b) {
                          return nb.site_gain[a] < nb.site_gain[b] || (nb.site_gain[a] == nb.site_gain[b] && a < b);
                      });
    nb.sites.insert(nb.sites.end(), free_sites.begin(), free_sites.begin() + static_cast<std::ptrdiff_t>(need));
    std::sort(nb.sites.begin(), nb.sites.end());

    double total = std::accumulate(u.begin(), u.end(), 0.0);
    for (std::size_t j : nb.sites) {
        total += nb.site_gain[j];
    }
    nb.value = total;
    nb.subgradient.assign(nv, 1.0);
    for (std::size_t i = 0; i < nv; ++i) {
        const double w = inst.demands[i].weight;
        for (std::size_t j : nb.sites) {
            if (w * inst.distances(i, j) - u[i] < 0.0) {
                nb.subgradient[i] -= 1.0;
            }
        }
    }
    return nb;
}

} // namespace

LagrangianBound lower_bound(const PlanningInstance& instance, std::span<const double> multipliers) {
    instance.validate();
    if (multipliers.size() != instance.n_demands()) {
        throw PlanningError("one multiplier per demand is required");
    }
    const std::vector<SiteStatus> status(instance.distances.cols(), SiteStatus::free);
    auto nb = node_bound(instance, status, multipliers);
    return {nb.value, std::move(nb.sites), std::move(nb.subgradient)};
}

void subgradient_step(std::span<double> multipliers, const LagrangianBound& bound, double upper_bound, double theta) {
    double norm2 = 0.0;
    for (double g : bound.subgradient) {
        norm2 += g * g;
    }
    if (norm2 == 0.0) {
        return;
    }
    const double gap = std::max(upper_bound - bound.value, 0.0);
    const double step = theta * gap / norm2;
    for (std::size_t i = 0; i < multipliers.size(); ++i) {
        multipliers[i] += step * bound.subgradient[i];
    }
}

std::vector<double> initial_multipliers(const PlanningInstance& instance) {
    std::vector<double> u(instance.n_demands(), 0.0);
    for (std::size_t i = 0; i < instance.n_demands(); ++i) {
        const auto row = instance.distances.row(i);
        u[i] = instance.demands[i].weight * *std::min_element(row.begin(), row.end());
    }
    return u;
}

SubgradientResult optimize_multipliers(const PlanningInstance& instance, std::vector<double> start,
                                       double upper_bound, int iterations, double theta, int patience) {
    SubgradientResult res;
    res.best_bound = -kInf;
    res.multipliers = start;
    std::vector<double> u = std::move(start);
    int stale = 0;
    for (int it = 0; it < iterations; ++it) {
        const auto bound = lower_bound(instance, u);
        ++res.iterations;
        if (bound.value > res.best_bound) {
            res.best_bound = bound.value;
            res.multipliers = u;
            stale = 0;
        } else if (++stale >= patience) {
            theta *= 0.5;
            stale = 0;
        }
        subgradient_step(u, bound, upper_bound, theta);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

struct Node {
    std::vector<SiteStatus> status;
    std::vector<double> multipliers;
    std::size_t n_open = 0;
    std::size_t n_free = 0;
    int depth = 0;
};

class BranchAndBound {
  public:
    BranchAndBound(const PlanningInstance& inst, const ExactOptions& opt, Exec exec)
        : inst_(inst), opt_(opt), exec_(exec) {}

    PlanSolution run() {
        const auto t0 = std::chrono::steady_clock::now();
        const auto start = interchange(inst_, greedy_sites(inst_), 0);
        offer(start);

        Node root;
        root.status.assign(inst_.distances.cols(), SiteStatus::free);
        root.n_free = root.status.size();
        root.multipliers = initial_multipliers(inst_);

        if (exec_ == Exec::parallel) {
#pragma omp parallel
#pragma omp single
            explore(std::move(root));
        } else {
            explore(std::move(root));
        }

        auto sol = make_solution(inst_, best_sites_, Optimality::proven_optimal);
        sol.wall_time_s = seconds_since(t0);
        sol.nodes_explored = nodes_.load();
        return sol;
    }

  private:
    double prune_tolerance(double ub) const { return 1e-9 * std::max(1.0, std::fabs(ub)); }

    void offer(std::vector<std::size_t> sites) {
        std::sort(sites.begin(), sites.end());
        const double value = evaluate_open_set(inst_, sites);
        std::lock_guard lock(mutex_);
        if (best_sites_.empty() || value < best_value_ || (value == best_value_ && sites < best_sites_)) {
            best_value_ = value;
            best_sites_ = std::move(sites);
            upper_.store(value);
        }
    }

    void explore(Node node) {
        nodes_.fetch_add(1);
        if (node.n_open == inst_.p || node.n_open + node.n_free == inst_.p) {
            std::vector<std::size_t> sites;
            for (std::size_t j = 0; j < node.status.size(); ++j) {
                if (node.status[j] == SiteStatus::open ||
                    (node.n_open < inst_.p && node.status[j] == SiteStatus::free)) {
                    sites.push_back(j);
                }
            }
            offer(std::move(sites));
            return;
        }

        const int iterations = node.depth == 0 ? opt_.root_subgradient_iterations : opt_.node_subgradient_iterations;
        std::vector<double> u = node.multipliers;
        std::vector<double> best_u = u;
        NodeBound best;
        best.value = -kInf;
        double theta = 2.0;
        int stale = 0;
        for (int it = 0; it < std::max(iterations, 1); ++it) {
            auto nb = node_bound(inst_, node.status, u);
            const double ub = upper_.load();
            if (nb.value > ub + prune_tolerance(ub)) {
                return;
            }
            if (nb.value > best.value) {
                best_u = u;
                best = nb;
                stale = 0;
            } else if (++stale >= 10) {
                theta *= 0.5;
                stale = 0;
            }
            offer(nb.sites);
            LagrangianBound lb{nb.value, {}, std::move(nb.subgradient)};
            subgradient_step(u, lb, upper_.load(), theta);
        }

        // Branch on the free site the relaxation values most.
        std::size_t pick = node.status.size();
        for (std::size_t j = 0; j < node.status.size(); ++j) {
            if (node.status[j] == SiteStatus::free &&
                (pick == node.status.size() || best.site_gain[j] < best.site_gain[pick])) {
                pick = j;
            }
        }

        Node with = node;
        with.status[pick] = SiteStatus::open;
        with.n_open += 1;
        with.n_free -= 1;
        with.depth += 1;
        with.multipliers = best_u;

        Node without = std::move(node);
        without.status[pick] = SiteStatus::closed;
        without.n_free -= 1;
        without.depth += 1;
        without.multipliers = std::move(best_u);

        if (exec_ == Exec::parallel && with.depth <= opt_.task_depth) {
#pragma omp task firstprivate(with)
            explore(std::move(with));
#pragma omp task firstprivate(without)
            explore(std::move(without));
#pragma omp taskwait
        } else {
            explore(std::move(with));
            explore(std::move(without));
        }
    }

    const PlanningInstance& inst_;
    const ExactOptions& opt_;
    Exec exec_;
    std::mutex mutex_;
    std::vector<std::size_t> best_sites_;
    double best_value_ = kInf;
    std::atomic<double> upper_{kInf};
    std::atomic<std::size_t> nodes_{0};
};

} // namespace

PlanSolution solve_exact(const PlanningInstance& instance, const ExactOptions& options, Exec exec) {
    instance.validate();
    if (instance.distances.cols() > options.max_candidates && !options.allow_large) {
        throw PlanningError("instance has " + std::to_string(instance.distances.cols()) +
                            " candidates, above the exact-solver limit of " + std::to_string(options.max_candidates) +
                            "; use the heuristic solver or raise the limit explicitly");
    }
    BranchAndBound bb(instance, options, exec);
    return bb.run();
}

// ---------------------------------------------------------------------------

bool RelaxationReport::consistent(double tol) const {
    return std::fabs(binary_objective - relaxed_objective) <= tol * std::max(1.0, std::fabs(binary_objective));
}

RelaxationReport verify_relaxation(const PlanningInstance& instance, const ExactOptions& options) {
    const auto sol = solve_exact(instance, options, Exec::serial);
    RelaxationReport report;
    report.open_sites = sol.open_sites;
    report.binary_objective = sol.objective;

    // With the open set fixed the relaxed assignment LP separates per demand.
    // Its optimal face is the set of closest open sites; spreading the unit of
    // assignment evenly over that face gives a fractional optimum.
    double relaxed = 0.0;
    for (std::size_t i = 0; i < instance.n_demands(); ++i) {
        double dmin = kInf;
        for (std::size_t j : sol.open_sites) {
            dmin = std::min(dmin, instance.distances(i, j));
        }
        std::vector<std::size_t> face;
        for (std::size_t j : sol.open_sites) {
            if (instance.distances(i, j) == dmin) {
                face.push_back(j);
            }
        }
        const double share = 1.0 / static_cast<double>(face.size());
        for (std::size_t j : face) {
            relaxed += share * instance.demands[i].weight * instance.distances(i, j);
        }
        if (face.size() > 1) {
            report.ties.push_back({i, std::move(face)});
        }
    }
    report.relaxed_objective = relaxed;
    return report;
}

} // namespace evcharge
