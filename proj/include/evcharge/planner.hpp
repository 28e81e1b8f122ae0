#pragma once

#include "evcharge/demand.hpp"
#include "evcharge/exec.hpp"
#include "evcharge/geo.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace evcharge {

/// Dense row-major |V| x |U| matrix of demand-to-candidate distances (km).
class DistanceMatrix {
  public:
    DistanceMatrix() = default;
    DistanceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DistanceMatrix distance_matrix(std::span<const LonLat> from, std::span<const LonLat> to,
                               const DistanceFn& dist = haversine_km, Exec exec = Exec::parallel);

/// A demand site as seen by the planner: location plus energy weight D_i.
struct WeightedSite {
    LonLat location;
    double weight = 0.0;
};

class PlanningError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Candidate sites U, demand set V with weights, distances L_ij and budget p.
struct PlanningInstance {
    std::vector<LonLat> candidates;
    std::vector<WeightedSite> demands;
    DistanceMatrix distances; ///< demands x candidates
    std::size_t p = 1;

    std::size_t n_candidates() const { return candidates.size(); }
    std::size_t n_demands() const { return demands.size(); }

    /// Checks 1 <= p <= |U|, non-negative distances, positive weights, matrix shape.
    void validate() const;
};

/// Uniform nx x ny grid of cell centres over a bounding box.
struct GridSpec {
    int nx = 0;
    int ny = 0;
};

/// Grid with exactly `count` cells; the factorisation closest to the box's
/// aspect ratio (in kilometres) is used.
struct GridCount {
    int count = 500;
};

using CandidateSpec = std::variant<std::vector<LonLat>, GridSpec, GridCount>;

BoundingBox demand_bounds(std::span<const WeightedSite> demands);
std::vector<LonLat> grid_candidates(const BoundingBox& box, GridSpec grid);
GridSpec grid_for_count(const BoundingBox& box, int count);

PlanningInstance build_instance(std::vector<WeightedSite> demands, const CandidateSpec& candidates, std::size_t p,
                                const DistanceFn& dist = haversine_km, Exec exec = Exec::parallel);

/// Instance with an explicit distance matrix (no coordinates needed for solving).
PlanningInstance instance_from_matrix(DistanceMatrix distances, std::vector<double> weights, std::size_t p);

std::vector<WeightedSite> to_weighted_sites(std::span<const DemandPoint> points);

/// Snaps demands onto square cells of `cell_m` metres; weights are summed and
/// each cell is represented by its weighted centroid. Output is ordered by cell.
std::vector<WeightedSite> aggregate_demands(std::span<const WeightedSite> demands, double cell_m);

enum class Optimality { proven_optimal, heuristic };

std::string to_string(Optimality o);

struct PlanSolution {
    std::vector<std::size_t> open_sites;  ///< sorted candidate indices
    std::vector<std::size_t> assignment;  ///< demand index -> candidate index
    double objective = 0.0;               ///< sum_i D_i * L_{i, assignment(i)} (kWh km)
    Optimality optimality = Optimality::heuristic;
    double wall_time_s = 0.0;
    std::size_t nodes_explored = 0;
};

/// Nearest open site for every demand, ties to the lowest candidate index.
std::vector<std::size_t> nearest_assignment(const PlanningInstance& instance, std::span<const std::size_t> open);

/// Objective of an open set under nearest assignment, summed in demand order.
double evaluate_open_set(const PlanningInstance& instance, std::span<const std::size_t> open);

/// Objective recomputed from an explicit assignment.
double assignment_objective(const PlanningInstance& instance, std::span<const std::size_t> assignment);

PlanSolution make_solution(const PlanningInstance& instance, std::vector<std::size_t> open, Optimality optimality);

/// Greedy construction followed by Teitz-Bart vertex interchange. The seed
/// fixes the order in which candidates are tried for swaps.
PlanSolution solve_heuristic(const PlanningInstance& instance, std::uint64_t seed = 0);

/// Greedy construction alone (the heuristic never returns anything worse).
PlanSolution solve_greedy(const PlanningInstance& instance);

struct ExactOptions {
    std::size_t max_candidates = 60;
    bool allow_large = false;
    int root_subgradient_iterations = 300;
    int node_subgradient_iterations = 40;
    /// OpenMP tasks are spawned for subtrees above this depth.
    int task_depth = 3;
};

/// Branch-and-bound over the site variables with Lagrangian bounds. Returns a
/// proven optimum. Among optimal site sets the lexicographically smallest is
/// returned, so the answer does not depend on task scheduling.
PlanSolution solve_exact(const PlanningInstance& instance, const ExactOptions& options = {},
                         Exec exec = Exec::parallel);

/// Lagrangian relaxation of the assignment constraints.
///
/// For multipliers u the bound is
///   sum_i u_i + min_{|B| = p} sum_{j in B} sum_i min(0, D_i L_ij - u_i),
/// which never exceeds the optimal p-median objective.
struct LagrangianBound {
    double value = 0.0;
    std::vector<std::size_t> sites;  ///< minimising site set
    std::vector<double> subgradient; ///< 1 - sum_j x_ij for each demand
};

LagrangianBound lower_bound(const PlanningInstance& instance, std::span<const double> multipliers);

/// One subgradient step u <- u + step * g with step = theta (ub - lb) / |g|^2.
void subgradient_step(std::span<double> multipliers, const LagrangianBound& bound, double upper_bound, double theta);

struct SubgradientResult {
    double best_bound = 0.0;
    std::vector<double> multipliers;
    int iterations = 0;
};

/// Runs `iterations` subgradient steps from the given start, halving theta
/// after `patience` steps without improvement.
SubgradientResult optimize_multipliers(const PlanningInstance& instance, std::vector<double> start,
                                       double upper_bound, int iterations, double theta = 2.0, int patience = 20);

/// Multipliers u_i = min_j D_i L_ij, a common starting point.
std::vector<double> initial_multipliers(const PlanningInstance& instance);

struct RelaxationTie {
    std::size_t demand = 0;
    std::vector<std::size_t> sites; ///< open sites at the minimum distance
};

/// Compares the binary assignment objective with the optimum of the relaxed
/// (fractional) assignment LP over the same open set.
struct RelaxationReport {
    std::vector<std::size_t> open_sites;
    double binary_objective = 0.0;
    double relaxed_objective = 0.0;
    std::vector<RelaxationTie> ties;

    bool consistent(double tol = 1e-9) const;
};

RelaxationReport verify_relaxation(const PlanningInstance& instance, const ExactOptions& options = {});

} // namespace evcharge
