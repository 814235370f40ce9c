#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "abn/dag.hpp"
#include "abn/score_cache.hpp"

namespace abn {

enum class HeuristicAlgorithm { hill_climb, tabu, simulated_annealing };

std::string_view to_string(HeuristicAlgorithm a);
HeuristicAlgorithm parse_algorithm(std::string_view s);

struct HeuristicConfig {
    HeuristicAlgorithm algorithm = HeuristicAlgorithm::hill_climb;
    ScoreType score = ScoreType::mlik;
    std::size_t restarts = 1;
    std::size_t max_steps = 1000;
    std::size_t tabu_length = 10;
    double initial_temperature = 1.0;
    double cooling_factor = 0.995;
    double initial_density = 0.1;
    std::uint64_t seed = 1;
    unsigned jobs = 1;

    void validate() const;
};

struct RestartTrace {
    Dag dag;                          // best DAG seen in this restart
    double score = 0;
    std::vector<double> best_scores;  // best-so-far score after each step (index 0 = start)
};

struct SearchTrace {
    std::vector<RestartTrace> restarts;
    /// Index of the highest-scoring restart (lowest index on ties).
    std::size_t best_index() const;
};

/// Single-arc add/delete/reverse moves over DAGs whose parent sets are all
/// in the cache. Restart r draws from a generator seeded by (seed, r).
/// Throws Error("EmptyCache").
SearchTrace heuristic_search(const ScoreCache& cache, const HeuristicConfig& config);

/// Start DAG for one restart: retained arcs, then random valid additions.
Dag initial_dag(const ScoreCache& cache, double density, std::uint64_t seed, std::uint64_t restart);

struct Consensus {
    Eigen::MatrixXd frequency;   // directed, row = child
    Eigen::MatrixXd undirected;  // f(i->j) + f(j->i), symmetric
    BinaryMatrix arcs;           // kept arcs, possibly cyclic
    bool acyclic = true;
};

/// Keeps arc (child, parent) when its frequency (directed, or summed over
/// both directions when `undirected`) is at least `threshold`.
/// Throws Error("NodeSetMismatch"), Error("EmptyInput").
Consensus majority_consensus(const std::vector<Dag>& dags, double threshold, bool undirected = false);

/// While cyclic, takes the lowest-frequency arc on a cycle and reverses it,
/// or deletes it when the reversal closes another cycle or the reverse
/// direction has lower support. Result is acyclic.
Dag repair_to_dag(const std::vector<std::string>& nodes, const BinaryMatrix& arcs,
                  const Eigen::MatrixXd& frequency);

}  // namespace abn
