#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abn/dag.hpp"
#include "abn/data.hpp"
#include "abn/glm.hpp"
#include "abn/search_exact.hpp"

namespace abn {

enum class SupportMode { directed, undirected };

std::string_view to_string(SupportMode m);
SupportMode parse_support_mode(std::string_view s);

struct BootstrapOptions {
    std::size_t n_replicates = 200;
    std::uint64_t seed = 1;
    double threshold = 0.5;
    SupportMode mode = SupportMode::directed;
    StructuralPrior prior = StructuralPrior::koivisto;
    PriorSpec priors;
    std::size_t grid_points = 1000;
    double max_failure_fraction = 0.05;
    unsigned jobs = 1;
};

struct ReplicateSummary {
    std::size_t index = 0;
    bool ok = false;
    Dag dag;
    std::size_t n_arcs = 0;
    double total = 0;
    std::string failure;  // reason when !ok
};

struct BootstrapReport {
    std::size_t n_replicates = 0;
    std::vector<ReplicateSummary> replicates;
    Eigen::MatrixXd support;             // directed, row = child
    Eigen::MatrixXd undirected_support;  // f(i->j) + f(j->i)
    Dag pruned;
    double threshold = 0.5;
    SupportMode mode = SupportMode::directed;

    std::size_t n_failed() const;
};

struct SupportMatrices {
    Eigen::MatrixXd directed;
    Eigen::MatrixXd undirected;
};

/// Throws Error("NodeSetMismatch"), Error("EmptyInput").
SupportMatrices arc_support_matrix(const std::vector<Dag>& dags);

/// Keeps arcs of `original` whose support (per mode) is at least `threshold`.
Dag prune_by_support(const Dag& original, const SupportMatrices& support, double threshold = 0.5,
                     SupportMode mode = SupportMode::directed);

/// Parametric bootstrap. Each replicate draws every parameter from its
/// posterior grid, simulates a dataset of the original size, builds a bayes
/// cache under `constraints` and records the most probable DAG. Failed
/// replicates are excluded from the support. `fits` are bayes fits of the
/// nodes of `dag` in node order on `ds`.
/// Throws Error("NotBayesFit"), Error("TooManyFailures").
BootstrapReport run_bootstrap(const std::vector<FitResult>& fits, const Dag& dag, const Dataset& ds,
                              const ConstraintSet& constraints, const BootstrapOptions& options);

/// Per-replicate table: index, ok, arcs, total, failure.
void write_replicate_table(std::ostream& out, const BootstrapReport& report);

}  // namespace abn
