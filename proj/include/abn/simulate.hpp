#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "abn/dag.hpp"
#include "abn/data.hpp"
#include "abn/glm.hpp"
#include "abn/random.hpp"

namespace abn {

/// Random DAG: a uniform node permutation, then each forward arc of the
/// permuted order independently with probability `arc_probability`.
/// Default names are X1..Xn. Throws Error("InvalidProbability").
Dag simulate_dag(std::size_t n_nodes, double arc_probability, std::uint64_t seed,
                 std::vector<std::string> names = {});

/// Conditional model of one node on the link scale.
struct NodeModel {
    Distribution family = Distribution::gaussian;
    double intercept = 0;
    std::vector<std::pair<std::string, double>> effects;  // parent name -> coefficient
    double sd = 1;                                        // gaussian only
};

struct SimSpec {
    Dag dag;
    std::vector<NodeModel> nodes;  // dag node order
    std::size_t n_obs = 0;
    std::uint64_t seed = 1;

    /// Effects must name exactly the DAG parents; sd > 0.
    /// Throws Error("InvalidSpec").
    void validate() const;
};

/// JSON text; the DAG is implied by each node's effects.
std::string write_sim_spec(const SimSpec& spec);
SimSpec read_sim_spec(std::string_view text);

/// Ancestral sampling in topological order. Throws Error("PoissonOverflow")
/// when a poisson mean exceeds 1e9.
Dataset simulate_data(const SimSpec& spec);

/// Random coefficients for a known DAG: effects of magnitude in
/// [min_effect, max_effect] with random sign (scaled by 0.3 for poisson
/// children), intercepts 0, gaussian sd 1.
SimSpec random_model(const Dag& dag, const std::vector<Distribution>& families, std::size_t n_obs,
                     std::uint64_t seed, double min_effect = 0.5, double max_effect = 1.5);

// ---- posterior grids -----------------------------------------------------

struct ParameterGrid {
    std::string name;
    Eigen::VectorXd points;
    Eigen::VectorXd probabilities;
};

using GridPosterior = std::vector<ParameterGrid>;

GridPosterior grid_posterior(const std::vector<MarginalDensity>& densities);

/// One independent categorical draw per parameter. Single-point grids are
/// allowed and return their point. Throws Error("InvalidGrid").
std::vector<double> sample_posterior_params(const GridPosterior& grids, Rng& rng);
std::vector<double> sample_posterior_params(const GridPosterior& grids, std::uint64_t seed);

/// Node model from a fit and one value per parameter, in the order of
/// FitResult::parameter_names (coefficients, then log precision).
NodeModel node_model(const FitResult& fit, const std::vector<double>& values, const PriorSpec& priors = {});
/// Node models at the fitted coefficients.
SimSpec spec_from_fits(const Dag& dag, const std::vector<FitResult>& fits, std::size_t n_obs,
                       std::uint64_t seed, const PriorSpec& priors = {});

}  // namespace abn
