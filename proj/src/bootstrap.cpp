#include "abn/bootstrap.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "abn/error.hpp"
#include "abn/parallel.hpp"
#include "abn/score_cache.hpp"
#include "abn/simulate.hpp"

namespace abn {

std::string_view to_string(SupportMode m) { return m == SupportMode::directed ? "directed" : "undirected"; }

SupportMode parse_support_mode(std::string_view s) {
    if (s == "directed") return SupportMode::directed;
    if (s == "undirected") return SupportMode::undirected;
    throw Error("UnknownMode", "support mode must be 'directed' or 'undirected'");
}

std::size_t BootstrapReport::n_failed() const {
    std::size_t k = 0;
    for (const auto& r : replicates) k += r.ok ? 0 : 1;
    return k;
}

SupportMatrices arc_support_matrix(const std::vector<Dag>& dags) {
    if (dags.empty()) throw Error("EmptyInput", "support needs at least one DAG");
    const auto n = static_cast<Eigen::Index>(dags.front().size());
    SupportMatrices s{Eigen::MatrixXd::Zero(n, n), {}};
    for (const auto& d : dags) {
        if (d.nodes() != dags.front().nodes()) throw Error("NodeSetMismatch", "DAGs have different node lists");
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (d.adjacency()(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) s.directed(i, j) += 1.0;
    }
    s.directed /= static_cast<double>(dags.size());
    s.undirected = s.directed + s.directed.transpose();
    return s;
}

Dag prune_by_support(const Dag& original, const SupportMatrices& support, double threshold, SupportMode mode) {
    const Eigen::MatrixXd& m = mode == SupportMode::directed ? support.directed : support.undirected;
    BinaryMatrix adj(original.size());
    for (std::size_t c = 0; c < original.size(); ++c)
        for (std::size_t p = 0; p < original.size(); ++p)
            if (original.adjacency()(c, p) && m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p)) >= threshold)
                adj(c, p) = 1;
    return Dag(original.nodes(), adj);
}

BootstrapReport run_bootstrap(const std::vector<FitResult>& fits, const Dag& dag, const Dataset& ds,
                              const ConstraintSet& constraints, const BootstrapOptions& options) {
    if (fits.size() != dag.size()) throw Error("InvalidArgument", "one fit per DAG node is required");
    if (options.n_replicates == 0) throw Error("InvalidArgument", "at least one replicate is required");
    if (dag.nodes() != ds.names()) throw Error("NodeSetMismatch", "DAG nodes differ from the data columns");
    std::vector<GridPosterior> grids;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].method != Method::bayes) throw Error("NotBayesFit", "bootstrap needs posterior-mode fits");
        grids.push_back(grid_posterior(marginal_densities(fits[i], dag.nodes()[i], options.grid_points)));
    }

    BootstrapReport rep;
    rep.n_replicates = options.n_replicates;
    rep.threshold = options.threshold;
    rep.mode = options.mode;
    rep.replicates.resize(options.n_replicates);
    parallel_for(options.n_replicates, options.jobs, [&](std::size_t r) {
        ReplicateSummary& out = rep.replicates[r];
        out.index = r;
        try {
            Rng rng = make_rng(options.seed, 2 * r);
            SimSpec spec;
            spec.dag = dag;
            spec.n_obs = ds.n_obs();
            spec.seed = mix_seed(options.seed, 2 * r + 1);
            for (std::size_t i = 0; i < fits.size(); ++i) {
                NodeModel m = node_model(fits[i], sample_posterior_params(grids[i], rng), options.priors);
                for (auto p : dag.parents(i)) {
                    const auto& name = dag.nodes()[p];
                    bool present = false;
                    for (const auto& e : m.effects) present = present || e.first == name;
                    if (!present) m.effects.emplace_back(name, 0.0);
                }
                spec.nodes.push_back(std::move(m));
            }
            Dataset sim = simulate_data(spec);
            ScoreCache cache = build_cache(sim, constraints, Method::bayes, options.priors, 1);
            for (std::size_t i = 0; i < cache.size(); ++i) {
                bool any = false;
                for (const auto& e : cache.entries(i)) any = any || std::isfinite(e.mlik);
                if (!any) throw Error("FitFailure", "every parent set of " + cache.nodes()[i] + " failed");
            }
            auto table = best_parents_table(cache, ScoreType::mlik, options.prior);
            ExactResult best = most_probable_dag(table);
            out.dag = best.dag;
            out.n_arcs = best.dag.n_arcs();
            out.total = best.total;
            out.ok = true;
        } catch (const Error& e) {
            out.ok = false;
            out.failure = e.kind() + ": " + e.what();
        }
    });

    std::vector<Dag> good;
    for (const auto& r : rep.replicates)
        if (r.ok) good.push_back(r.dag);
    const double failed = static_cast<double>(options.n_replicates - good.size());
    if (good.empty() || failed > options.max_failure_fraction * static_cast<double>(options.n_replicates))
        throw Error("TooManyFailures", std::to_string(static_cast<std::size_t>(failed)) + " of " +
                                           std::to_string(options.n_replicates) + " replicates failed");
    SupportMatrices s = arc_support_matrix(good);
    rep.support = s.directed;
    rep.undirected_support = s.undirected;
    rep.pruned = prune_by_support(dag, s, options.threshold, options.mode);
    return rep;
}

void write_replicate_table(std::ostream& out, const BootstrapReport& report) {
    auto old = out.precision(17);
    out << "replicate,ok,arcs,total,failure\n";
    for (const auto& r : report.replicates) {
        out << r.index << ',' << (r.ok ? 1 : 0) << ',' << r.n_arcs << ',';
        if (r.ok) out << r.total;
        out << ',' << r.failure << '\n';
    }
    out.precision(old);
}

}  // namespace abn
