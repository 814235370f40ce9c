#include "abn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "abn/error.hpp"

namespace abn {

namespace {

double expit(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

constexpr double kPoissonLimit = 1e9;

}  // namespace

Dag simulate_dag(std::size_t n_nodes, double arc_probability, std::uint64_t seed,
                 std::vector<std::string> names) {
    if (!(arc_probability >= 0.0 && arc_probability <= 1.0))
        throw Error("InvalidProbability", "arc probability must lie in [0,1]");
    if (names.empty())
        for (std::size_t i = 0; i < n_nodes; ++i) names.push_back("X" + std::to_string(i + 1));
    if (names.size() != n_nodes) throw Error("InvalidArgument", "name count does not match node count");
    Rng rng = make_rng(seed);
    std::vector<std::size_t> perm(n_nodes);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    BinaryMatrix adj(n_nodes);
    for (std::size_t a = 0; a < n_nodes; ++a)
        for (std::size_t b = a + 1; b < n_nodes; ++b)
            if (uniform01(rng) < arc_probability) adj(perm[b], perm[a]) = 1;
    return Dag(std::move(names), std::move(adj));
}

void SimSpec::validate() const {
    if (nodes.size() != dag.size()) throw Error("InvalidSpec", "one node model per DAG node is required");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& m = nodes[i];
        std::set<std::string> want;
        for (auto p : dag.parents(i)) want.insert(dag.nodes()[p]);
        std::set<std::string> have;
        for (const auto& [name, value] : m.effects) {
            if (!have.insert(name).second)
                throw Error("InvalidSpec", "duplicate effect " + name + " on " + dag.nodes()[i]);
            if (!std::isfinite(value)) throw Error("InvalidSpec", "non-finite effect on " + dag.nodes()[i]);
        }
        if (have != want) throw Error("InvalidSpec", "effects of " + dag.nodes()[i] + " do not match its parents");
        if (!std::isfinite(m.intercept)) throw Error("InvalidSpec", "non-finite intercept on " + dag.nodes()[i]);
        if (m.family == Distribution::gaussian && !(m.sd > 0 && std::isfinite(m.sd)))
            throw Error("InvalidSpec", "gaussian sd must be positive on " + dag.nodes()[i]);
    }
}

std::string write_sim_spec(const SimSpec& spec) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["n_obs"] = spec.n_obs;
    j["seed"] = spec.seed;
    j["nodes"] = ordered_json::array();
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const auto& m = spec.nodes[i];
        ordered_json node;
        node["name"] = spec.dag.nodes()[i];
        node["family"] = std::string(to_string(m.family));
        node["intercept"] = m.intercept;
        ordered_json eff = ordered_json::object();
        for (const auto& [p, v] : m.effects) eff[p] = v;
        node["effects"] = eff;
        if (m.family == Distribution::gaussian) node["sd"] = m.sd;
        j["nodes"].push_back(node);
    }
    return j.dump(2) + "\n";
}

SimSpec read_sim_spec(std::string_view text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error("ParseError", std::string("simulation spec: ") + e.what());
    }
    try {
        SimSpec s;
        s.n_obs = j.at("n_obs").get<std::size_t>();
        s.seed = j.value("seed", std::uint64_t{1});
        std::vector<std::string> names;
        for (const auto& node : j.at("nodes")) names.push_back(node.at("name").get<std::string>());
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
        BinaryMatrix adj(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto& node = j.at("nodes")[i];
            NodeModel m;
            m.family = parse_distribution(node.at("family").get<std::string>());
            m.intercept = node.value("intercept", 0.0);
            m.sd = node.value("sd", 1.0);
            if (node.contains("effects"))
                for (const auto& [p, v] : node.at("effects").items()) {
                    auto it = index.find(p);
                    if (it == index.end()) throw Error("UnknownName", "effect on unknown node '" + p + "'");
                    adj(i, it->second) = 1;
                    m.effects.emplace_back(p, v.get<double>());
                }
            s.nodes.push_back(std::move(m));
        }
        s.dag = Dag(names, adj);
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error("ParseError", std::string("simulation spec: ") + e.what());
    }
}

Dataset simulate_data(const SimSpec& spec) {
    spec.validate();
    const std::size_t n_vars = spec.dag.size();
    const auto n = static_cast<Eigen::Index>(spec.n_obs);
    std::vector<Eigen::VectorXd> cols(n_vars, Eigen::VectorXd::Zero(n));
    std::vector<Distribution> dists(n_vars);
    Rng rng = make_rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t v : topological_order(spec.dag)) {
        const auto& m = spec.nodes[v];
        dists[v] = m.family;
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, m.intercept);
        for (const auto& [p, coef] : m.effects) eta += coef * cols[spec.dag.index_of(p)];
        auto& out = cols[v];
        for (Eigen::Index r = 0; r < n; ++r) {
            switch (m.family) {
            case Distribution::binomial:
                out[r] = uniform01(rng) < expit(eta[r]) ? 1.0 : 0.0;
                break;
            case Distribution::gaussian:
                out[r] = eta[r] + m.sd * normal(rng);
                break;
            case Distribution::poisson: {
                double mean = std::exp(eta[r]);
                if (!(mean <= kPoissonLimit))
                    throw Error("PoissonOverflow", "poisson mean exp(" + std::to_string(eta[r]) + ") for " +
                                                       spec.dag.nodes()[v] + " exceeds 1e9");
                out[r] = mean < 1e-300 ? 0.0 : static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
                break;
            }
            }
        }
    }
    Dataset ds(spec.dag.nodes(), dists, std::move(cols));
    ds.set_fingerprint(ds.content_fingerprint());
    return ds;
}

SimSpec random_model(const Dag& dag, const std::vector<Distribution>& families, std::size_t n_obs,
                     std::uint64_t seed, double min_effect, double max_effect) {
    if (families.size() != dag.size()) throw Error("InvalidArgument", "one family per node is required");
    Rng rng = make_rng(seed, 1);
    SimSpec s;
    s.dag = dag;
    s.n_obs = n_obs;
    s.seed = seed;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        NodeModel m;
        m.family = families[i];
        double scale = m.family == Distribution::poisson ? 0.3 : 1.0;
        for (auto p : dag.parents(i)) {
            double mag = min_effect + (max_effect - min_effect) * uniform01(rng);
            double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            m.effects.emplace_back(dag.nodes()[p], sign * mag * scale);
        }
        s.nodes.push_back(std::move(m));
    }
    return s;
}

GridPosterior grid_posterior(const std::vector<MarginalDensity>& densities) {
    GridPosterior g;
    for (const auto& d : densities) g.push_back({d.name, d.grid, d.probabilities});
    return g;
}

std::vector<double> sample_posterior_params(const GridPosterior& grids, Rng& rng) {
    std::vector<double> draw;
    draw.reserve(grids.size());
    for (const auto& g : grids) {
        if (g.points.size() == 0 || g.points.size() != g.probabilities.size())
            throw Error("InvalidGrid", "grid for " + g.name + " is empty or mismatched");
        if ((g.probabilities.array() < 0).any() || !g.probabilities.allFinite() || !(g.probabilities.sum() > 0))
            throw Error("InvalidGrid", "grid probabilities for " + g.name + " are invalid");
        if (g.points.size() == 1) {
            draw.push_back(g.points[0]);
            continue;
        }
        std::discrete_distribution<Eigen::Index> pick(g.probabilities.data(),
                                                      g.probabilities.data() + g.probabilities.size());
        draw.push_back(g.points[pick(rng)]);
    }
    return draw;
}

std::vector<double> sample_posterior_params(const GridPosterior& grids, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return sample_posterior_params(grids, rng);
}

NodeModel node_model(const FitResult& fit, const std::vector<double>& values, const PriorSpec& priors) {
    if (values.size() != fit.parameter_count())
        throw Error("InvalidArgument", "parameter vector does not match the fit");
    NodeModel m;
    m.family = fit.family;
    for (std::size_t k = 0; k < fit.labels.size(); ++k) {
        if (k == 0) m.intercept = values[0];
        else m.effects.emplace_back(fit.labels[k], values[k]);
    }
    if (fit.family == Distribution::gaussian) {
        if (fit.precision_estimated) m.sd = std::exp(-0.5 * values.back());
        else if (fit.log_precision) m.sd = std::exp(-0.5 * *fit.log_precision);
        else if (priors.fixed_precision) m.sd = 1.0 / std::sqrt(*priors.fixed_precision);
    }
    return m;
}

SimSpec spec_from_fits(const Dag& dag, const std::vector<FitResult>& fits, std::size_t n_obs,
                       std::uint64_t seed, const PriorSpec& priors) {
    if (fits.size() != dag.size()) throw Error("InvalidArgument", "one fit per node is required");
    SimSpec s;
    s.dag = dag;
    s.n_obs = n_obs;
    s.seed = seed;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        const auto& f = fits[i];
        std::vector<double> values(f.coefficients.data(), f.coefficients.data() + f.coefficients.size());
        if (f.precision_estimated) values.push_back(*f.log_precision);
        NodeModel m = node_model(f, values, priors);
        // predictors dropped during fitting contribute nothing
        for (auto p : dag.parents(i)) {
            const auto& name = dag.nodes()[p];
            bool present = std::any_of(m.effects.begin(), m.effects.end(),
                                       [&](const auto& e) { return e.first == name; });
            if (!present) m.effects.emplace_back(name, 0.0);
        }
        s.nodes.push_back(std::move(m));
    }
    return s;
}

}  // namespace abn
