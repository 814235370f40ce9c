#include "abn/cli.hpp"

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "abn/bootstrap.hpp"
#include "abn/dag.hpp"
#include "abn/data.hpp"
#include "abn/error.hpp"
#include "abn/formula.hpp"
#include "abn/glm.hpp"
#include "abn/parallel.hpp"
#include "abn/score_cache.hpp"
#include "abn/search_exact.hpp"
#include "abn/search_heuristic.hpp"
#include "abn/simulate.hpp"
#include "abn/strength.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace abn {

namespace {

struct Options {
    std::string data, dists;
    bool no_standardize = false;
    std::string ban, retain;
    std::size_t max_parents = 4;
    std::string method = "bayes";
    std::string score;
    std::string prior = "koivisto";
    std::optional<std::uint64_t> seed;
    unsigned jobs = default_jobs();
    std::string out = ".";

    std::string cache_path;
    std::string dag_path, formula;

    // heuristic
    std::string algorithm = "hill_climb";
    std::size_t restarts = 1, max_steps = 1000, tabu_length = 10;
    double temperature = 1.0, cooling = 0.995, density = 0.1;
    double consensus_threshold = 0.5;

    // fit
    bool contributions = false;
    std::size_t grid_points = 1000;

    // sweep
    std::size_t sweep_max = 7;

    // simulate
    std::size_t sim_nodes = 10;
    double sim_prob = 0.2;
    std::string spec_path;
    std::optional<std::size_t> sim_n;
    std::optional<double> thinning;

    // bootstrap
    std::size_t replicates = 200;
    double threshold = 0.5;
    std::string mode = "directed";

    // strength
    std::string rule = "fixed_k";
    int bins = 8;

    // compare / info
    std::string reference, candidate, dag_file;
};

// Collects the artifacts and inputs of one run and writes the manifest.
class Run {
public:
    Run(std::string subcommand, const Options& o, std::vector<std::string> args, std::ostream& out,
        std::ostream& err)
        : o_(o), out_(out), err_(err) {
        manifest_["tool"] = "abn";
        manifest_["version"] = kVersion;
        manifest_["subcommand"] = std::move(subcommand);
        manifest_["arguments"] = std::move(args);
        manifest_["inputs"] = ordered_json::object();
        manifest_["outputs"] = ordered_json::array();
    }

    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }

    void input(const std::string& role, const std::string& path, const std::string& fingerprint = "") {
        ordered_json j;
        j["path"] = path;
        if (!fingerprint.empty()) j["fingerprint"] = fingerprint;
        manifest_["inputs"][role] = j;
    }
    void set(const std::string& key, ordered_json value) { manifest_[key] = std::move(value); }

    std::uint64_t seed() {
        if (!seed_) {
            if (o_.seed) {
                seed_ = *o_.seed;
            } else {
                std::random_device rd;
                seed_ = (std::uint64_t{rd()} << 32) | rd();
                out_ << "seed: " << *seed_ << '\n';
            }
            manifest_["seed"] = *seed_;
        }
        return *seed_;
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        fs::create_directories(o_.out);
        fs::path p = fs::path(o_.out) / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error("IOError", "cannot write " + p.string());
        body(f);
        if (!f) throw Error("IOError", "failed writing " + p.string());
        manifest_["outputs"].push_back(p.string());
    }

    void finish() {
        manifest_["jobs"] = o_.jobs;
        fs::create_directories(o_.out);
        std::ofstream f(fs::path(o_.out) / "manifest.json", std::ios::binary);
        f << manifest_.dump(2) << '\n';
    }

private:
    const Options& o_;
    std::ostream& out_;
    std::ostream& err_;
    ordered_json manifest_;
    std::optional<std::uint64_t> seed_;
};

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("IOError", "cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Dataset load_data(const Options& o, Run& run) {
    if (o.data.empty() || o.dists.empty())
        throw Error("MissingArgument", "--data and --dists are required");
    Dataset ds = load_dataset(o.data, DistSpec::load(o.dists));
    if (o.no_standardize) ds.set_fingerprint(ds.fingerprint() + "+raw");
    else ds = standardize(ds);
    run.input("data", o.data, ds.fingerprint());
    run.input("dists", o.dists);
    return ds;
}

// Matrix from a formula string or an adjacency file, in `nodes` order.
BinaryMatrix matrix_arg(const std::string& arg, const std::vector<std::string>& nodes) {
    if (arg.empty()) return BinaryMatrix(nodes.size());
    if (fs::is_regular_file(arg)) {
        std::ifstream f(arg);
        auto [names, m] = read_adjacency(f);
        BinaryMatrix out(nodes.size());
        auto index = [&](const std::string& n) {
            auto it = std::find(nodes.begin(), nodes.end(), n);
            if (it == nodes.end()) throw Error("UnknownName", "matrix names unknown node '" + n + "'");
            return static_cast<std::size_t>(it - nodes.begin());
        };
        for (std::size_t c = 0; c < names.size(); ++c)
            for (std::size_t p = 0; p < names.size(); ++p)
                if (m(c, p)) out(index(names[c]), index(names[p])) = 1;
        return out;
    }
    return parse_formula(arg, nodes);
}

ConstraintSet constraints_of(const Options& o, const std::vector<std::string>& nodes, std::size_t max_parents) {
    ConstraintSet c = ConstraintSet::unconstrained(nodes.size(), max_parents);
    c.banned = matrix_arg(o.ban, nodes);
    c.retained = matrix_arg(o.retain, nodes);
    c.validate();
    return c;
}

struct MethodChoice {
    Method method;
    ScoreType score;
    StructuralPrior prior;
};

MethodChoice method_of(const Options& o) {
    MethodChoice m{parse_method(o.method), ScoreType::mlik, parse_prior(o.prior)};
    m.score = o.score.empty() ? (m.method == Method::bayes ? ScoreType::mlik : ScoreType::bic) : parse_score(o.score);
    if (!score_matches_method(m.score, m.method))
        throw Error("ScoreMethodMismatch", "score '" + std::string(to_string(m.score)) + "' cannot be used with method '" +
                                               std::string(to_string(m.method)) + "'");
    return m;
}

Dag reorder(const Dag& d, const std::vector<std::string>& order) {
    std::vector<std::string> a = d.nodes(), b = order;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw Error("NodeSetMismatch", "DAG nodes differ from the expected node set");
    BinaryMatrix m(order.size());
    for (std::size_t c = 0; c < order.size(); ++c)
        for (std::size_t p = 0; p < order.size(); ++p)
            if (d.has_arc(d.index_of(order[p]), d.index_of(order[c]))) m(c, p) = 1;
    return Dag(order, m);
}

Dag read_dag_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("IOError", "cannot read " + path);
    auto [names, m] = read_adjacency(f);
    return Dag(names, m);
}

Dag dag_arg(const Options& o, const Dataset& ds, Run& run) {
    if (!o.dag_path.empty()) {
        run.input("dag", o.dag_path);
        return reorder(read_dag_file(o.dag_path), ds.names());
    }
    if (!o.formula.empty()) {
        run.set("formula", o.formula);
        return Dag(ds.names(), parse_formula(o.formula, ds.names()));
    }
    throw Error("MissingArgument", "a DAG is required (--dag FILE or --formula)");
}

DotOptions dot_options(const Dataset& ds) {
    DotOptions d;
    for (auto dist : ds.dists())
        d.shapes.push_back(dist == Distribution::binomial  ? NodeShape::box
                           : dist == Distribution::poisson ? NodeShape::diamond
                                                           : NodeShape::ellipse);
    return d;
}

std::vector<FitResult> fit_dag(const Dataset& ds, const Dag& dag, Method method) {
    std::vector<FitResult> fits;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        DesignMatrix d = build_design(ds, i, dag.adjacency().row_mask(i));
        fits.push_back(fit_node(d, ds.dists()[i], method, {}, {}, dag.size() - 1));
    }
    return fits;
}

void write_fits(Run& run, const Dataset& ds, const Dag& dag, const std::vector<FitResult>& fits) {
    run.write("fit.txt", [&](std::ostream& f) {
        for (std::size_t i = 0; i < fits.size(); ++i) write_fit(f, dag.nodes()[i], fits[i]);
    });
    (void)ds;
}

std::string g17(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

ScoreCache cache_for(const Options& o, const Dataset& ds, const MethodChoice& m, Run& run) {
    if (!o.cache_path.empty()) {
        std::ifstream f(o.cache_path);
        if (!f) throw Error("IOError", "cannot read " + o.cache_path);
        ScoreCache c = ScoreCache::read(f);
        run.input("cache", o.cache_path, c.fingerprint());
        if (ds.n_vars() > 0) check_fingerprint(c, ds);
        if (c.method() != m.method)
            throw Error("ScoreMethodMismatch", "cache was built with method '" + std::string(to_string(c.method())) + "'");
        return c;
    }
    return build_cache(ds, constraints_of(o, ds.names(), o.max_parents), m.method, {}, o.jobs);
}

// ---- subcommands ---------------------------------------------------------

void cmd_build_cache(const Options& o, Run& run) {
    MethodChoice m = method_of(o);
    Dataset ds = load_data(o, run);
    ScoreCache c = build_cache(ds, constraints_of(o, ds.names(), o.max_parents), m.method, {}, o.jobs);
    run.write("cache.txt", [&](std::ostream& f) { c.write(f); });
    std::size_t failed = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (const auto& e : c.entries(i)) failed += e.diagnostic.empty() ? 0 : 1;
    run.out() << "entries " << c.total_entries() << "\nfailed " << failed << '\n';
}

void cmd_search_exact(const Options& o, Run& run) {
    MethodChoice m = method_of(o);
    Dataset ds;
    if (!o.data.empty()) ds = load_data(o, run);
    if (o.cache_path.empty() && o.data.empty()) throw Error("MissingArgument", "--cache or --data is required");
    ScoreCache cache = cache_for(o, ds, m, run);
    auto table = best_parents_table(cache, m.score, m.prior, kDefaultTableBudget, o.jobs);
    ExactResult r = most_probable_dag(table);
    run.write("dag.adj", [&](std::ostream& f) { write_adjacency(f, r.dag.nodes(), r.dag.adjacency()); });
    run.write("search.txt", [&](std::ostream& f) {
        f << "score " << to_string(m.score) << "\nprior " << to_string(m.prior) << "\ntotal " << g17(r.total)
          << "\nobjective " << g17(r.objective) << "\narcs " << r.dag.n_arcs() << '\n';
        f << "formula " << render_formula(r.dag.adjacency(), r.dag.nodes()) << '\n';
    });
    run.out() << "total " << g17(r.total) << "\narcs " << r.dag.n_arcs() << '\n'
              << render_formula(r.dag.adjacency(), r.dag.nodes()) << '\n';
    if (ds.n_vars() > 0) {
        Dag dag = reorder(r.dag, ds.names());
        run.write("dag.dot", [&](std::ostream& f) { write_dot(f, dag, dot_options(ds)); });
        auto fits = fit_dag(ds, dag, m.method);
        write_fits(run, ds, dag, fits);
        for (std::size_t i = 0; i < fits.size(); ++i) {
            auto names = fits[i].parameter_names(dag.nodes()[i]);
            for (Eigen::Index k = 1; k < fits[i].coefficients.size(); ++k)
                run.out() << names[static_cast<std::size_t>(k)] << ' ' << std::fixed << std::setprecision(4)
                          << fits[i].coefficients[k] << std::defaultfloat << '\n';
        }
    } else {
        run.write("dag.dot", [&](std::ostream& f) { write_dot(f, r.dag); });
    }
}

void cmd_search_heuristic(const Options& o, Run& run) {
    MethodChoice m = method_of(o);
    Dataset ds;
    if (!o.data.empty()) ds = load_data(o, run);
    if (o.cache_path.empty() && o.data.empty()) throw Error("MissingArgument", "--cache or --data is required");
    ScoreCache cache = cache_for(o, ds, m, run);
    HeuristicConfig cfg;
    cfg.algorithm = parse_algorithm(o.algorithm);
    cfg.score = m.score;
    cfg.restarts = o.restarts;
    cfg.max_steps = o.max_steps;
    cfg.tabu_length = o.tabu_length;
    cfg.initial_temperature = o.temperature;
    cfg.cooling_factor = o.cooling;
    cfg.initial_density = o.density;
    cfg.seed = run.seed();
    cfg.jobs = o.jobs;
    SearchTrace trace = heuristic_search(cache, cfg);
    const auto& best = trace.restarts[trace.best_index()];
    run.write("dag.adj", [&](std::ostream& f) { write_adjacency(f, best.dag.nodes(), best.dag.adjacency()); });
    run.write("trace.csv", [&](std::ostream& f) {
        f << "restart,step,score\n";
        for (std::size_t r = 0; r < trace.restarts.size(); ++r)
            for (std::size_t s = 0; s < trace.restarts[r].best_scores.size(); ++s)
                f << r << ',' << s << ',' << g17(trace.restarts[r].best_scores[s]) << '\n';
    });
    std::vector<Dag> dags;
    for (const auto& r : trace.restarts) dags.push_back(r.dag);
    Consensus cons = majority_consensus(dags, o.consensus_threshold);
    run.write("consensus_frequency.txt", [&](std::ostream& f) { write_real_matrix(f, cache.nodes(), cons.frequency); });
    Dag consensus = repair_to_dag(cache.nodes(), cons.arcs, cons.frequency);
    run.write("consensus.adj", [&](std::ostream& f) { write_adjacency(f, consensus.nodes(), consensus.adjacency()); });
    run.out() << "best " << g17(best.score) << " (restart " << trace.best_index() << ")\n"
              << render_formula(best.dag.adjacency(), best.dag.nodes()) << '\n';
    if (!cons.acyclic) run.out() << "consensus was cyclic and has been repaired\n";
}

void cmd_fit(const Options& o, Run& run) {
    MethodChoice m = method_of(o);
    Dataset ds = load_data(o, run);
    Dag dag = dag_arg(o, ds, run);
    auto fits = fit_dag(ds, dag, m.method);
    write_fits(run, ds, dag, fits);
    if (m.method == Method::bayes) {
        run.write("marginals.csv", [&](std::ostream& f) {
            f << "parameter,x,density,probability\n";
            for (std::size_t i = 0; i < fits.size(); ++i)
                for (const auto& md : marginal_densities(fits[i], dag.nodes()[i], o.grid_points))
                    for (Eigen::Index k = 0; k < md.grid.size(); ++k)
                        f << md.name << ',' << g17(md.grid[k]) << ',' << g17(md.density[k]) << ','
                          << g17(md.probabilities[k]) << '\n';
        });
    }
    if (o.contributions) {
        run.write("contributions.csv", [&](std::ostream& f) {
            f << "node,row,loglik,leverage\n";
            for (std::size_t i = 0; i < fits.size(); ++i) {
                DesignMatrix d = build_design(ds, i, dag.adjacency().row_mask(i));
                ScoreContribution sc = score_contribution(fits[i], d);
                for (Eigen::Index r = 0; r < sc.loglik_terms.size(); ++r)
                    f << dag.nodes()[i] << ',' << r << ',' << g17(sc.loglik_terms[r]) << ','
                      << g17(sc.hat_diagonal[r]) << '\n';
            }
        });
    }
    double total = 0;
    for (const auto& f : fits) total += m.method == Method::bayes ? f.mlik : f.log_likelihood;
    run.out() << (m.method == Method::bayes ? "mlik " : "loglik ") << g17(total) << '\n';
}

void cmd_sweep(const Options& o, Run& run) {
    MethodChoice m = method_of(o);
    Dataset ds = load_data(o, run);
    ConstraintSet full = constraints_of(o, ds.names(), o.sweep_max);
    ScoreCache cache = build_cache(ds, full, m.method, {}, o.jobs);
    std::size_t min_k = 0;
    for (std::size_t i = 0; i < ds.n_vars(); ++i) min_k = std::max(min_k, full.retained.row_count(i));
    std::ostringstream table;
    table << "max_parents,total,objective,arcs\n";
    for (std::size_t k = std::max<std::size_t>(1, min_k); k <= o.sweep_max; ++k) {
        ConstraintSet ck = full;
        ck.max_parents.assign(ds.n_vars(), k);
        std::vector<std::vector<CacheEntry>> entries(ds.n_vars());
        for (std::size_t i = 0; i < ds.n_vars(); ++i)
            for (const auto& e : cache.entries(i))
                if (static_cast<std::size_t>(std::popcount(e.parents)) <= k) entries[i].push_back(e);
        ScoreCache ck_cache = ScoreCache::from_entries(ds.names(), ck, m.method, entries, cache.fingerprint());
        ExactResult r = most_probable_dag(best_parents_table(ck_cache, m.score, m.prior, kDefaultTableBudget, o.jobs));
        table << k << ',' << g17(r.total) << ',' << g17(r.objective) << ',' << r.dag.n_arcs() << '\n';
    }
    run.write("sweep.csv", [&](std::ostream& f) { f << table.str(); });
    run.out() << table.str();
}

void thinning_notice(const Options& o, Run& run) {
    if (o.thinning)
        run.err() << "notice: --thinning is ignored; parameter draws are exact and independent\n";
}

void cmd_simulate_dag(const Options& o, Run& run) {
    Dag d = simulate_dag(o.sim_nodes, o.sim_prob, run.seed());
    run.write("dag.adj", [&](std::ostream& f) { write_adjacency(f, d.nodes(), d.adjacency()); });
    run.write("dag.dot", [&](std::ostream& f) { write_dot(f, d); });
    run.out() << "arcs " << d.n_arcs() << '\n';
}

void cmd_simulate_data(const Options& o, Run& run) {
    thinning_notice(o, run);
    SimSpec spec;
    if (!o.spec_path.empty()) {
        spec = read_sim_spec(read_text(o.spec_path));
        run.input("spec", o.spec_path);
    } else {
        Dataset ds = load_data(o, run);
        Dag dag = dag_arg(o, ds, run);
        spec = spec_from_fits(dag, fit_dag(ds, dag, Method::bayes), ds.n_obs(), 1);
    }
    if (o.sim_n) spec.n_obs = *o.sim_n;
    if (o.seed || o.spec_path.empty()) spec.seed = run.seed();
    else run.set("seed", spec.seed);
    Dataset sim = simulate_data(spec);
    run.write("data.csv", [&](std::ostream& f) { write_dataset(f, sim); });
    run.write("dists.txt", [&](std::ostream& f) {
        for (std::size_t i = 0; i < sim.n_vars(); ++i) f << sim.names()[i] << '=' << to_string(sim.dists()[i]) << '\n';
    });
    run.write("spec.json", [&](std::ostream& f) { f << write_sim_spec(spec); });
    run.out() << "rows " << sim.n_obs() << '\n';
}

void cmd_bootstrap(const Options& o, Run& run) {
    thinning_notice(o, run);
    MethodChoice m = method_of(o);
    if (m.method != Method::bayes) throw Error("NotBayesFit", "bootstrap samples posterior grids and needs --method bayes");
    Dataset ds = load_data(o, run);
    Dag dag = dag_arg(o, ds, run);
    ConstraintSet c = constraints_of(o, ds.names(), o.max_parents);
    BootstrapOptions bo;
    bo.n_replicates = o.replicates;
    bo.seed = run.seed();
    bo.threshold = o.threshold;
    bo.mode = parse_support_mode(o.mode);
    bo.prior = m.prior;
    bo.jobs = o.jobs;
    BootstrapReport rep = run_bootstrap(fit_dag(ds, dag, Method::bayes), dag, ds, c, bo);
    run.write("support.txt", [&](std::ostream& f) { write_real_matrix(f, ds.names(), rep.support); });
    run.write("undirected_support.txt", [&](std::ostream& f) { write_real_matrix(f, ds.names(), rep.undirected_support); });
    run.write("replicates.csv", [&](std::ostream& f) { write_replicate_table(f, rep); });
    run.write("pruned.adj", [&](std::ostream& f) { write_adjacency(f, rep.pruned.nodes(), rep.pruned.adjacency()); });
    run.write("pruned.dot", [&](std::ostream& f) { write_dot(f, rep.pruned, dot_options(ds)); });
    std::vector<double> arcs;
    for (const auto& r : rep.replicates)
        if (r.ok) arcs.push_back(static_cast<double>(r.n_arcs));
    std::sort(arcs.begin(), arcs.end());
    run.out() << "replicates " << rep.n_replicates << "\nfailed " << rep.n_failed() << "\nmedian_arcs "
              << arcs[arcs.size() / 2] << "\noriginal_arcs " << dag.n_arcs() << "\npruned_arcs "
              << rep.pruned.n_arcs() << '\n';
    for (const auto& r : rep.replicates)
        if (!r.ok) run.err() << "replicate " << r.index << " failed: " << r.failure << '\n';
}

void cmd_strength(const Options& o, Run& run) {
    Dataset ds = load_data(o, run);
    Dag dag = dag_arg(o, ds, run);
    DiscretizedData disc = discretize(ds, parse_bin_rule(o.rule), o.bins);
    for (const auto& w : disc.warnings) run.err() << "warning: " << w << '\n';
    Eigen::MatrixXd pls = pls_matrix(dag, disc);
    run.write("pls.txt", [&](std::ostream& f) { write_real_matrix(f, ds.names(), pls); });
    DotOptions d = dot_options(ds);
    d.weights = pls;
    run.write("strength.dot", [&](std::ostream& f) { write_dot(f, dag, d); });
    for (std::size_t c = 0; c < dag.size(); ++c)
        for (auto p : dag.parents(c))
            run.out() << dag.nodes()[p] << " -> " << dag.nodes()[c] << ' ' << std::fixed << std::setprecision(3)
                      << pls(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p)) << std::defaultfloat << '\n';
}

void cmd_compare(const Options& o, Run& run) {
    Dag ref = read_dag_file(o.reference);
    Dag cand = reorder(read_dag_file(o.candidate), ref.nodes());
    run.input("reference", o.reference);
    run.input("candidate", o.candidate);
    DagComparison c = compare_dags(ref, cand);
    std::ostringstream s;
    s << "tp " << c.tp << "\nfp " << c.fp << "\ntn " << c.tn << "\nfn " << c.fn << "\ntpr " << c.tpr << "\nfpr "
      << c.fpr << "\naccuracy " << c.accuracy << "\ng_measure " << c.g_measure << "\nf1 " << c.f1 << "\nppv "
      << c.ppv << "\nfalse_omission_rate " << c.false_omission_rate << "\nhamming " << c.hamming << '\n';
    run.write("compare.txt", [&](std::ostream& f) { f << s.str(); });
    run.out() << s.str();
}

void cmd_info(const Options& o, Run& run) {
    Dag d = read_dag_file(o.dag_file);
    run.input("dag", o.dag_file);
    DagMetrics m = info_metrics(d);
    std::ostringstream s;
    s << "nodes " << m.n_nodes << "\narcs " << m.n_arcs << "\navg_markov_blanket " << m.avg_markov_blanket
      << "\navg_neighborhood " << m.avg_neighborhood << "\navg_parents " << m.avg_parents << "\navg_children "
      << m.avg_children << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        s << "blanket " << d.nodes()[i] << ':';
        for (auto j : markov_blanket(d, i)) s << ' ' << d.nodes()[j];
        s << '\n';
    }
    run.write("info.txt", [&](std::ostream& f) { f << s.str(); });
    run.out() << s.str();
}

// ---- option wiring -------------------------------------------------------

void data_opts(CLI::App* a, Options& o) {
    a->add_option("--data", o.data, "comma-separated data file with a header row");
    a->add_option("--dists", o.dists, "distribution file: column=binomial|gaussian|poisson per line");
    a->add_flag("--no-standardize", o.no_standardize, "keep gaussian columns on their original scale");
}

void constraint_opts(CLI::App* a, Options& o) {
    a->add_option("--ban", o.ban, "banned arcs: formula (e.g. '~female|.') or adjacency file");
    a->add_option("--retain", o.retain, "retained arcs: formula or adjacency file");
    a->add_option("--max-parents", o.max_parents, "maximum parents per node")->capture_default_str();
}

void method_opts(CLI::App* a, Options& o) {
    a->add_option("--method", o.method, "bayes (Laplace marginal likelihood) or mle")
        ->check(CLI::IsMember({"bayes", "mle"}))
        ->capture_default_str();
    a->add_option("--score", o.score, "mlik for bayes; loglik, aic, bic or mdl for mle (default: mlik / bic)")
        ->check(CLI::IsMember({"mlik", "loglik", "aic", "bic", "mdl"}));
    a->add_option("--prior", o.prior, "structural prior")
        ->check(CLI::IsMember({"koivisto", "uninformative"}))
        ->capture_default_str();
}

void common_opts(CLI::App* a, Options& o, bool stochastic) {
    if (stochastic) a->add_option("--seed", o.seed, "random seed (generated and printed when omitted)");
    a->add_option("--jobs", o.jobs, "worker threads (default: available cores)");
    a->add_option("--out", o.out, "output directory")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Additive Bayesian network structure learning"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build-cache", "score every enumerated parent set");
    data_opts(build, o);
    constraint_opts(build, o);
    method_opts(build, o);
    common_opts(build, o, false);

    auto* search = app.add_subcommand("search", "structure search over a score cache");
    search->require_subcommand(1);
    auto* exact = search->add_subcommand("exact", "globally optimal DAG by dynamic programming");
    auto* heur = search->add_subcommand("heuristic", "hill climbing, tabu search or simulated annealing");
    for (auto* s : {exact, heur}) {
        s->add_option("--cache", o.cache_path, "cache file from build-cache");
        data_opts(s, o);
        constraint_opts(s, o);
        method_opts(s, o);
    }
    common_opts(exact, o, false);
    common_opts(heur, o, true);
    heur->add_option("--algorithm", o.algorithm, "hill_climb, tabu or simulated_annealing")
        ->check(CLI::IsMember({"hill_climb", "tabu", "simulated_annealing"}))
        ->capture_default_str();
    heur->add_option("--restarts", o.restarts, "independent restarts")->capture_default_str();
    heur->add_option("--max-steps", o.max_steps, "steps per restart")->capture_default_str();
    heur->add_option("--tabu-length", o.tabu_length, "tabu list length")->capture_default_str();
    heur->add_option("--temperature", o.temperature, "initial annealing temperature")->capture_default_str();
    heur->add_option("--cooling", o.cooling, "geometric cooling factor in (0,1)")->capture_default_str();
    heur->add_option("--density", o.density, "arc density of random start DAGs")->capture_default_str();
    heur->add_option("--consensus-threshold", o.consensus_threshold, "majority consensus threshold")
        ->capture_default_str();

    auto* fit = app.add_subcommand("fit", "fit the node models of a given DAG");
    data_opts(fit, o);
    method_opts(fit, o);
    common_opts(fit, o, false);
    fit->add_option("--dag", o.dag_path, "adjacency file");
    fit->add_option("--formula", o.formula, "DAG as a formula, e.g. '~b|a + c|a:b'");
    fit->add_option("--grid", o.grid_points, "grid points per marginal density")->capture_default_str();
    fit->add_flag("--contributions", o.contributions, "write per-observation log-likelihood and leverage");

    auto* sweep = app.add_subcommand("sweep-parents", "best network score for max parents 1..max");
    data_opts(sweep, o);
    sweep->add_option("--ban", o.ban, "banned arcs: formula or adjacency file");
    sweep->add_option("--retain", o.retain, "retained arcs: formula or adjacency file");
    sweep->add_option("--max", o.sweep_max, "largest parent limit")->capture_default_str();
    method_opts(sweep, o);
    common_opts(sweep, o, false);

    auto* sim = app.add_subcommand("simulate", "random DAGs and data");
    sim->require_subcommand(1);
    auto* sim_dag = sim->add_subcommand("dag", "random DAG over a permuted triangular matrix");
    sim_dag->add_option("--nodes", o.sim_nodes, "number of nodes")->capture_default_str();
    sim_dag->add_option("--prob", o.sim_prob, "arc probability")->capture_default_str();
    common_opts(sim_dag, o, true);
    auto* sim_data = sim->add_subcommand("data", "ancestral sampling from a model");
    sim_data->add_option("--spec", o.spec_path, "JSON model; otherwise fit --dag/--formula on --data");
    data_opts(sim_data, o);
    sim_data->add_option("--dag", o.dag_path, "adjacency file");
    sim_data->add_option("--formula", o.formula, "DAG as a formula");
    sim_data->add_option("--n", o.sim_n, "rows to simulate (default: from the spec or the data)");
    sim_data->add_option("--thinning", o.thinning, "accepted for compatibility; ignored");
    common_opts(sim_data, o, true);

    auto* boot = app.add_subcommand("bootstrap", "parametric bootstrap of arc support");
    data_opts(boot, o);
    constraint_opts(boot, o);
    method_opts(boot, o);
    common_opts(boot, o, true);
    boot->add_option("--dag", o.dag_path, "adjacency file of the DAG to assess");
    boot->add_option("--formula", o.formula, "DAG as a formula");
    boot->add_option("--replicates", o.replicates, "bootstrap replicates")->capture_default_str();
    boot->add_option("--threshold", o.threshold, "support needed to keep an arc")->capture_default_str();
    boot->add_option("--mode", o.mode, "directed or undirected support")
        ->check(CLI::IsMember({"directed", "undirected"}))
        ->capture_default_str();
    boot->add_option("--thinning", o.thinning, "accepted for compatibility; ignored");

    auto* str = app.add_subcommand("strength", "percentage link strength of each arc");
    data_opts(str, o);
    common_opts(str, o, false);
    str->add_option("--dag", o.dag_path, "adjacency file");
    str->add_option("--formula", o.formula, "DAG as a formula");
    str->add_option("--rule", o.rule, "fixed_k, sturges, scott or freedman_diaconis")
        ->check(CLI::IsMember({"fixed_k", "sturges", "scott", "freedman_diaconis"}))
        ->capture_default_str();
    str->add_option("--bins", o.bins, "bins for fixed_k (rank quantiles)")->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "arc-wise comparison of two DAGs");
    cmp->add_option("reference", o.reference, "reference adjacency file")->required();
    cmp->add_option("candidate", o.candidate, "candidate adjacency file")->required();
    common_opts(cmp, o, false);

    auto* info = app.add_subcommand("info", "summary metrics of a DAG");
    info->add_option("dag", o.dag_file, "adjacency file")->required();
    common_opts(info, o, false);

    std::vector<std::string> argv_store{"abn"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: UsageError: " << e.what() << '\n';
        return 2;
    }

    std::string name;
    for (const auto* s = &app; !s->get_subcommands().empty();) {
        s = s->get_subcommands().front();
        name += (name.empty() ? "" : " ") + s->get_name();
    }
    Run run(name, o, args, out, err);
    try {
        if (build->parsed()) cmd_build_cache(o, run);
        else if (exact->parsed()) cmd_search_exact(o, run);
        else if (heur->parsed()) cmd_search_heuristic(o, run);
        else if (fit->parsed()) cmd_fit(o, run);
        else if (sweep->parsed()) cmd_sweep(o, run);
        else if (sim_dag->parsed()) cmd_simulate_dag(o, run);
        else if (sim_data->parsed()) cmd_simulate_data(o, run);
        else if (boot->parsed()) cmd_bootstrap(o, run);
        else if (str->parsed()) cmd_strength(o, run);
        else if (cmp->parsed()) cmd_compare(o, run);
        else if (info->parsed()) cmd_info(o, run);
        run.finish();
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: IOError: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace abn
