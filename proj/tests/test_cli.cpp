#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "abn/cli.hpp"
#include "abn/score_cache.hpp"
#include "abn/search_exact.hpp"
#include "abn/simulate.hpp"

using namespace abn;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct Workspace {
    fs::path root;
    Workspace() {
        root = fs::temp_directory_path() / ("abn_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        Dag dag = simulate_dag(4, 0.7, 5, {"a", "b", "c", "d"});
        SimSpec spec = random_model(
            dag, {Distribution::gaussian, Distribution::binomial, Distribution::poisson, Distribution::gaussian}, 200, 6);
        std::ofstream(root / "spec.json") << write_sim_spec(spec);
    }
    ~Workspace() { fs::remove_all(root); }
    std::string path(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("end to end through the command line") {
    Workspace w;
    auto sim = run({"simulate", "data", "--spec", w.path("spec.json"), "--out", w.path("sim")});
    REQUIRE(sim.code == 0);
    REQUIRE(fs::exists(w.path("sim/data.csv")));
    std::string data = w.path("sim/data.csv"), dists = w.path("sim/dists.txt");

    auto build = run({"build-cache", "--data", data, "--dists", dists, "--max-parents", "2", "--out", w.path("c1")});
    REQUIRE(build.code == 0);
    auto again = run({"build-cache", "--data", data, "--dists", dists, "--max-parents", "2", "--out", w.path("c1")});
    REQUIRE(again.code == 0);
    std::string cache_text = slurp(w.path("c1/cache.txt"));
    auto third = run({"build-cache", "--data", data, "--dists", dists, "--max-parents", "2", "--jobs", "3", "--out",
                      w.path("c2")});
    CHECK(slurp(w.path("c2/cache.txt")) == cache_text);
    std::string manifest = slurp(w.path("c1/manifest.json"));
    CHECK(manifest.find("\"subcommand\"") != std::string::npos);
    CHECK(manifest.find("fingerprint") != std::string::npos);
    run({"build-cache", "--data", data, "--dists", dists, "--max-parents", "2", "--out", w.path("c1")});
    CHECK(slurp(w.path("c1/manifest.json")) == manifest);

    // the search result matches the library on the same cache
    auto exact = run({"search", "exact", "--cache", w.path("c1/cache.txt"), "--out", w.path("s1")});
    REQUIRE(exact.code == 0);
    std::istringstream cin_(cache_text);
    ScoreCache cache = ScoreCache::read(cin_);
    ExactResult r = most_probable_dag(best_parents_table(cache, ScoreType::mlik));
    std::ifstream adj(w.path("s1/dag.adj"));
    auto [names, m] = read_adjacency(adj);
    CHECK(m == r.dag.adjacency());
    CHECK(exact.out.find("arcs " + std::to_string(r.dag.n_arcs())) != std::string::npos);

    auto cmp = run({"compare", w.path("s1/dag.adj"), w.path("s1/dag.adj"), "--out", w.path("cmp")});
    CHECK(cmp.code == 0);
    CHECK(cmp.out.find("hamming 0") != std::string::npos);

    auto info = run({"info", w.path("s1/dag.adj"), "--out", w.path("info")});
    CHECK(info.code == 0);
    CHECK(info.out.find("avg_markov_blanket") != std::string::npos);

    auto mismatch = run({"search", "exact", "--cache", w.path("c1/cache.txt"), "--method", "mle", "--out", w.path("bad")});
    CHECK(mismatch.code == 1);
    CHECK(mismatch.err.rfind("error: ", 0) == 0);

    // a cache reused with other data is stale
    auto sim2 = run({"simulate", "data", "--spec", w.path("spec.json"), "--seed", "99", "--out", w.path("sim2")});
    REQUIRE(sim2.code == 0);
    auto stale = run({"search", "exact", "--cache", w.path("c1/cache.txt"), "--data", w.path("sim2/data.csv"),
                      "--dists", dists, "--out", w.path("stale")});
    CHECK(stale.code == 1);
    CHECK(stale.err.find("StaleCache") != std::string::npos);

    auto heur = run({"search", "heuristic", "--cache", w.path("c1/cache.txt"), "--algorithm", "tabu", "--restarts",
                     "3", "--seed", "4", "--out", w.path("h")});
    CHECK(heur.code == 0);
    CHECK(fs::exists(w.path("h/trace.csv")));

    auto fit = run({"fit", "--data", data, "--dists", dists, "--dag", w.path("s1/dag.adj"), "--grid", "100",
                    "--contributions", "--out", w.path("fit")});
    CHECK(fit.code == 0);
    CHECK(fs::exists(w.path("fit/marginals.csv")));
    CHECK(fs::exists(w.path("fit/contributions.csv")));

    auto str = run({"strength", "--data", data, "--dists", dists, "--dag", w.path("s1/dag.adj"), "--out", w.path("pls")});
    CHECK(str.code == 0);
    CHECK(fs::exists(w.path("pls/pls.txt")));

    auto sweep = run({"sweep-parents", "--data", data, "--dists", dists, "--max", "3", "--out", w.path("sweep")});
    CHECK(sweep.code == 0);
    CHECK(fs::exists(w.path("sweep/sweep.csv")));

    auto boot = run({"bootstrap", "--data", data, "--dists", dists, "--dag", w.path("s1/dag.adj"), "--replicates", "4",
                     "--max-parents", "2", "--seed", "3", "--thinning", "20", "--out", w.path("boot")});
    CHECK(boot.code == 0);
    CHECK(boot.err.find("thinning") != std::string::npos);
    CHECK(fs::exists(w.path("boot/support.txt")));
}

TEST_CASE("seeds, help and usage errors") {
    Workspace w;
    auto a = run({"simulate", "dag", "--nodes", "6", "--prob", "0.5", "--out", w.path("a")});
    CHECK(a.code == 0);
    CHECK(a.out.rfind("seed: ", 0) == 0);
    auto b = run({"simulate", "dag", "--nodes", "6", "--prob", "0.5", "--seed", "8", "--out", w.path("b")});
    auto c = run({"simulate", "dag", "--nodes", "6", "--prob", "0.5", "--seed", "8", "--out", w.path("c")});
    CHECK(b.out.find("seed: ") == std::string::npos);
    CHECK(slurp(w.path("b/dag.adj")) == slurp(w.path("c/dag.adj")));

    CHECK(run({"--help"}).code == 0);
    CHECK(run({"search", "exact", "--help"}).code == 0);
    auto v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out == std::string(kVersion) + "\n");
    auto bad = run({"build-cache", "--no-such-flag"});
    CHECK(bad.code == 2);
    CHECK(bad.err.rfind("error: UsageError", 0) == 0);
    CHECK(run({}).code == 2);
    auto missing = run({"build-cache", "--out", w.path("m")});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("MissingArgument") != std::string::npos);
    auto prob = run({"simulate", "dag", "--nodes", "3", "--prob", "2", "--seed", "1", "--out", w.path("p")});
    CHECK(prob.code == 1);
    CHECK(prob.err.find("InvalidProbability") != std::string::npos);
}
