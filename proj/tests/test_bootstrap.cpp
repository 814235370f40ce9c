#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "abn/bootstrap.hpp"
#include "abn/error.hpp"
#include "abn/search_exact.hpp"
#include "fixtures.hpp"

using namespace abn;

namespace {

std::vector<FitResult> fit_all(const Dag& dag, const Dataset& ds) {
    std::vector<FitResult> fits;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        std::uint64_t m = 0;
        for (auto p : dag.parents(i)) m |= std::uint64_t{1} << p;
        fits.push_back(fit_node(build_design(ds, i, m), ds.dists()[i], Method::bayes));
    }
    return fits;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : (v[k - 1] + v[k]) / 2;
}

}  // namespace

TEST_CASE("support matrices") {
    std::vector<std::string> names{"a", "b"};
    BinaryMatrix ab(2), ba(2);
    ab(1, 0) = 1;
    ba(0, 1) = 1;
    auto s = arc_support_matrix({Dag(names, ab)});
    CHECK(s.directed(1, 0) == 1);
    CHECK(s.directed(0, 1) == 0);
    auto t = arc_support_matrix({Dag(names, ab), Dag(names, ba)});
    CHECK(t.directed(1, 0) == 0.5);
    CHECK(t.directed(0, 1) == 0.5);
    CHECK(t.undirected(0, 1) == 1.0);
    CHECK(t.undirected(1, 0) == 1.0);
    CHECK_THROWS_AS(arc_support_matrix({}), Error);
    CHECK_THROWS_AS(arc_support_matrix({Dag(names, ab), Dag::empty({"a", "c"})}), Error);
}

TEST_CASE("pruning") {
    std::mt19937_64 rng(401);
    std::uniform_real_distribution<double> u;
    for (int t = 0; t < 100; ++t) {
        Dag original = simulate_dag(6, 0.5, rng());
        SupportMatrices s;
        s.directed = Eigen::MatrixXd::Zero(6, 6);
        for (Eigen::Index i = 0; i < 6; ++i)
            for (Eigen::Index j = 0; j < 6; ++j)
                if (i != j) s.directed(i, j) = u(rng);
        s.undirected = s.directed + s.directed.transpose();
        CHECK(prune_by_support(original, s, 0.0) == original);
        CHECK(prune_by_support(original, s, 1.0 + 1e-9).n_arcs() == 0);
        std::size_t prev = original.n_arcs();
        for (double th = 0.1; th <= 1.0; th += 0.1) {
            for (auto mode : {SupportMode::directed, SupportMode::undirected}) {
                Dag p = prune_by_support(original, s, th, mode);
                for (std::size_t c = 0; c < 6; ++c)
                    for (std::size_t q = 0; q < 6; ++q)
                        if (p.has_arc(q, c)) CHECK(original.has_arc(q, c));
            }
            Dag p = prune_by_support(original, s, th);
            CHECK(p.n_arcs() <= prev);
            prev = p.n_arcs();
        }
    }
}

TEST_CASE("bootstrap pipeline") {
    Dag truth;
    for (std::uint64_t seed = 402; truth.n_arcs() < 3; ++seed) truth = simulate_dag(5, 0.3, seed);
    Dataset ds = fixture::simulated(truth, fixture::mixed_families(5), 341, 403);
    auto cons = ConstraintSet::unconstrained(5, 2);
    auto fits = fit_all(truth, ds);

    BootstrapOptions one;
    one.n_replicates = 1;
    one.grid_points = 200;
    auto r1 = run_bootstrap(fits, truth, ds, cons, one);
    REQUIRE(r1.replicates.size() == 1);
    REQUIRE(r1.replicates[0].ok);
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t q = 0; q < 5; ++q)
            CHECK(r1.support(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(q)) ==
                  (r1.replicates[0].dag.has_arc(q, c) ? 1.0 : 0.0));

    BootstrapOptions opt;
    opt.n_replicates = 200;
    opt.grid_points = 200;
    opt.seed = 7;
    auto a = run_bootstrap(fits, truth, ds, cons, opt);
    opt.jobs = 2;
    auto b = run_bootstrap(fits, truth, ds, cons, opt);
    CHECK(a.support == b.support);
    CHECK(a.pruned == b.pruned);
    std::ostringstream ta, tb;
    write_replicate_table(ta, a);
    write_replicate_table(tb, b);
    CHECK(ta.str() == tb.str());
    CHECK(a.n_failed() == 0);
    CHECK(a.support.minCoeff() >= 0);
    CHECK(a.support.maxCoeff() <= 1);
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t q = 0; q < 5; ++q)
            if (a.pruned.has_arc(q, c)) CHECK(truth.has_arc(q, c));

    // true arcs are better supported than spurious ones
    std::vector<double> true_support, false_support;
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t q = 0; q < 5; ++q) {
            if (c == q) continue;
            double s = a.undirected_support(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(q));
            (truth.has_arc(q, c) || truth.has_arc(c, q) ? true_support : false_support).push_back(s);
        }
    CHECK(median(true_support) > median(false_support));

    std::ostringstream table;
    write_replicate_table(table, a);
    const std::string text = table.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 201);
}

TEST_CASE("banned children stay empty across replicates") {
    Dag truth = simulate_dag(4, 0.5, 404, {"a", "b", "c", "d"});
    Dataset ds = fixture::simulated(truth, fixture::mixed_families(4), 200, 405);
    auto cons = ConstraintSet::unconstrained(4, 2);
    std::size_t root = topological_order(truth)[0];
    for (std::size_t j = 0; j < 4; ++j)
        if (j != root) cons.banned(root, j) = 1;
    BootstrapOptions opt;
    opt.n_replicates = 20;
    opt.grid_points = 100;
    auto r = run_bootstrap(fit_all(truth, ds), truth, ds, cons, opt);
    CHECK(r.support.row(static_cast<Eigen::Index>(root)).sum() == 0);
}

TEST_CASE("bootstrap input errors") {
    Dag truth = simulate_dag(3, 0.6, 406);
    Dataset ds = fixture::simulated(truth, fixture::mixed_families(3), 100, 407);
    auto cons = ConstraintSet::unconstrained(3, 2);
    std::vector<FitResult> mle;
    for (std::size_t i = 0; i < 3; ++i) {
        std::uint64_t m = 0;
        for (auto p : truth.parents(i)) m |= std::uint64_t{1} << p;
        mle.push_back(fit_node(build_design(ds, i, m), ds.dists()[i], Method::mle));
    }
    BootstrapOptions opt;
    opt.n_replicates = 2;
    CHECK_THROWS_AS(run_bootstrap(mle, truth, ds, cons, opt), Error);
    CHECK(parse_support_mode("undirected") == SupportMode::undirected);
}
