#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "abn/error.hpp"
#include "abn/simulate.hpp"

using namespace abn;

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

std::uint64_t mask_of(const Dag& d, std::size_t c) {
    std::uint64_t m = 0;
    for (auto p : d.parents(c)) m |= std::uint64_t{1} << p;
    return m;
}

}  // namespace

TEST_CASE("random dags at the extremes") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        CHECK(simulate_dag(7, 0.0, s).n_arcs() == 0);
        Dag full = simulate_dag(7, 1.0, s);
        CHECK(full.n_arcs() == 21);
        CHECK(topological_order(full).size() == 7);
    }
    CHECK(simulate_dag(3, 0.5, 1).nodes() == std::vector<std::string>{"X1", "X2", "X3"});
    CHECK(simulate_dag(2, 0.5, 1, {"a", "b"}).nodes() == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(simulate_dag(4, 1.5, 1), Error);
    CHECK_THROWS_AS(simulate_dag(4, -0.1, 1), Error);
}

TEST_CASE("arc fraction within three sigma") {
    const double p = 0.3;
    const std::size_t n = 6, pairs = n * (n - 1) / 2;
    std::size_t arcs = 0;
    const int trials = 10000;
    std::vector<int> position_hits(n * n, 0);
    for (int t = 0; t < trials; ++t) {
        Dag d = simulate_dag(n, p, static_cast<std::uint64_t>(t));
        arcs += d.n_arcs();
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t q = 0; q < n; ++q)
                if (d.has_arc(q, c)) ++position_hits[c * n + q];
    }
    double total = static_cast<double>(pairs) * trials;
    double frac = static_cast<double>(arcs) / total;
    CHECK(std::abs(frac - p) < 3 * std::sqrt(p * (1 - p) / total));
    // the permutation leaves no direction preferred by label
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t q = 0; q < n; ++q)
            if (c != q) CHECK(std::abs(position_hits[c * n + q] / double(trials) - p / 2) < 0.02);
}

TEST_CASE("posterior grid draws") {
    Rng rng = make_rng(5);
    ParameterGrid two{"t", Eigen::Vector2d(0, 1), Eigen::Vector2d(0.5, 0.5)};
    double sum = 0;
    for (int i = 0; i < 100000; ++i) sum += sample_posterior_params({two}, rng)[0];
    CHECK(std::abs(sum / 1e5 - 0.5) < 0.01);

    ParameterGrid one{"c", Eigen::VectorXd::Constant(1, 3.25), Eigen::VectorXd::Ones(1)};
    for (int i = 0; i < 10; ++i) CHECK(sample_posterior_params({one}, rng)[0] == 3.25);

    MarginalDensity md;
    md.name = "z";
    md.grid = Eigen::VectorXd::LinSpaced(2001, -6, 6);
    md.density = (-0.5 * md.grid.array().square()).exp() / std::sqrt(2 * std::numbers::pi);
    md.probabilities = md.density / md.density.sum();
    auto grids = grid_posterior({md});
    double s1 = 0, s2 = 0;
    for (int i = 0; i < 100000; ++i) {
        double v = sample_posterior_params(grids, rng)[0];
        s1 += v;
        s2 += v * v;
    }
    double sd = std::sqrt(s2 / 1e5 - std::pow(s1 / 1e5, 2));
    CHECK(std::abs(sd - 1) < 0.02);

    ParameterGrid bad{"b", Eigen::Vector2d(0, 1), Eigen::Vector2d(-0.5, 1.5)};
    CHECK_THROWS_AS(sample_posterior_params({bad}, rng), Error);
    CHECK(sample_posterior_params({two, grids[0]}, 9) ==
          sample_posterior_params({two, grids[0]}, 9));
}

TEST_CASE("ancestral sampling") {
    BinaryMatrix m(2);
    m(1, 0) = 1;
    SimSpec spec;
    spec.dag = Dag({"a", "b"}, m);
    spec.nodes = {NodeModel{Distribution::gaussian, 0, {}, 1}, NodeModel{Distribution::gaussian, 0, {{"a", 1.0}}, 1}};
    spec.n_obs = 10000;
    spec.seed = 3;
    Dataset ds = simulate_data(spec);
    CHECK(ds.n_obs() == 10000);
    CHECK(std::abs(correlation(ds.column(0), ds.column(1)) - 1 / std::sqrt(2.0)) < 0.03);

    Dataset again = simulate_data(spec);
    CHECK(again.column(1) == ds.column(1));
    CHECK(again.fingerprint() == ds.fingerprint());
    spec.seed = 4;
    CHECK_FALSE(simulate_data(spec).column(1) == ds.column(1));

    SimSpec bin;
    bin.dag = Dag::empty({"x", "y"});
    bin.nodes = {NodeModel{Distribution::binomial}, NodeModel{Distribution::binomial}};
    bin.n_obs = 4000;
    Dataset b = simulate_data(bin);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(b.column(j).mean() - 0.5) < 3 * std::sqrt(0.25 / 4000));

    SimSpec big;
    big.dag = Dag::empty({"c"});
    big.nodes = {NodeModel{Distribution::poisson, 25.0}};
    big.n_obs = 10;
    try {
        simulate_data(big);
        FAIL("expected PoissonOverflow");
    } catch (const Error& e) {
        CHECK(std::string(e.kind()) == "PoissonOverflow");
    }

    SimSpec wrong = spec;
    wrong.nodes[1].effects.clear();
    CHECK_THROWS_AS(wrong.validate(), Error);
    wrong = spec;
    wrong.nodes[0].sd = 0;
    CHECK_THROWS_AS(wrong.validate(), Error);
}

TEST_CASE("spec round trip") {
    Dag dag = simulate_dag(5, 0.6, 7);
    std::vector<Distribution> fams{Distribution::gaussian, Distribution::binomial, Distribution::poisson,
                                   Distribution::gaussian, Distribution::binomial};
    SimSpec spec = random_model(dag, fams, 50, 8);
    std::string text = write_sim_spec(spec);
    SimSpec back = read_sim_spec(text);
    CHECK(back.dag == spec.dag);
    CHECK(back.n_obs == 50);
    CHECK(write_sim_spec(back) == text);
    CHECK(simulate_data(back).column(2) == simulate_data(spec).column(2));
    CHECK_THROWS_AS(read_sim_spec("{ not json"), Error);
    for (std::size_t i = 0; i < 5; ++i)
        for (const auto& [name, v] : spec.nodes[i].effects) {
            double scale = fams[i] == Distribution::poisson ? 0.3 : 1.0;
            CHECK(std::abs(v) >= 0.5 * scale - 1e-12);
            CHECK(std::abs(v) <= 1.5 * scale + 1e-12);
        }
}

TEST_CASE("parameters are recovered within three posterior sds") {
    Dag dag = simulate_dag(4, 0.8, 31, {"a", "b", "c", "d"});
    for (auto fam : {Distribution::gaussian, Distribution::binomial, Distribution::poisson}) {
        std::vector<Distribution> fams(4, Distribution::gaussian);
        for (std::size_t i = 0; i < 4; ++i)
            if (!dag.parents(i).empty()) fams[i] = fam;
        SimSpec spec = random_model(dag, fams, 10000, 32);
        for (auto& nm : spec.nodes) nm.intercept = 0.2;
        Dataset ds = simulate_data(spec);
        for (std::size_t i = 0; i < 4; ++i) {
            if (dag.parents(i).empty()) continue;
            DesignMatrix d = build_design(ds, i, mask_of(dag, i));
            FitResult f = fit_node(d, fams[i], Method::bayes);
            Eigen::MatrixXd cov = f.neg_hessian.inverse();
            REQUIRE(f.coefficients.size() == 1 + static_cast<Eigen::Index>(spec.nodes[i].effects.size()));
            CHECK(std::abs(f.coefficients[0] - 0.2) < 3 * std::sqrt(cov(0, 0)));
            for (Eigen::Index k = 1; k < f.coefficients.size(); ++k) {
                double truth = 0;
                for (const auto& [name, v] : spec.nodes[i].effects)
                    if (name == f.labels[static_cast<std::size_t>(k)]) truth = v;
                CHECK(std::abs(f.coefficients[k] - truth) < 3 * std::sqrt(cov(k, k)));
            }
        }
    }
}

TEST_CASE("specs from fits use the fitted coefficients") {
    Dag dag = simulate_dag(3, 1.0, 41, {"a", "b", "c"});
    SimSpec truth = random_model(dag, {Distribution::gaussian, Distribution::gaussian, Distribution::gaussian}, 500, 42);
    Dataset ds = simulate_data(truth);
    std::vector<FitResult> fits;
    for (std::size_t i = 0; i < 3; ++i) fits.push_back(fit_node(build_design(ds, i, mask_of(dag, i)), Distribution::gaussian, Method::bayes));
    SimSpec s = spec_from_fits(dag, fits, 100, 1);
    CHECK_NOTHROW(s.validate());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s.nodes[i].intercept == fits[i].coefficients[0]);
        CHECK(s.nodes[i].sd == doctest::Approx(std::exp(-*fits[i].log_precision / 2)));
    }
}
