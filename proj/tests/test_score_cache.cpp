#include <doctest.h>

#include <bit>
#include <functional>
#include <set>
#include <sstream>

#include "abn/error.hpp"
#include "abn/score_cache.hpp"
#include "abn/simulate.hpp"
#include "fixtures.hpp"

using namespace abn;

namespace {

std::string kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return std::string(e.kind());
    }
    return "";
}

}  // namespace

TEST_CASE("parent set enumeration") {
    auto c = ConstraintSet::unconstrained(8, 4);
    for (std::size_t i = 0; i < 8; ++i) {
        auto sets = enumerate_parent_sets(i, c);
        CHECK(sets.size() == 99);
        CHECK(std::is_sorted(sets.begin(), sets.end()));
        CHECK(std::set<std::uint64_t>(sets.begin(), sets.end()).size() == sets.size());
        for (auto m : sets) {
            CHECK((m >> i & 1) == 0);
            CHECK(std::popcount(m) <= 4);
        }
    }
    // fully banned row
    for (std::size_t j = 0; j < 8; ++j)
        if (j != 2) c.banned(2, j) = 1;
    CHECK(enumerate_parent_sets(2, c) == std::vector<std::uint64_t>{0});
    CHECK(enumerate_parent_sets(3, c).size() == 99);
    // retained at the limit
    auto r = ConstraintSet::unconstrained(4, 1);
    r.retained(0, 1) = 1;
    CHECK(enumerate_parent_sets(0, r) == std::vector<std::uint64_t>{0b10});
    r.retained(0, 2) = 1;
    CHECK(kind_of([&] { enumerate_parent_sets(0, r); }) == "RetainedExceedsLimit");
    auto s = ConstraintSet::unconstrained(5, 2);
    s.retained(1, 3) = 1;
    for (auto m : enumerate_parent_sets(1, s)) CHECK((m >> 3 & 1) == 1);
    CHECK(enumerate_parent_sets(1, s).size() == 4);  // {3} plus one of 0, 2, 4
}

TEST_CASE("entry count grows with max_parents until saturation") {
    std::size_t prev = 0;
    for (std::size_t k = 0; k < 6; ++k) {
        auto c = ConstraintSet::unconstrained(6, k);
        std::size_t total = 0;
        for (std::size_t i = 0; i < 6; ++i) total += enumerate_parent_sets(i, c).size();
        if (k <= 5) CHECK(total > prev);
        prev = total;
    }
    CHECK(prev == 6 * 32);
}

TEST_CASE("build, decompose, serialize") {
    Dag truth = simulate_dag(5, 0.4, 3);
    Dataset ds = fixture::simulated(truth, fixture::mixed_families(5), 200, 4);
    auto cons = ConstraintSet::unconstrained(5, 2);
    ScoreCache bayes = build_cache(ds, cons, Method::bayes);
    CHECK(bayes.total_entries() == 5 * 11);
    for (std::size_t i = 0; i < 5; ++i)
        for (const auto& e : bayes.entries(i)) CHECK(std::isfinite(e.mlik));

    // decomposability against fit_node directly
    double direct = 0, sum = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        std::uint64_t mask = 0;
        for (auto p : truth.parents(i)) mask |= std::uint64_t{1} << p;
        if (std::popcount(mask) > 2) mask = 0;
        direct += fit_node(build_design(ds, i, mask), ds.dists()[i], Method::bayes).mlik;
        sum += bayes.lookup(i, mask).mlik;
    }
    CHECK(direct == sum);

    // limit 0: one entry per node
    ScoreCache zero = build_cache(ds, ConstraintSet::unconstrained(5, 0), Method::mle);
    CHECK(zero.total_entries() == 5);
    double empty_total = 0;
    for (std::size_t i = 0; i < 5; ++i) empty_total += zero.entries(i)[0].bic;
    CHECK(zero.total(Dag::empty(ds.names()), ScoreType::bic) == empty_total);

    std::ostringstream a, b;
    bayes.write(a);
    build_cache(ds, cons, Method::bayes).write(b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    ScoreCache back = ScoreCache::read(in);
    std::ostringstream c;
    back.write(c);
    CHECK(c.str() == a.str());
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < bayes.entries(i).size(); ++k)
            CHECK(back.entries(i)[k].mlik == bayes.entries(i)[k].mlik);
    CHECK(back.fingerprint() == ds.fingerprint());
    CHECK(back.method() == Method::bayes);
}

TEST_CASE("parallel build is independent of job count") {
    Dag truth = simulate_dag(5, 0.5, 8);
    Dataset ds = fixture::simulated(truth, fixture::mixed_families(5), 150, 9);
    auto cons = ConstraintSet::unconstrained(5, 3);
    std::ostringstream a, b;
    build_cache(ds, cons, Method::mle, {}, 1).write(a);
    build_cache(ds, cons, Method::mle, {}, 4).write(b);
    CHECK(a.str() == b.str());
}

TEST_CASE("lookup failures and fingerprints") {
    Dag truth = simulate_dag(4, 0.5, 10);
    Dataset ds = fixture::simulated(truth, fixture::mixed_families(4), 100, 11);
    auto cons = ConstraintSet::unconstrained(4, 3);
    cons.banned(0, 1) = 1;
    ScoreCache cache = build_cache(ds, cons, Method::mle);
    CHECK(cache.find(0, 0b10) == nullptr);
    CHECK(kind_of([&] { cache.lookup(0, 0b10); }) == "NotInCache");
    BinaryMatrix adj(4);
    adj(0, 1) = 1;
    CHECK(kind_of([&] { cache.total(Dag(ds.names(), adj), ScoreType::bic); }) == "NotInCache");
    CHECK_NOTHROW(check_fingerprint(cache, ds));
    Dataset other = fixture::simulated(truth, fixture::mixed_families(4), 100, 12);
    CHECK(kind_of([&] { check_fingerprint(cache, other); }) == "StaleCache");

    CHECK(score_matches_method(ScoreType::mlik, Method::bayes));
    CHECK_FALSE(score_matches_method(ScoreType::mlik, Method::mle));
    CHECK(score_matches_method(ScoreType::bic, Method::mle));
    CHECK(parse_score("aic") == ScoreType::aic);
    CHECK(kind_of([] { parse_score("nope"); }) != "");
}

TEST_CASE("failed fits are recorded, not thrown") {
    // a binomial child that is a copy of its candidate parent separates
    std::mt19937_64 rng(5);
    std::bernoulli_distribution b(0.5);
    Eigen::VectorXd x(60), y(60), z(60);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 60; ++i) {
        x[i] = b(rng);
        y[i] = x[i];
        z[i] = nd(rng);
    }
    Dataset ds({"x", "y", "z"}, {Distribution::binomial, Distribution::binomial, Distribution::gaussian}, {x, y, z});
    ds.set_fingerprint(ds.content_fingerprint());
    ScoreCache cache;
    CHECK_NOTHROW(cache = build_cache(ds, ConstraintSet::unconstrained(3, 2), Method::bayes));
    CHECK(cache.total_entries() == 12);
    for (std::size_t i = 0; i < 3; ++i)
        for (const auto& e : cache.entries(i)) CHECK((std::isfinite(e.mlik) || !e.diagnostic.empty()));
}

TEST_CASE("corrupt cache files are rejected") {
    std::istringstream bad("not a cache\n");
    CHECK(kind_of([&] { ScoreCache::read(bad); }) != "");
    std::istringstream empty("");
    CHECK(kind_of([&] { ScoreCache::read(empty); }) != "");
}
