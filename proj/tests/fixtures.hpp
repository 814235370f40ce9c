#pragma once

#include <random>
#include <vector>

#include "abn/data.hpp"
#include "abn/score_cache.hpp"
#include "abn/simulate.hpp"

namespace fixture {

inline std::vector<abn::Distribution> mixed_families(std::size_t n) {
    static const abn::Distribution cycle[] = {abn::Distribution::gaussian, abn::Distribution::binomial,
                                              abn::Distribution::poisson};
    std::vector<abn::Distribution> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(cycle[i % 3]);
    return out;
}

/// Standardized data simulated from a random model on `dag`.
inline abn::Dataset simulated(const abn::Dag& dag, const std::vector<abn::Distribution>& families,
                              std::size_t n_obs, std::uint64_t seed) {
    return abn::standardize(abn::simulate_data(abn::random_model(dag, families, n_obs, seed)));
}

/// Synthetic cache with random scores for every parent set of every node.
inline abn::ScoreCache random_cache(std::size_t n, std::mt19937_64& rng, std::size_t max_parents = 64,
                                    bool integer_scores = false) {
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back("v" + std::to_string(i));
    auto cons = abn::ConstraintSet::unconstrained(n, std::min(max_parents, n - 1));
    std::normal_distribution<double> nd(0, 3);
    std::uniform_int_distribution<int> ud(-4, 0);
    std::vector<std::vector<abn::CacheEntry>> entries(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto mask : abn::enumerate_parent_sets(i, cons)) {
            abn::CacheEntry e;
            e.parents = mask;
            double s = integer_scores ? ud(rng) : nd(rng);
            e.mlik = e.loglik = e.aic = e.bic = e.mdl = s;
            entries[i].push_back(e);
        }
    }
    return abn::ScoreCache::from_entries(nodes, cons, abn::Method::bayes, std::move(entries));
}

}  // namespace fixture
