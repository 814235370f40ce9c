#include "abn/search_exact.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "abn/error.hpp"
#include "abn/parallel.hpp"

namespace abn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// true when (s1, a1) should replace (s0, a0)
bool better(double s1, std::uint64_t a1, double s0, std::uint64_t a0) {
    if (s1 != s0) return s1 > s0;
    int c1 = std::popcount(a1), c0 = std::popcount(a0);
    if (c1 != c0) return c1 < c0;
    return a1 < a0;
}
}  // namespace

std::string_view to_string(StructuralPrior p) {
    return p == StructuralPrior::koivisto ? "koivisto" : "uninformative";
}

StructuralPrior parse_prior(std::string_view s) {
    if (s == "koivisto") return StructuralPrior::koivisto;
    if (s == "uninformative") return StructuralPrior::uninformative;
    throw Error("UnknownPrior", "prior must be 'koivisto' or 'uninformative'");
}

double structural_log_prior(StructuralPrior prior, std::size_t n_nodes, std::size_t n_parents) {
    if (prior == StructuralPrior::uninformative) return 0.0;
    const double m = static_cast<double>(n_nodes - 1), k = static_cast<double>(n_parents);
    return -(std::lgamma(m + 1) - std::lgamma(k + 1) - std::lgamma(m - k + 1));
}

BestParentTable best_parents_table(const ScoreCache& cache, ScoreType score, StructuralPrior prior,
                                   std::size_t memory_budget, unsigned jobs) {
    const std::size_t n = cache.size();
    if (n == 0) throw Error("EmptyCache", "score cache has no nodes");
    if (n > 31) throw Error("MemoryLimit", "exact search supports at most 31 nodes");
    const std::size_t subsets = std::size_t{1} << n;
    const double bytes = static_cast<double>(n) * static_cast<double>(subsets) *
                         (sizeof(double) + sizeof(std::uint32_t));
    if (bytes > static_cast<double>(memory_budget))
        throw Error("MemoryLimit", "best-parent tables need " + std::to_string(bytes / 1048576.0) +
                                       " MiB, over the configured budget");
    if (!score_matches_method(score, cache.method()))
        throw Error("ScoreMethodMismatch", "score '" + std::string(to_string(score)) +
                                               "' is not available in a " +
                                               std::string(to_string(cache.method())) + " cache");

    BestParentTable t;
    t.n_ = n;
    t.cache_ = &cache;
    t.score_type_ = score;
    t.prior_ = prior;
    t.score_.assign(n, {});
    t.arg_.assign(n, {});
    parallel_for(n, jobs, [&](std::size_t i) {
        std::vector<double> direct(subsets, kNegInf);
        for (const auto& e : cache.entries(i)) {
            double s = e.score(score);
            if (std::isfinite(s))
                direct[e.parents] = s + structural_log_prior(prior, n, static_cast<std::size_t>(std::popcount(e.parents)));
        }
        auto& bs = t.score_[i];
        auto& arg = t.arg_[i];
        bs.assign(subsets, kNegInf);
        arg.assign(subsets, 0);
        const std::uint64_t self = std::uint64_t{1} << i;
        for (std::uint64_t s = 0; s < subsets; ++s) {
            if (s & self) continue;
            double best = direct[s];
            std::uint64_t best_arg = s;
            for (std::uint64_t rest = s; rest; rest &= rest - 1) {
                std::uint64_t sub = s & ~(rest & (~rest + 1));
                if (better(bs[sub], arg[sub], best, best_arg)) {
                    best = bs[sub];
                    best_arg = arg[sub];
                }
            }
            bs[s] = best;
            arg[s] = static_cast<std::uint32_t>(best == kNegInf ? 0 : best_arg);
        }
    });
    return t;
}

ExactResult most_probable_dag(const BestParentTable& table) {
    const std::size_t n = table.size();
    const std::size_t subsets = std::size_t{1} << n;
    std::vector<double> f(subsets, kNegInf);
    std::vector<std::uint8_t> sink(subsets, 0);
    f[0] = 0.0;
    for (std::uint64_t s = 1; s < subsets; ++s) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(s >> j & 1U)) continue;
            std::uint64_t rest = s & ~(std::uint64_t{1} << j);
            double cand = f[rest] + table.best(j, rest);
            if (cand > f[s]) {
                f[s] = cand;
                sink[s] = static_cast<std::uint8_t>(j);
            }
        }
    }
    const std::uint64_t all = subsets - 1;
    if (!std::isfinite(f[all])) throw Error("NoFeasibleDag", "no DAG can be assembled from finite cache scores");

    BinaryMatrix adj(n);
    for (std::uint64_t s = all; s;) {
        std::size_t j = sink[s];
        s &= ~(std::uint64_t{1} << j);
        std::uint64_t parents = table.argbest(j, s);
        for (std::size_t p = 0; p < n; ++p)
            if (parents >> p & 1U) adj(j, p) = 1;
    }
    ExactResult r{Dag(table.cache().nodes(), adj), 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t mask = adj.row_mask(i);
        double s = table.cache().lookup(i, mask).score(table.score_type());
        r.total += s;
        r.objective += s + structural_log_prior(table.prior(), n, static_cast<std::size_t>(std::popcount(mask)));
    }
    return r;
}

double log_order_evidence(const ScoreCache& cache, ScoreType score, StructuralPrior prior) {
    const std::size_t n = cache.size();
    if (n > 25) throw Error("MemoryLimit", "order evidence supports at most 25 nodes");
    const std::size_t subsets = std::size_t{1} << n;
    std::vector<std::vector<double>> alpha(n, std::vector<double>(subsets, kNegInf));
    for (std::size_t i = 0; i < n; ++i) {
        auto& a = alpha[i];
        for (const auto& e : cache.entries(i)) {
            double s = e.score(score);
            if (std::isfinite(s))
                a[e.parents] = s + structural_log_prior(prior, n, static_cast<std::size_t>(std::popcount(e.parents)));
        }
        // subset-sum (zeta) transform in log space
        for (std::size_t b = 0; b < n; ++b)
            for (std::uint64_t s = 0; s < subsets; ++s)
                if (s >> b & 1U) a[s] = log_add(a[s], a[s & ~(std::uint64_t{1} << b)]);
    }
    std::vector<double> g(subsets, kNegInf);
    g[0] = 0.0;
    for (std::uint64_t s = 1; s < subsets; ++s)
        for (std::size_t j = 0; j < n; ++j)
            if (s >> j & 1U) {
                std::uint64_t rest = s & ~(std::uint64_t{1} << j);
                g[s] = log_add(g[s], g[rest] + alpha[j][rest]);
            }
    return g[subsets - 1];
}

}  // namespace abn
