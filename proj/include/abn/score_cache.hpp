#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "abn/dag.hpp"
#include "abn/data.hpp"
#include "abn/glm.hpp"

namespace abn {

enum class ScoreType { mlik, loglik, aic, bic, mdl };

std::string_view to_string(ScoreType s);
ScoreType parse_score(std::string_view s);
/// mlik pairs with bayes; loglik/aic/bic/mdl pair with mle.
bool score_matches_method(ScoreType s, Method m);

/// All P subset of V\{node} with retained(node) in P, P disjoint from
/// banned(node) and |P| <= max_parents(node), ascending bitmask order.
/// Throws Error("RetainedExceedsLimit").
std::vector<std::uint64_t> enumerate_parent_sets(std::size_t node, const ConstraintSet& constraints);

struct CacheEntry {
    std::uint64_t parents = 0;
    double mlik = 0, loglik = 0, aic = 0, bic = 0, mdl = 0;
    std::string diagnostic;  // set when the fit failed (scores are -inf)

    double score(ScoreType s) const;
};

class ScoreCache {
public:
    ScoreCache() = default;

    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    Method method() const noexcept { return method_; }
    const std::string& fingerprint() const noexcept { return fingerprint_; }
    const ConstraintSet& constraints() const noexcept { return constraints_; }
    const std::vector<CacheEntry>& entries(std::size_t node) const { return entries_.at(node); }
    std::size_t total_entries() const;

    /// Throws Error("NotInCache") when the parent set was not enumerated.
    const CacheEntry& lookup(std::size_t node, std::uint64_t parents) const;
    const CacheEntry* find(std::size_t node, std::uint64_t parents) const;

    /// Sum of per-node scores of `dag`. Throws Error("NotInCache").
    double total(const Dag& dag, ScoreType score) const;

    /// Versioned text; full 17-digit precision; byte-stable.
    void write(std::ostream& out) const;
    static ScoreCache read(std::istream& in);

    /// Builds a cache directly from per-node entries (tests, synthetic scores).
    static ScoreCache from_entries(std::vector<std::string> nodes, ConstraintSet constraints,
                                   Method method, std::vector<std::vector<CacheEntry>> entries,
                                   std::string fingerprint = "synthetic");

private:
    friend ScoreCache build_cache(const Dataset&, const ConstraintSet&, Method, const PriorSpec&, unsigned);
    std::vector<std::string> nodes_;
    ConstraintSet constraints_;
    Method method_ = Method::bayes;
    std::string fingerprint_;
    std::vector<std::vector<CacheEntry>> entries_;
};

/// Fits and scores every enumerated (node, parent set). Individual fit
/// failures are recorded with -inf scores and a diagnostic. Output order is
/// independent of `jobs`.
ScoreCache build_cache(const Dataset& ds, const ConstraintSet& constraints, Method method,
                       const PriorSpec& priors = {}, unsigned jobs = 1);

/// Throws Error("StaleCache") if the cache was built from another dataset.
void check_fingerprint(const ScoreCache& cache, const Dataset& ds);

}  // namespace abn
