#pragma once

#include <cstdint>
#include <vector>

#include "abn/dag.hpp"
#include "abn/score_cache.hpp"

namespace abn {

/// Structural prior over parent sets. `koivisto` adds -log C(n-1, |P|)
/// (every cardinality equally likely a priori); `uninformative` adds 0.
enum class StructuralPrior { koivisto, uninformative };

std::string_view to_string(StructuralPrior p);
StructuralPrior parse_prior(std::string_view s);
double structural_log_prior(StructuralPrior prior, std::size_t n_nodes, std::size_t n_parents);

/// bs(i, S) = best [score(i, P) + log prior(P)] over enumerated P subset of S.
/// Stored densely per node over all 2^n subsets (entries for S containing i
/// are unused). Ties go to the smaller cardinality, then the smaller mask.
class BestParentTable {
public:
    std::size_t size() const noexcept { return n_; }
    double best(std::size_t node, std::uint64_t subset) const { return score_[node][subset]; }
    std::uint64_t argbest(std::size_t node, std::uint64_t subset) const { return arg_[node][subset]; }
    const ScoreCache& cache() const noexcept { return *cache_; }
    ScoreType score_type() const noexcept { return score_type_; }
    StructuralPrior prior() const noexcept { return prior_; }

private:
    friend BestParentTable best_parents_table(const ScoreCache&, ScoreType, StructuralPrior,
                                              std::size_t, unsigned);
    std::size_t n_ = 0;
    const ScoreCache* cache_ = nullptr;
    ScoreType score_type_ = ScoreType::mlik;
    StructuralPrior prior_ = StructuralPrior::koivisto;
    std::vector<std::vector<double>> score_;
    std::vector<std::vector<std::uint32_t>> arg_;
};

/// Default budget for the dense tables: 4 GiB.
inline constexpr std::size_t kDefaultTableBudget = std::size_t{4} << 30;

/// Throws Error("MemoryLimit") when n 2^n entries exceed `memory_budget`
/// bytes. The table keeps a pointer to `cache`, which must outlive it.
BestParentTable best_parents_table(const ScoreCache& cache, ScoreType score,
                                   StructuralPrior prior = StructuralPrior::koivisto,
                                   std::size_t memory_budget = kDefaultTableBudget,
                                   unsigned jobs = 1);

struct ExactResult {
    Dag dag;
    double total = 0;      // sum of cache scores of the selected parent sets (node order)
    double objective = 0;  // total plus the structural log prior
};

/// Sink dynamic program F(S) = max_j F(S\{j}) + bs(j, S\{j}) with backtracking.
ExactResult most_probable_dag(const BestParentTable& table);

/// Sum-product variant: log of the order-marginalized evidence
/// sum over orders of prod_i sum_{P subset of pred(i)} exp(score + prior).
double log_order_evidence(const ScoreCache& cache, ScoreType score,
                          StructuralPrior prior = StructuralPrior::koivisto);

}  // namespace abn
