#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "abn/dag.hpp"
#include "abn/data.hpp"

namespace abn {

/// fixed_k: rank-quantile bins, bin = floor(k * #{values < x} / n), so tied
/// values share a bin. The others are equal-width over the observed range.
enum class BinRule { fixed_k, sturges, scott, freedman_diaconis };

std::string_view to_string(BinRule r);
BinRule parse_bin_rule(std::string_view s);

struct DiscretizedData {
    BinRule rule = BinRule::fixed_k;
    std::vector<std::string> names;
    std::vector<std::vector<int>> indices;    // per column, per row
    std::vector<std::vector<double>> edges;   // per column: lower edge of each bin
    std::vector<int> bin_counts;
    std::vector<std::string> warnings;        // e.g. constant columns

    std::size_t index_of(std::string_view name) const;
};

/// Binomial columns pass through unchanged. A constant column gets one bin
/// and a ZeroRange warning.
DiscretizedData discretize(const Dataset& ds, BinRule rule = BinRule::fixed_k, int k = 8);

/// Number of equal-width bins the rule gives for `values` (not fixed_k).
int rule_bin_count(const Eigen::VectorXd& values, BinRule rule);

/// Plug-in joint entropy in bits of one or more equal-length columns.
double empirical_entropy(const std::vector<const std::vector<int>*>& columns);
double empirical_entropy(const std::vector<int>& column);

/// H(x) + H(y) - H(x,y), clamped at 0.
double mutual_information(const std::vector<int>& x, const std::vector<int>& y);

/// Entry (child, parent) = (H(Y|Z) - H(Y|X,Z)) / H(Y|Z) for each arc X -> Y
/// with Z the other parents of Y; 0 when H(Y|Z) = 0 or there is no arc.
Eigen::MatrixXd pls_matrix(const Dag& dag, const DiscretizedData& disc);

}  // namespace abn
