#include "abn/strength.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "abn/error.hpp"

namespace abn {

std::string_view to_string(BinRule r) {
    switch (r) {
    case BinRule::fixed_k: return "fixed_k";
    case BinRule::sturges: return "sturges";
    case BinRule::scott: return "scott";
    case BinRule::freedman_diaconis: return "freedman_diaconis";
    }
    return "?";
}

BinRule parse_bin_rule(std::string_view s) {
    if (s == "fixed_k") return BinRule::fixed_k;
    if (s == "sturges") return BinRule::sturges;
    if (s == "scott") return BinRule::scott;
    if (s == "freedman_diaconis" || s == "fd") return BinRule::freedman_diaconis;
    throw Error("UnknownRule", "unknown discretization rule '" + std::string(s) + "'");
}

std::size_t DiscretizedData::index_of(std::string_view name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error("UnknownName", "no discretized column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - names.begin());
}

namespace {

double quantile(std::vector<double> sorted, double q) {
    // linear interpolation between order statistics
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Dense relabelling of the joint cells of several columns.
std::vector<int> joint_codes(const std::vector<const std::vector<int>*>& columns) {
    std::vector<int> codes(columns.front()->size(), 0);
    for (const auto* col : columns) {
        if (col->size() != codes.size()) throw Error("LengthMismatch", "columns differ in length");
        std::unordered_map<std::uint64_t, int> relabel;
        for (std::size_t r = 0; r < codes.size(); ++r) {
            std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(codes[r])) << 32) |
                                static_cast<std::uint32_t>((*col)[r]);
            auto [it, inserted] = relabel.emplace(key, static_cast<int>(relabel.size()));
            codes[r] = it->second;
        }
    }
    return codes;
}

}  // namespace

int rule_bin_count(const Eigen::VectorXd& values, BinRule rule) {
    const auto n = static_cast<double>(values.size());
    if (values.size() == 0) return 1;
    const double range = values.maxCoeff() - values.minCoeff();
    if (!(range > 0)) return 1;
    switch (rule) {
    case BinRule::sturges: return static_cast<int>(std::ceil(std::log2(n))) + 1;
    case BinRule::scott: {
        double mean = values.mean();
        double sd = std::sqrt((values.array() - mean).square().sum() / std::max(1.0, n - 1));
        double h = 3.49 * sd * std::cbrt(1.0 / n);
        return std::max(1, static_cast<int>(std::ceil(range / h)));
    }
    case BinRule::freedman_diaconis: {
        std::vector<double> v(values.data(), values.data() + values.size());
        std::sort(v.begin(), v.end());
        double iqr = quantile(v, 0.75) - quantile(v, 0.25);
        if (!(iqr > 0)) return rule_bin_count(values, BinRule::sturges);
        double h = 2.0 * iqr * std::cbrt(1.0 / n);
        return std::max(1, static_cast<int>(std::ceil(range / h)));
    }
    case BinRule::fixed_k: break;
    }
    throw Error("InvalidArgument", "fixed_k has no data-driven bin count");
}

DiscretizedData discretize(const Dataset& ds, BinRule rule, int k) {
    if (k < 1) throw Error("InvalidArgument", "bin count must be positive");
    DiscretizedData out;
    out.rule = rule;
    out.names = ds.names();
    const std::size_t n = ds.n_obs();
    for (std::size_t j = 0; j < ds.n_vars(); ++j) {
        const Eigen::VectorXd& x = ds.column(j);
        std::vector<int> idx(n, 0);
        std::vector<double> edges;
        int bins = 1;
        if (ds.dists()[j] == Distribution::binomial) {
            for (std::size_t r = 0; r < n; ++r) idx[r] = static_cast<int>(x[static_cast<Eigen::Index>(r)]);
            edges = {0.0, 1.0};
            bins = 2;
        } else if (n == 0 || !(x.maxCoeff() > x.minCoeff())) {
            out.warnings.push_back("ZeroRange: column " + ds.names()[j] + " is constant");
            edges = {n == 0 ? 0.0 : x.minCoeff()};
        } else if (rule == BinRule::fixed_k) {
            std::vector<double> sorted(x.data(), x.data() + x.size());
            std::sort(sorted.begin(), sorted.end());
            bins = k;
            edges.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());
            for (std::size_t r = 0; r < n; ++r) {
                double v = x[static_cast<Eigen::Index>(r)];
                auto below = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
                idx[r] = static_cast<int>(static_cast<std::size_t>(k) * below / n);
                auto& e = edges[static_cast<std::size_t>(idx[r])];
                if (std::isnan(e) || v < e) e = v;
            }
        } else {
            bins = rule_bin_count(x, rule);
            const double lo = x.minCoeff(), hi = x.maxCoeff();
            const double width = (hi - lo) / bins;
            for (int b = 0; b < bins; ++b) edges.push_back(lo + b * width);
            for (std::size_t r = 0; r < n; ++r) {
                int b = static_cast<int>(std::floor((x[static_cast<Eigen::Index>(r)] - lo) / width));
                idx[r] = std::clamp(b, 0, bins - 1);
            }
        }
        out.indices.push_back(std::move(idx));
        out.edges.push_back(std::move(edges));
        out.bin_counts.push_back(bins);
    }
    return out;
}

double empirical_entropy(const std::vector<const std::vector<int>*>& columns) {
    if (columns.empty()) throw Error("InvalidArgument", "entropy needs at least one column");
    const std::size_t n = columns.front()->size();
    if (n == 0) return 0.0;
    std::vector<int> codes = joint_codes(columns);
    std::vector<std::size_t> counts(static_cast<std::size_t>(*std::max_element(codes.begin(), codes.end())) + 1, 0);
    for (int c : codes) ++counts[static_cast<std::size_t>(c)];
    double h = 0.0;
    const double dn = static_cast<double>(n);
    for (std::size_t c : counts)
        if (c > 0) {
            double p = static_cast<double>(c) / dn;
            h -= p * std::log2(p);
        }
    return std::max(0.0, h);
}

double empirical_entropy(const std::vector<int>& column) { return empirical_entropy(std::vector<const std::vector<int>*>{&column}); }

double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size()) throw Error("LengthMismatch", "columns differ in length");
    double hx = empirical_entropy(x), hy = empirical_entropy(y);
    // joint cells are numbered by first appearance, so H(x,y) and H(y,x)
    // see the same counts in the same order
    double hxy = empirical_entropy(std::vector<const std::vector<int>*>{&x, &y});
    return std::max(0.0, (hx + hy) - hxy);
}

Eigen::MatrixXd pls_matrix(const Dag& dag, const DiscretizedData& disc) {
    const std::size_t n = dag.size();
    std::vector<std::size_t> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = disc.index_of(dag.nodes()[i]);
    Eigen::MatrixXd pls = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t y = 0; y < n; ++y) {
        auto parents = dag.parents(y);
        for (std::size_t x : parents) {
            std::vector<const std::vector<int>*> z;
            for (std::size_t p : parents)
                if (p != x) z.push_back(&disc.indices[col[p]]);
            const auto* ycol = &disc.indices[col[y]];
            const auto* xcol = &disc.indices[col[x]];
            auto with = [&](std::vector<const std::vector<int>*> extra) {
                auto all = z;
                all.insert(all.end(), extra.begin(), extra.end());
                return all.empty() ? 0.0 : empirical_entropy(all);
            };
            double h_y_given_z = with({ycol}) - with({});
            double h_y_given_xz = with({ycol, xcol}) - with({xcol});
            double v = h_y_given_z > 1e-12 ? (h_y_given_z - h_y_given_xz) / h_y_given_z : 0.0;
            pls(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = std::clamp(v, 0.0, 1.0);
        }
    }
    return pls;
}

}  // namespace abn
