#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the search or fitting code paths it is compared against.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Parent masks of every DAG on n labelled nodes (n <= 5), by brute force
// over all off-diagonal adjacency patterns.
inline std::vector<std::vector<std::uint64_t>> all_dags(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;  // (child, parent)
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t p = 0; p < n; ++p)
            if (p != c) slots.emplace_back(c, p);
    std::vector<std::vector<std::uint64_t>> out;
    for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << slots.size()); ++pattern) {
        std::vector<std::uint64_t> parents(n, 0);
        for (std::size_t s = 0; s < slots.size(); ++s)
            if (pattern >> s & 1U) parents[slots[s].first] |= std::uint64_t{1} << slots[s].second;
        // acyclic iff nodes can be peeled off one source at a time
        std::uint64_t placed = 0;
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < n; ++i)
                if (!(placed >> i & 1U) && (parents[i] & ~placed) == 0) {
                    placed |= std::uint64_t{1} << i;
                    progress = true;
                }
        }
        if (placed == (std::uint64_t{1} << n) - 1) out.push_back(parents);
    }
    return out;
}

// log N(y; 0, S) with S = I/tau + v X X^T: the exact evidence of a gaussian
// linear model with known precision tau and beta ~ N(0, v I).
inline double gaussian_evidence(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau, double v) {
    const auto n = y.size();
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n) / tau + v * x * x.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    Eigen::MatrixXd l = llt.matrixL();
    double logdet = 2.0 * l.diagonal().array().log().sum();
    double quad = y.dot(llt.solve(y));
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

// log of the trapezoid integral of exp(f) over [lo, hi] with m intervals.
inline double log_trapezoid(const std::function<double(double)>& f, double lo, double hi, int m) {
    std::vector<double> v(static_cast<std::size_t>(m) + 1);
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= m; ++i) {
        v[static_cast<std::size_t>(i)] = f(lo + (hi - lo) * i / m);
        peak = std::max(peak, v[static_cast<std::size_t>(i)]);
    }
    double sum = 0.0;
    for (int i = 0; i <= m; ++i) {
        double w = (i == 0 || i == m) ? 0.5 : 1.0;
        sum += w * std::exp(v[static_cast<std::size_t>(i)] - peak);
    }
    return peak + std::log(sum * (hi - lo) / m);
}

// Central differences of f at x.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x, b = x;
        double step = h * std::max(1.0, std::abs(x[i]));
        a[i] += step;
        b[i] -= step;
        g[i] = (f(a) - f(b)) / (2 * step);
    }
    return g;
}

// Direct log-likelihoods, written out per family.
inline double bernoulli_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
    double s = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double eta = x.row(i).dot(b);
        double p = 1.0 / (1.0 + std::exp(-eta));
        s += y[i] > 0.5 ? std::log(p) : std::log1p(-p);
    }
    return s;
}

inline double poisson_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
    double s = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double eta = x.row(i).dot(b);
        s += y[i] * eta - std::exp(eta) - std::lgamma(y[i] + 1);
    }
    return s;
}

}  // namespace oracle
