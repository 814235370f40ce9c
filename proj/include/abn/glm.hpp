#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abn/data.hpp"

namespace abn {

// Per-node generalized linear models with canonical links:
//   binomial -> logit, gaussian -> identity, poisson -> log.
//
// Two estimation routes are provided. `mle` runs IRLS; binomial fits that
// diverge or separate are refitted with Firth's bias-reduced likelihood, and
// fits that still fail drop predictors one at a time. `bayes` finds the
// posterior mode under independent N(mean, variance) coefficient priors and
// a Gamma(shape, rate) prior on the gaussian precision, optimized on the
// log-precision scale. The Laplace approximation at that mode gives the
// node's log marginal likelihood.

enum class Method { bayes, mle };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct PriorSpec {
    double coef_mean = 0.0;
    double coef_variance = 1000.0;
    double precision_shape = 0.001;
    double precision_rate = 0.001;
    /// When set, the gaussian precision is known and not estimated.
    std::optional<double> fixed_precision;

    void validate() const;
};

struct FitOptions {
    int max_iterations = 100;
    double deviance_tolerance = 1e-8;  // relative deviance change (IRLS)
    double unbounded_limit = 500.0;    // |theta| beyond this counts as divergent
};

struct FitResult {
    Distribution family = Distribution::gaussian;
    Method method = Method::bayes;

    /// Labels of retained design columns, "(Intercept)" first.
    std::vector<std::string> labels;
    /// Design column index of each retained coefficient.
    std::vector<Eigen::Index> kept_columns;
    Eigen::VectorXd coefficients;
    /// Gaussian family only: log precision (mode for bayes, log(1/sigma^2) for mle).
    std::optional<double> log_precision;
    /// True when log_precision is a free parameter included in neg_hessian.
    bool precision_estimated = false;

    /// Negative Hessian of the log posterior (bayes) or the Fisher
    /// information (mle) at the optimum, over coefficients then log precision.
    Eigen::MatrixXd neg_hessian;

    double log_likelihood = 0.0;
    double log_prior = 0.0;      // bayes only
    double mlik = 0.0;           // Laplace log marginal likelihood (bayes)
    double aic = 0.0, bic = 0.0, mdl = 0.0;  // mle, larger is better

    std::vector<std::string> dropped_predictors;
    bool all_predictors_dropped = false;
    bool used_firth = false;
    bool converged = false;
    int iterations = 0;
    std::string diagnostic;

    /// Coefficients plus the precision for gaussian nodes.
    std::size_t parameter_count() const;
    /// Parameter names in neg_hessian order, e.g. "LungCancer|Smoking".
    std::vector<std::string> parameter_names(const std::string& child) const;
    bool ok() const;
};

/// Throws Error("NoObservations"), Error("NonFiniteData").
FitResult fit_node(const DesignMatrix& design, Distribution family, Method method,
                   const PriorSpec& priors = {}, const FitOptions& options = {},
                   std::size_t n_candidate_parents = 0);

/// log m = l + log prior + d/2 log 2pi - 1/2 log det(neg_hessian).
/// Throws Error("NotBayesFit"), Error("NonPositiveDefiniteHessian").
double laplace_marginal_likelihood(const FitResult& fit, const DesignMatrix& design,
                                   Distribution family, const PriorSpec& priors);

struct FrequentistScores {
    double mlik_unpenalized = 0, aic = 0, bic = 0, mdl = 0;
};

/// Larger is better. k = parameter_count();
///   aic = l - k, bic = l - k/2 log n, mdl = bic - log C(n_candidates, parents).
FrequentistScores frequentist_scores(const FitResult& fit, std::size_t n_obs,
                                     std::size_t n_candidate_parents);

struct RangePolicy {
    double sd_multiplier = 6.0;
    /// Explicit [lo, hi] by parameter name, overriding the multiplier.
    std::map<std::string, std::pair<double, double>> explicit_ranges;
};

struct MarginalDensity {
    std::string name;
    double mode = 0, sd = 0;
    Eigen::VectorXd grid;
    Eigen::VectorXd density;        // gaussian Laplace marginal on the grid
    Eigen::VectorXd probabilities;  // density renormalized to sum 1 on the grid
    double area = 0;                // trapezoidal area of `density`
};

/// One density per parameter (coefficients, then log precision when
/// estimated). Throws Error("NotBayesFit"), Error("RangeTooNarrow").
std::vector<MarginalDensity> marginal_densities(const FitResult& fit, const std::string& child,
                                                std::size_t n_grid = 1000,
                                                const RangePolicy& range = {});

struct ScoreContribution {
    Eigen::VectorXd loglik_terms;  // sums to fit.log_likelihood
    Eigen::VectorXd hat_diagonal;  // leverage under the fitted IRLS weights
};

ScoreContribution score_contribution(const FitResult& fit, const DesignMatrix& design);

/// Columns of `design` retained by `fit`.
Eigen::MatrixXd retained_predictors(const FitResult& fit, const DesignMatrix& design);

// ---- likelihood pieces (exposed for checking) ---------------------------

/// Per-observation log-likelihood. `log_precision` is ignored unless gaussian.
Eigen::VectorXd loglik_terms(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                             const Eigen::VectorXd& beta, double log_precision = 0.0);
double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                      const Eigen::VectorXd& beta, double log_precision = 0.0);
/// Gradient of log_likelihood with respect to beta, plus log_precision
/// when `with_precision` (gaussian only).
Eigen::VectorXd score_vector(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                             const Eigen::VectorXd& beta, double log_precision = 0.0,
                             bool with_precision = false);

/// Structured text with coefficient names "child|parent".
void write_fit(std::ostream& out, const std::string& child, const FitResult& fit);

}  // namespace abn
