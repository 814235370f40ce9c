#include "abn/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "abn/error.hpp"

namespace abn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr double kInf = std::numeric_limits<double>::infinity();

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double expit(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::VectorXd mean_of(Distribution family, const Eigen::VectorXd& eta) {
    switch (family) {
    case Distribution::binomial: return eta.unaryExpr([](double e) { return expit(e); });
    case Distribution::poisson: return eta.array().exp().matrix();
    case Distribution::gaussian: return eta;
    }
    return eta;
}

// IRLS working weights (variance function at the mean, canonical links).
Eigen::VectorXd weights_of(Distribution family, const Eigen::VectorXd& mu) {
    switch (family) {
    case Distribution::binomial: return (mu.array() * (1.0 - mu.array())).matrix();
    case Distribution::poisson: return mu;
    case Distribution::gaussian: return Eigen::VectorXd::Ones(mu.size());
    }
    return mu;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double log_coef_prior(const Eigen::VectorXd& beta, const PriorSpec& pr) {
    const double v = pr.coef_variance;
    double lp = 0;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        double d = beta[i] - pr.coef_mean;
        lp += -0.5 * (kLog2Pi + std::log(v)) - d * d / (2 * v);
    }
    return lp;
}

// Gamma(shape a, rate b) prior on tau, expressed as a density on psi = log tau.
double log_precision_prior(double psi, const PriorSpec& pr) {
    const double a = pr.precision_shape, b = pr.precision_rate;
    return a * std::log(b) - std::lgamma(a) + a * psi - b * std::exp(psi);
}

struct Attempt {
    bool ok = false;
    Eigen::VectorXd beta;
    double loglik = -kInf;
    int iterations = 0;
    bool firth = false;
    std::string why;
};

double deviance(Distribution family, const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    double dev = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (family == Distribution::binomial) {
            dev += -2.0 * (y[i] * eta[i] - log1pexp(eta[i]));
        } else {
            double mu = std::exp(eta[i]);
            double t = y[i] > 0 ? y[i] * std::log(y[i] / mu) : 0.0;
            dev += 2.0 * (t - (y[i] - mu));
        }
    }
    return dev;
}

bool full_rank(const Eigen::MatrixXd& x) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    return qr.rank() == x.cols();
}

Attempt irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
             const FitOptions& opt) {
    Attempt a;
    const Eigen::Index n = x.rows(), p = x.cols();
    if (!full_rank(x)) {
        a.why = "design matrix is rank deficient";
        return a;
    }
    if (family == Distribution::gaussian) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        a.beta = qr.solve(y);
        a.iterations = 1;
        Eigen::VectorXd r = y - x * a.beta;
        double sigma2 = r.squaredNorm() / static_cast<double>(n);
        if (!(sigma2 > 0) || !std::isfinite(sigma2)) {
            a.why = "residual variance is zero";
            return a;
        }
        a.loglik = -0.5 * static_cast<double>(n) * (kLog2Pi + std::log(sigma2) + 1.0);
        a.ok = true;
        return a;
    }

    // Starting values as in the usual glm initialization.
    Eigen::VectorXd eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mu0 = family == Distribution::binomial ? (y[i] + 0.5) / 2.0 : y[i] + 0.1;
        eta[i] = family == Distribution::binomial ? std::log(mu0 / (1 - mu0)) : std::log(mu0);
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double dev_old = kInf;
    bool converged = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        a.iterations = it;
        Eigen::VectorXd mu = mean_of(family, eta);
        Eigen::VectorXd w = weights_of(family, mu);
        Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
        Eigen::VectorXd rhs = x.transpose() * (w.cwiseProduct(eta) + (y - mu));
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            a.why = "information matrix is singular";
            return a;
        }
        Eigen::VectorXd beta_new = ldlt.solve(rhs);
        Eigen::VectorXd eta_new = x * beta_new;
        double dev = deviance(family, y, eta_new);
        for (int half = 0; !std::isfinite(dev) && half < 30; ++half) {
            beta_new = 0.5 * (beta_new + beta);
            eta_new = x * beta_new;
            dev = deviance(family, y, eta_new);
        }
        if (!std::isfinite(dev) || !all_finite(beta_new)) {
            a.why = "non-finite deviance";
            return a;
        }
        beta = beta_new;
        eta = eta_new;
        if (std::abs(dev - dev_old) / (std::abs(dev) + 0.1) < opt.deviance_tolerance) {
            converged = true;
            break;
        }
        dev_old = dev;
    }
    a.beta = beta;
    if (!converged) {
        a.why = "IRLS did not converge";
        return a;
    }
    if (beta.cwiseAbs().maxCoeff() > opt.unbounded_limit) {
        a.why = "unbounded estimates";
        return a;
    }
    if (family == Distribution::binomial) {
        Eigen::VectorXd mu = mean_of(family, eta);
        // a perfect fit means complete separation, whatever the tail probabilities
        if ((y - mu).cwiseAbs().maxCoeff() < 1e-6) {
            a.why = "perfect fit (complete separation)";
            return a;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (mu[i] < 1e-10 || mu[i] > 1 - 1e-10) {
                a.why = "fitted probabilities numerically 0 or 1 (separation)";
                return a;
            }
        }
    }
    a.loglik = log_likelihood(x, y, family, beta);
    a.ok = std::isfinite(a.loglik);
    if (!a.ok) a.why = "non-finite log-likelihood";
    return a;
}

// Firth-penalized logistic regression: maximizes l(beta) + 1/2 log det I(beta).
Attempt firth_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Attempt a;
    a.firth = true;
    const Eigen::Index p = x.cols();
    if (!full_rank(x)) {
        a.why = "design matrix is rank deficient";
        return a;
    }
    auto penalized = [&](const Eigen::VectorXd& beta, double& out) {
        Eigen::VectorXd eta = x * beta;
        Eigen::VectorXd mu = mean_of(Distribution::binomial, eta);
        Eigen::VectorXd w = weights_of(Distribution::binomial, mu);
        Eigen::LLT<Eigen::MatrixXd> llt(x.transpose() * w.asDiagonal() * x);
        if (llt.info() != Eigen::Success) return false;
        double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        out = log_likelihood(x, y, Distribution::binomial, beta) + 0.5 * logdet;
        return std::isfinite(out);
    };

    // modified score U*(beta) = X^T (y - mu + h (1/2 - mu)), the gradient of the penalized likelihood
    auto modified_score = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& u, Eigen::MatrixXd* info) {
        Eigen::VectorXd mu = mean_of(Distribution::binomial, x * beta);
        Eigen::VectorXd w = weights_of(Distribution::binomial, mu);
        Eigen::MatrixXd i = x.transpose() * w.asDiagonal() * x;
        Eigen::LLT<Eigen::MatrixXd> llt(i);
        if (llt.info() != Eigen::Success) return false;
        // hat diagonals of W^1/2 X I^-1 X^T W^1/2
        Eigen::MatrixXd b = llt.matrixL().solve((w.array().sqrt().matrix().asDiagonal() * x).transpose());
        Eigen::VectorXd h = b.colwise().squaredNorm().transpose();
        u = x.transpose() * (y - mu + h.cwiseProduct((0.5 - mu.array()).matrix()));
        if (info) *info = i;
        return u.allFinite();
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double current = 0;
    if (!penalized(beta, current)) {
        a.why = "Firth: singular information at start";
        return a;
    }
    bool converged = false;
    for (int it = 1; it <= 200; ++it) {
        a.iterations = it;
        Eigen::VectorXd u;
        Eigen::MatrixXd info;
        if (!modified_score(beta, u, &info)) {
            a.why = "Firth: singular information";
            return a;
        }
        // Newton on the penalized likelihood with a differenced Jacobian of
        // U*; the Fisher step I^-1 U* when that is not negative definite.
        Eigen::MatrixXd jac(p, p);
        bool newton = true;
        for (Eigen::Index k = 0; k < p && newton; ++k) {
            double hk = 1e-6 * std::max(1.0, std::abs(beta[k]));
            Eigen::VectorXd up, um, bp = beta, bm = beta;
            bp[k] += hk;
            bm[k] -= hk;
            newton = modified_score(bp, up, nullptr) && modified_score(bm, um, nullptr);
            if (newton) jac.col(k) = (up - um) / (2 * hk);
        }
        Eigen::VectorXd delta;
        if (newton) {
            Eigen::MatrixXd neg = -0.5 * (jac + jac.transpose());
            Eigen::LLT<Eigen::MatrixXd> nl(neg);
            newton = nl.info() == Eigen::Success;
            if (newton) delta = nl.solve(u);
        }
        if (!newton) delta = info.llt().solve(u);
        double biggest = delta.cwiseAbs().maxCoeff();
        if (biggest > 5.0) delta *= 5.0 / biggest;
        double step = 1.0, trial = -kInf;
        for (int half = 0; half < 30; ++half, step *= 0.5) {
            if (penalized(beta + step * delta, trial) && trial >= current - 1e-12 * std::abs(current)) break;
        }
        beta += step * delta;
        current = trial;
        if ((step * delta).cwiseAbs().maxCoeff() < 1e-10 || u.cwiseAbs().maxCoeff() < 1e-9) {
            converged = u.cwiseAbs().maxCoeff() < 1e-6;
            break;
        }
    }
    a.beta = beta;
    if (!converged || !all_finite(beta) || beta.cwiseAbs().maxCoeff() > 500) {
        a.why = converged ? "Firth: unbounded estimates" : "Firth did not converge";
        return a;
    }
    a.loglik = log_likelihood(x, y, Distribution::binomial, beta);
    a.ok = std::isfinite(a.loglik);
    return a;
}

Attempt mle_attempt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                    const FitOptions& opt) {
    Attempt a = irls(x, y, family, opt);
    if (a.ok || family != Distribution::binomial) return a;
    Attempt f = firth_logistic(x, y);
    if (!f.ok) f.why = a.why + "; " + f.why;
    return f;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(cols[k]);
    return out;
}

FitResult fit_mle(const DesignMatrix& d, Distribution family, const FitOptions& opt,
                  std::size_t n_candidates) {
    FitResult r;
    r.family = family;
    r.method = Method::mle;
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(d.predictors.cols()));
    for (std::size_t k = 0; k < cols.size(); ++k) cols[k] = static_cast<Eigen::Index>(k);

    Attempt a = mle_attempt(d.predictors, d.response, family, opt);
    std::string first_failure = a.why;
    // Sequential predictor removal until the fit succeeds: drop the
    // predictor whose removal keeps the highest log-likelihood; name order
    // breaks ties.
    while (!a.ok && cols.size() > 1) {
        std::vector<std::size_t> order(cols.size() - 1);
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k + 1;
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return d.labels[static_cast<std::size_t>(cols[i])] < d.labels[static_cast<std::size_t>(cols[j])];
        });
        std::size_t best = order.front();
        Attempt best_attempt;
        for (std::size_t k : order) {
            auto trial_cols = cols;
            trial_cols.erase(trial_cols.begin() + static_cast<std::ptrdiff_t>(k));
            Attempt t = mle_attempt(select_columns(d.predictors, trial_cols), d.response, family, opt);
            if (t.ok && (!best_attempt.ok || t.loglik > best_attempt.loglik)) {
                best = k;
                best_attempt = t;
            }
        }
        r.dropped_predictors.push_back(d.labels[static_cast<std::size_t>(cols[best])]);
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(best));
        a = best_attempt.ok ? best_attempt
                            : mle_attempt(select_columns(d.predictors, cols), d.response, family, opt);
    }
    r.all_predictors_dropped = cols.size() == 1 && d.predictors.cols() > 1;
    r.kept_columns = cols;
    for (auto c : cols) r.labels.push_back(d.labels[static_cast<std::size_t>(c)]);
    r.used_firth = a.firth;
    r.iterations = a.iterations;
    r.converged = a.ok;
    if (!a.ok) {
        r.coefficients = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cols.size()),
                                                   std::numeric_limits<double>::quiet_NaN());
        r.log_likelihood = -kInf;
        r.aic = r.bic = r.mdl = -kInf;
        r.diagnostic = a.why;
        return r;
    }
    if (!first_failure.empty()) r.diagnostic = first_failure;
    r.coefficients = a.beta;
    r.log_likelihood = a.loglik;

    Eigen::MatrixXd x = select_columns(d.predictors, cols);
    Eigen::VectorXd eta = x * a.beta;
    const Eigen::Index p = x.cols();
    if (family == Distribution::gaussian) {
        double sigma2 = (d.response - eta).squaredNorm() / static_cast<double>(x.rows());
        r.log_precision = -std::log(sigma2);
        r.precision_estimated = true;
        r.neg_hessian = Eigen::MatrixXd::Zero(p + 1, p + 1);
        r.neg_hessian.topLeftCorner(p, p) = x.transpose() * x / sigma2;
        r.neg_hessian(p, p) = 0.5 * static_cast<double>(x.rows());
    } else {
        Eigen::VectorXd w = weights_of(family, mean_of(family, eta));
        r.neg_hessian = x.transpose() * w.asDiagonal() * x;
    }
    auto s = frequentist_scores(r, static_cast<std::size_t>(x.rows()), n_candidates);
    r.aic = s.aic;
    r.bic = s.bic;
    r.mdl = s.mdl;
    return r;
}

// Posterior mode for binomial / poisson nodes: damped Newton on the
// (strictly concave) log posterior.
FitResult fit_bayes_glm(const DesignMatrix& d, Distribution family, const PriorSpec& pr) {
    const auto& x = d.predictors;
    const auto& y = d.response;
    const Eigen::Index p = x.cols();
    const double v = pr.coef_variance;
    auto log_post = [&](const Eigen::VectorXd& beta) {
        double lp = log_likelihood(x, y, family, beta) + log_coef_prior(beta, pr);
        return std::isfinite(lp) ? lp : -kInf;
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Constant(p, pr.coef_mean);
    double ybar = y.mean();
    beta[0] = family == Distribution::binomial
                  ? std::log((ybar * y.size() + 0.5) / ((1 - ybar) * y.size() + 0.5))
                  : std::log(ybar + 0.1);
    double current = log_post(beta);
    FitResult r;
    r.family = family;
    r.method = Method::bayes;
    bool converged = false;
    Eigen::MatrixXd h;
    for (int it = 1; it <= 500; ++it) {
        r.iterations = it;
        Eigen::VectorXd eta = x * beta;
        Eigen::VectorXd mu = mean_of(family, eta);
        Eigen::VectorXd w = weights_of(family, mu);
        Eigen::VectorXd g = x.transpose() * (y - mu) - (beta.array() - pr.coef_mean).matrix() / v;
        h = x.transpose() * w.asDiagonal() * x;
        h.diagonal().array() += 1.0 / v;
        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() != Eigen::Success) break;
        Eigen::VectorXd delta = llt.solve(g);
        // decrement / 2 is the predicted gain of the full Newton step
        double decrement = g.dot(delta);
        if (decrement < 1e-12 * std::max(1.0, std::abs(current))) {
            converged = true;
            break;
        }
        double step = 1.0, trial = -kInf;
        for (int half = 0; half < 60; ++half, step *= 0.5) {
            trial = log_post(beta + step * delta);
            if (trial >= current) break;
        }
        if (!(trial > current)) {
            // no representable improvement left
            converged = decrement < 1e-6 * std::max(1.0, std::abs(current));
            if (trial == current) beta += step * delta;
            break;
        }
        beta += step * delta;
        current = trial;
    }
    Eigen::VectorXd w = weights_of(family, mean_of(family, x * beta));
    h = x.transpose() * w.asDiagonal() * x;
    h.diagonal().array() += 1.0 / v;
    r.coefficients = beta;
    r.neg_hessian = h;
    r.converged = converged;
    if (!converged) r.diagnostic = "posterior mode search did not converge";
    r.log_likelihood = log_likelihood(x, y, family, beta);
    r.log_prior = log_coef_prior(beta, pr);
    return r;
}

// Gaussian node: for fixed psi = log tau the mode in beta is a ridge
// solution; psi solves the one-dimensional stationarity condition
// n/2 + a = tau (RSS(beta(psi))/2 + b), found by bisection.
FitResult fit_bayes_gaussian(const DesignMatrix& d, const PriorSpec& pr) {
    const auto& x = d.predictors;
    const auto& y = d.response;
    const Eigen::Index n = x.rows(), p = x.cols();
    const double v = pr.coef_variance;
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;

    auto beta_at = [&](double tau) {
        Eigen::MatrixXd a = tau * xtx;
        a.diagonal().array() += 1.0 / v;
        Eigen::VectorXd b = tau * xty;
        b.array() += pr.coef_mean / v;
        return Eigen::VectorXd(a.llt().solve(b));
    };

    FitResult r;
    r.family = Distribution::gaussian;
    r.method = Method::bayes;
    r.converged = true;

    if (pr.fixed_precision) {
        const double tau = *pr.fixed_precision;
        r.coefficients = beta_at(tau);
        r.log_precision = std::log(tau);
        r.precision_estimated = false;
        r.neg_hessian = tau * xtx;
        r.neg_hessian.diagonal().array() += 1.0 / v;
        r.log_likelihood = log_likelihood(x, y, Distribution::gaussian, r.coefficients, std::log(tau));
        r.log_prior = log_coef_prior(r.coefficients, pr);
        r.iterations = 1;
        return r;
    }

    const double a = pr.precision_shape, b = pr.precision_rate;
    const double half_n = 0.5 * static_cast<double>(n);
    auto slope = [&](double psi) {
        Eigen::VectorXd beta = beta_at(std::exp(psi));
        double rss = (y - x * beta).squaredNorm();
        return half_n + a - std::exp(psi) * (0.5 * rss + b);
    };
    double rss_prior = (y - x * Eigen::VectorXd::Constant(p, pr.coef_mean)).squaredNorm();
    double lo = std::log((half_n + a) / (0.5 * rss_prior + b)) - 1.0;
    double hi = std::log((half_n + a) / b) + 1.0;
    int it = 0;
    for (; it < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (slope(mid) > 0 ? lo : hi) = mid;
    }
    const double psi = 0.5 * (lo + hi);
    const double tau = std::exp(psi);
    Eigen::VectorXd beta = beta_at(tau);
    Eigen::VectorXd resid = y - x * beta;

    r.iterations = it;
    r.coefficients = beta;
    r.log_precision = psi;
    r.precision_estimated = true;
    r.neg_hessian.resize(p + 1, p + 1);
    r.neg_hessian.topLeftCorner(p, p) = tau * xtx;
    r.neg_hessian.topLeftCorner(p, p).diagonal().array() += 1.0 / v;
    Eigen::VectorXd cross = -tau * (x.transpose() * resid);
    r.neg_hessian.topRightCorner(p, 1) = cross;
    r.neg_hessian.bottomLeftCorner(1, p) = cross.transpose();
    r.neg_hessian(p, p) = tau * (0.5 * resid.squaredNorm() + b);
    r.log_likelihood = log_likelihood(x, y, Distribution::gaussian, beta, psi);
    r.log_prior = log_coef_prior(beta, pr) + log_precision_prior(psi, pr);
    return r;
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::bayes ? "bayes" : "mle"; }

Method parse_method(std::string_view s) {
    if (s == "bayes") return Method::bayes;
    if (s == "mle") return Method::mle;
    throw Error("UnknownMethod", "method must be 'bayes' or 'mle', got '" + std::string(s) + "'");
}

void PriorSpec::validate() const {
    if (!(coef_variance > 0)) throw Error("InvalidPrior", "coefficient prior variance must be positive");
    if (!(precision_shape > 0) || !(precision_rate > 0))
        throw Error("InvalidPrior", "precision prior shape and rate must be positive");
    if (fixed_precision && !(*fixed_precision > 0))
        throw Error("InvalidPrior", "fixed precision must be positive");
}

std::size_t FitResult::parameter_count() const {
    return static_cast<std::size_t>(coefficients.size()) + (precision_estimated ? 1 : 0);
}

std::vector<std::string> FitResult::parameter_names(const std::string& child) const {
    std::vector<std::string> names;
    for (const auto& l : labels) names.push_back(child + "|" + l);
    if (precision_estimated) names.push_back(child + "|(log precision)");
    return names;
}

bool FitResult::ok() const {
    return converged && coefficients.allFinite() &&
           std::isfinite(method == Method::bayes ? mlik : log_likelihood);
}

Eigen::VectorXd loglik_terms(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                             const Eigen::VectorXd& beta, double log_precision) {
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        switch (family) {
        case Distribution::binomial: out[i] = y[i] * eta[i] - log1pexp(eta[i]); break;
        case Distribution::poisson: out[i] = y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y[i] + 1.0); break;
        case Distribution::gaussian: {
            double r = y[i] - eta[i];
            out[i] = 0.5 * (log_precision - kLog2Pi) - 0.5 * std::exp(log_precision) * r * r;
            break;
        }
        }
    }
    return out;
}

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                      const Eigen::VectorXd& beta, double log_precision) {
    return loglik_terms(x, y, family, beta, log_precision).sum();
}

Eigen::VectorXd score_vector(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Distribution family,
                             const Eigen::VectorXd& beta, double log_precision, bool with_precision) {
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu = mean_of(family, eta);
    const bool extra = with_precision && family == Distribution::gaussian;
    Eigen::VectorXd g(beta.size() + (extra ? 1 : 0));
    if (family == Distribution::gaussian) {
        Eigen::VectorXd r = y - eta;
        double tau = std::exp(log_precision);
        g.head(beta.size()) = tau * (x.transpose() * r);
        if (extra) g[beta.size()] = 0.5 * static_cast<double>(y.size()) - 0.5 * tau * r.squaredNorm();
    } else {
        g = x.transpose() * (y - mu);
    }
    return g;
}

FitResult fit_node(const DesignMatrix& design, Distribution family, Method method,
                   const PriorSpec& priors, const FitOptions& options, std::size_t n_candidates) {
    if (design.response.size() == 0) throw Error("NoObservations", "cannot fit a node with no observations");
    if (design.predictors.cols() < 1) throw Error("NoObservations", "design matrix has no columns");
    if (!design.response.allFinite() || !design.predictors.allFinite())
        throw Error("NonFiniteData", "design contains non-finite values");
    priors.validate();
    if (n_candidates == 0) n_candidates = static_cast<std::size_t>(design.predictors.cols() - 1);

    if (method == Method::mle) return fit_mle(design, family, options, n_candidates);

    FitResult r = family == Distribution::gaussian ? fit_bayes_gaussian(design, priors)
                                                   : fit_bayes_glm(design, family, priors);
    r.labels = design.labels;
    r.kept_columns.resize(design.labels.size());
    for (std::size_t k = 0; k < r.kept_columns.size(); ++k) r.kept_columns[k] = static_cast<Eigen::Index>(k);
    try {
        r.mlik = laplace_marginal_likelihood(r, design, family, priors);
    } catch (const Error& e) {
        r.mlik = -kInf;
        r.converged = false;
        r.diagnostic = e.what();
    }
    return r;
}

double laplace_marginal_likelihood(const FitResult& fit, const DesignMatrix& design,
                                   Distribution family, const PriorSpec& priors) {
    if (fit.method != Method::bayes) throw Error("NotBayesFit", "Laplace approximation needs a posterior-mode fit");
    Eigen::MatrixXd x = retained_predictors(fit, design);
    double psi = fit.log_precision.value_or(0.0);
    double ll = log_likelihood(x, design.response, family, fit.coefficients, psi);
    double lp = log_coef_prior(fit.coefficients, priors);
    if (fit.precision_estimated) lp += log_precision_prior(psi, priors);
    Eigen::LLT<Eigen::MatrixXd> llt(fit.neg_hessian);
    if (llt.info() != Eigen::Success)
        throw Error("NonPositiveDefiniteHessian", "negative Hessian is not positive definite at the mode");
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double d = static_cast<double>(fit.parameter_count());
    double value = ll + lp + 0.5 * d * kLog2Pi - 0.5 * logdet;
    if (!std::isfinite(value))
        throw Error("NonPositiveDefiniteHessian", "Laplace approximation is not finite");
    return value;
}

FrequentistScores frequentist_scores(const FitResult& fit, std::size_t n_obs,
                                     std::size_t n_candidate_parents) {
    FrequentistScores s;
    const double ll = fit.log_likelihood;
    const double k = static_cast<double>(fit.parameter_count());
    const double parents = static_cast<double>(fit.coefficients.size() - 1);
    const double cand = std::max(static_cast<double>(n_candidate_parents), parents);
    // log C(cand, parents)
    const double log_choose = std::lgamma(cand + 1) - std::lgamma(parents + 1) - std::lgamma(cand - parents + 1);
    s.mlik_unpenalized = ll;
    s.aic = ll - k;
    s.bic = ll - 0.5 * k * std::log(static_cast<double>(n_obs));
    s.mdl = s.bic - log_choose;
    return s;
}

Eigen::MatrixXd retained_predictors(const FitResult& fit, const DesignMatrix& design) {
    if (fit.kept_columns.empty()) return design.predictors;
    return select_columns(design.predictors, fit.kept_columns);
}

std::vector<MarginalDensity> marginal_densities(const FitResult& fit, const std::string& child,
                                                std::size_t n_grid, const RangePolicy& range) {
    if (fit.method != Method::bayes) throw Error("NotBayesFit", "marginal densities need a posterior-mode fit");
    if (n_grid < 2) throw Error("InvalidArgument", "grid needs at least two points");
    Eigen::LLT<Eigen::MatrixXd> llt(fit.neg_hessian);
    if (llt.info() != Eigen::Success)
        throw Error("NonPositiveDefiniteHessian", "negative Hessian is not positive definite");
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(fit.neg_hessian.rows(), fit.neg_hessian.cols()));

    std::vector<MarginalDensity> out;
    auto names = fit.parameter_names(child);
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        MarginalDensity m;
        m.name = names[k];
        m.mode = ki < fit.coefficients.size() ? fit.coefficients[ki] : *fit.log_precision;
        m.sd = std::sqrt(cov(ki, ki));
        double lo = m.mode - range.sd_multiplier * m.sd;
        double hi = m.mode + range.sd_multiplier * m.sd;
        if (auto it = range.explicit_ranges.find(m.name); it != range.explicit_ranges.end()) {
            lo = it->second.first;
            hi = it->second.second;
        }
        if (!(hi > lo)) throw Error("RangeTooNarrow", "empty range for " + m.name);
        const auto g = static_cast<Eigen::Index>(n_grid);
        m.grid = Eigen::VectorXd::LinSpaced(g, lo, hi);
        m.density.resize(g);
        const double norm = 1.0 / (m.sd * std::sqrt(2.0 * std::numbers::pi));
        for (Eigen::Index i = 0; i < g; ++i) {
            double z = (m.grid[i] - m.mode) / m.sd;
            m.density[i] = norm * std::exp(-0.5 * z * z);
        }
        double peak = norm;
        if (m.density[0] > 1e-3 * peak || m.density[g - 1] > 1e-3 * peak)
            throw Error("RangeTooNarrow", "density of " + m.name + " has not decayed at the grid boundary");
        double step = (hi - lo) / static_cast<double>(g - 1);
        m.area = step * (m.density.sum() - 0.5 * (m.density[0] + m.density[g - 1]));
        m.probabilities = m.density / m.density.sum();
        out.push_back(std::move(m));
    }
    return out;
}

ScoreContribution score_contribution(const FitResult& fit, const DesignMatrix& design) {
    Eigen::MatrixXd x = retained_predictors(fit, design);
    const auto& y = design.response;
    double psi = fit.log_precision.value_or(0.0);
    ScoreContribution sc;
    sc.loglik_terms = loglik_terms(x, y, fit.family, fit.coefficients, psi);
    Eigen::VectorXd w = weights_of(fit.family, mean_of(fit.family, x * fit.coefficients));
    // Leverages are the squared row norms of Q for W^1/2 X = QR, restricted to
    // the numerical rank.
    Eigen::MatrixXd wx = w.array().sqrt().matrix().asDiagonal() * x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), rank);
    sc.hat_diagonal = q.rowwise().squaredNorm();
    return sc;
}

void write_fit(std::ostream& out, const std::string& child, const FitResult& fit) {
    auto old = out.precision(10);
    out << "node " << child << '\n';
    out << "family " << to_string(fit.family) << '\n';
    out << "method " << to_string(fit.method) << '\n';
    out << "converged " << (fit.converged ? 1 : 0) << '\n';
    out << "loglik " << fit.log_likelihood << '\n';
    if (fit.method == Method::bayes) {
        out << "mlik " << fit.mlik << '\n';
    } else {
        out << "aic " << fit.aic << "\nbic " << fit.bic << "\nmdl " << fit.mdl << '\n';
    }
    Eigen::VectorXd sd = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(fit.parameter_count()),
                                                   std::numeric_limits<double>::quiet_NaN());
    Eigen::LLT<Eigen::MatrixXd> llt(fit.neg_hessian);
    if (fit.neg_hessian.rows() == sd.size() && llt.info() == Eigen::Success)
        sd = llt.solve(Eigen::MatrixXd::Identity(sd.size(), sd.size())).diagonal().array().sqrt();
    auto names = fit.parameter_names(child);
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        double value = ki < fit.coefficients.size() ? fit.coefficients[ki] : *fit.log_precision;
        out << "param " << names[k] << ' ' << value << ' ' << sd[ki] << '\n';
    }
    for (const auto& d : fit.dropped_predictors) out << "dropped " << child << '|' << d << '\n';
    if (fit.used_firth) out << "firth 1\n";
    if (!fit.diagnostic.empty()) out << "diagnostic " << fit.diagnostic << '\n';
    out.precision(old);
}

}  // namespace abn
