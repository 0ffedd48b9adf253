#include "ztmeta/ztreg.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <limits>

#include "ztmeta/error.hpp"
#include "ztmeta/newton.hpp"

namespace ztmeta {

namespace {

// Smallest eigenvalue of the coefficient information below which the fit is
// treated as sliding off to infinity along a flat direction.
constexpr double kMinInformation = 1e-6;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_factorial(std::int64_t y) { return std::lgamma(static_cast<double>(y) + 1.0); }

double log_rising_factorial(double a, std::int64_t y) {
    if (y < 64) {
        double s = 0.0;
        for (std::int64_t j = 0; j < y; ++j) s += std::log(a + static_cast<double>(j));
        return s;
    }
    return std::lgamma(a + static_cast<double>(y)) - std::lgamma(a);
}

// digamma(a + y) - digamma(a)
double digamma_difference(double a, std::int64_t y) {
    if (y < 64) {
        double s = 0.0;
        for (std::int64_t j = 0; j < y; ++j) s += 1.0 / (a + static_cast<double>(j));
        return s;
    }
    return boost::math::digamma(a + static_cast<double>(y)) - boost::math::digamma(a);
}

std::int64_t trials_of(double exposure) { return static_cast<std::int64_t>(std::llround(exposure)); }

}  // namespace

int lp_size(int lp) {
    switch (lp) {
        case 1: return 1;
        case 2: return 2;
        case 3: return 2;
        case 4: return 3;
        case 5: return 4;
        default: throw DomainError("linear predictor index must be 1..5, got " + std::to_string(lp));
    }
}

Eigen::VectorXd design_row(int lp, double x1, double x2) {
    Eigen::VectorXd h(lp_size(lp));
    switch (lp) {
        case 1: h << 1.0; break;
        case 2: h << 1.0, x1; break;
        case 3: h << 1.0, x2; break;
        case 4: h << 1.0, x1, x2; break;
        case 5: h << 1.0, x1, x2, x1 * x2; break;
    }
    return h;
}

std::string ModelSpec::label() const {
    return std::string(truncated ? "zt-" : "") + std::string(family_name(family)) + "-lp" + std::to_string(lp);
}

std::vector<ModelSpec> count_model_grid() {
    std::vector<ModelSpec> g;
    for (Family f : {Family::Poisson, Family::NegBin})
        for (int lp = 1; lp <= kNumLinearPredictors; ++lp) g.push_back({f, true, lp});
    return g;
}

std::vector<ModelSpec> full_truncated_grid() {
    auto g = count_model_grid();
    for (int lp = 1; lp <= kNumLinearPredictors; ++lp) g.push_back({Family::Binomial, true, lp});
    return g;
}

std::vector<ModelSpec> untruncated_grid(Family family) {
    std::vector<ModelSpec> g;
    for (int lp = 1; lp <= kNumLinearPredictors; ++lp) g.push_back({family, false, lp});
    return g;
}

RegressionData RegressionData::from(const Dataset& ds) {
    RegressionData d;
    const auto n = static_cast<Eigen::Index>(ds.size());
    d.exposure.resize(n);
    d.x1.resize(n);
    d.x2.resize(n);
    d.events.resize(ds.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = ds[static_cast<std::size_t>(i)];
        if (!r.prop_women)
            throw PreconditionError("study '" + r.id + "' has no proportion of women; impute first");
        d.exposure(i) = r.exposure;
        d.x1(i) = *r.prop_women;
        d.x2(i) = r.usa();
        d.events[static_cast<std::size_t>(i)] = r.events;
    }
    return d;
}

LogLikelihood::LogLikelihood(const RegressionData& data, const ModelSpec& spec)
    : data_(data), spec_(spec), has_alpha_(spec.family == Family::NegBin) {
    const auto n = static_cast<Eigen::Index>(data.size());
    design_.resize(n, lp_size(spec.lp));
    for (Eigen::Index i = 0; i < n; ++i) design_.row(i) = design_row(spec.lp, data.x1(i), data.x2(i)).transpose();
}

double LogLikelihood::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const auto p = design_.cols();
    const auto beta = theta.head(p);
    const bool trunc = spec_.truncated;
    const double t = has_alpha_ ? theta(p) : 0.0;
    const double a = std::exp(t);
    if (grad) grad->setZero(theta.size());

    double total = 0.0;
    for (Eigen::Index i = 0; i < design_.rows(); ++i) {
        const std::int64_t yi = data_.events[static_cast<std::size_t>(i)];
        const double y = static_cast<double>(yi);
        const double eta = design_.row(i).dot(beta);
        double l = 0.0;
        double s_eta = 0.0;    // dl/deta
        double s_t = 0.0;      // dl/dlog(alpha)
        switch (spec_.family) {
            case Family::Poisson: {
                const double log_mu = std::log(data_.exposure(i)) + eta;
                const double mu = std::exp(log_mu);
                l = y * log_mu - mu - log_factorial(yi);
                s_eta = y - mu;
                if (trunc) {
                    const double one_minus_p0 = -std::expm1(-mu);
                    l -= std::log(one_minus_p0);
                    s_eta = y - mu / one_minus_p0;
                }
                break;
            }
            case Family::NegBin: {
                const double log_mu = std::log(data_.exposure(i)) + eta;
                const double mu = std::exp(log_mu);
                const double log_ratio = std::log1p(mu / a);  // log((a + mu) / a)
                const double log_p0 = -a * log_ratio;
                l = log_rising_factorial(a, yi) - log_factorial(yi) - a * log_ratio;
                if (yi > 0) l += y * (log_mu - std::log(a + mu));
                s_eta = a * (y - mu) / (a + mu);
                const double dlogp_da = digamma_difference(a, yi) - log_ratio + (mu - y) / (a + mu);
                double dlogp0_da = 0.0;
                if (trunc) {
                    const double log_norm = log1mexp(log_p0);
                    l -= log_norm;
                    const double odds0 = std::exp(log_p0 - log_norm);  // p0 / (1 - p0)
                    s_eta += odds0 * (-a * mu / (a + mu));
                    dlogp0_da = odds0 * (-log_ratio + mu / (a + mu));
                }
                s_t = a * (dlogp_da + dlogp0_da);
                break;
            }
            case Family::Binomial: {
                const std::int64_t ni = trials_of(data_.exposure(i));
                const double nd = static_cast<double>(ni);
                if (yi > ni) return -std::numeric_limits<double>::infinity();
                const double rho = 1.0 / (1.0 + std::exp(-eta));
                const double log_rho = -softplus(-eta);
                const double log_1mrho = -softplus(eta);
                l = log_factorial(ni) - log_factorial(yi) - log_factorial(ni - yi) + y * log_rho +
                    (nd - y) * log_1mrho;
                s_eta = y - nd * rho;
                if (trunc) {
                    const double log_p0 = nd * log_1mrho;
                    const double log_norm = log1mexp(log_p0);
                    l -= log_norm;
                    s_eta = y - nd * rho / std::exp(log_norm);
                }
                break;
            }
        }
        total += l;
        if (grad) {
            grad->head(p) += s_eta * design_.row(i).transpose();
            if (has_alpha_) (*grad)(p) += s_t;
        }
    }
    return total;
}

Eigen::VectorXd LogLikelihood::gradient(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g;
    evaluate(theta, &g);
    return g;
}

Eigen::MatrixXd LogLikelihood::hessian(const Eigen::VectorXd& theta) const {
    if (has_alpha_) {
        return finite_difference_hessian(
            [this](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return evaluate(x, g); }, theta);
    }
    const auto p = design_.cols();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < design_.rows(); ++i) {
        const double eta = design_.row(i).dot(theta.head(p));
        double w = 0.0;  // -d2l/deta2
        if (spec_.family == Family::Poisson) {
            const double mu = data_.exposure(i) * std::exp(eta);
            if (spec_.truncated) {
                const double em1 = std::expm1(mu);  // e^mu - 1
                const double m = mu / -std::expm1(-mu);
                w = m * ((em1 - mu) / em1);
            } else {
                w = mu;
            }
        } else {
            const double nd = static_cast<double>(trials_of(data_.exposure(i)));
            const double rho = 1.0 / (1.0 + std::exp(-eta));
            w = nd * rho * (1.0 - rho);
            if (spec_.truncated) {
                const double log_p0 = -nd * softplus(eta);
                const double one_minus_p0 = std::exp(log1mexp(log_p0));
                const double p0 = std::exp(log_p0);
                w = w / one_minus_p0 - nd * nd * rho * rho * p0 / (one_minus_p0 * one_minus_p0);
            }
        }
        h.noalias() -= w * design_.row(i).transpose() * design_.row(i);
    }
    return h;
}

double bic_from(double loglik, int k, std::size_t n) {
    return -2.0 * loglik + static_cast<double>(k) * std::log(static_cast<double>(n));
}

namespace {

FitResult run_fit(const RegressionData& data, const ModelSpec& spec, const std::vector<Eigen::VectorXd>& starts) {
    const LogLikelihood ll(data, spec);
    const ObjectiveFn f = [&ll](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return ll.evaluate(x, g); };
    const bool negbin = spec.family == Family::NegBin;
    HessianFn h;
    if (!negbin) h = [&ll](const Eigen::VectorXd& x) { return ll.hessian(x); };
    const auto p = static_cast<Eigen::Index>(lp_size(spec.lp));

    NewtonOptions opts;
    if (negbin) {
        opts.upper_bounds = Eigen::VectorXd::Constant(p + 1, std::numeric_limits<double>::infinity());
        opts.upper_bounds(p) = kLogDispersionCap;
    }

    std::optional<NewtonResult> best;
    for (const auto& x0 : starts) {
        NewtonResult r = maximize(f, h, x0, opts);
        if (!std::isfinite(r.value)) continue;
        const bool better = !best || (r.converged && !best->converged) ||
                            (r.converged == best->converged && r.value > best->value);
        if (better) best = std::move(r);
    }

    FitResult out;
    out.spec = spec;
    out.n = data.size();
    out.k = static_cast<int>(p) + (negbin ? 1 : 0);
    if (!best) {
        out.converged = false;
        out.loglik = -std::numeric_limits<double>::infinity();
        out.bic = std::numeric_limits<double>::infinity();
        out.message = "log-likelihood not finite at any starting point";
        out.beta = starts.front().head(p);
        return out;
    }

    out.beta = best->x.head(p);
    out.loglik = best->value;
    out.bic = bic_from(out.loglik, out.k, out.n);
    out.converged = best->converged;
    out.iterations = best->iterations;
    if (!out.converged) out.message = "no convergence within the iteration limit";
    if (negbin) {
        out.alpha = std::exp(best->x(p));
        out.dispersion_at_bound = best->x(p) >= kLogDispersionCap;
    }

    // Observed information; the dispersion coordinate is held fixed when it
    // sits on the cap.
    const Eigen::MatrixXd info_full = -best->hessian;
    const Eigen::MatrixXd info_beta = info_full.topLeftCorner(p, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info_beta, Eigen::EigenvaluesOnly);
    if (!info_beta.allFinite() || eig.eigenvalues().minCoeff() < kMinInformation) {
        out.converged = false;
        out.message = "coefficient information vanishes; estimate diverges along a flat direction";
        out.se_beta = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        return out;
    }
    Eigen::MatrixXd cov;
    if (negbin && !out.dispersion_at_bound) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info_full);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            cov = ldlt.solve(Eigen::MatrixXd::Identity(p + 1, p + 1)).topLeftCorner(p, p);
        }
    }
    if (cov.size() == 0 || !cov.allFinite() || (cov.diagonal().array() < 0.0).any())
        cov = info_beta.inverse();
    out.se_beta = cov.diagonal().cwiseSqrt();
    return out;
}

Eigen::VectorXd intercept_start(const RegressionData& data, const ModelSpec& spec) {
    double events = 0.0;
    for (auto y : data.events) events += static_cast<double>(y);
    const double rate = std::max(events, 0.5) / data.exposure.sum();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(lp_size(spec.lp));
    b(0) = spec.family == Family::Binomial ? std::log(rate / (1.0 - rate)) : std::log(rate);
    return b;
}

Eigen::VectorXd with_dispersion(const Eigen::VectorXd& beta, double log_alpha) {
    Eigen::VectorXd x(beta.size() + 1);
    x << beta, log_alpha;
    return x;
}

std::vector<Eigen::VectorXd> negbin_starts(const Eigen::VectorXd& beta) {
    return {with_dispersion(beta, std::log(10.0)), with_dispersion(beta, kLogDispersionCap)};
}

void require_complete_counts(const RegressionData& data, bool truncated) {
    for (auto y : data.events) {
        if (y < 0) throw DomainError("event counts must be non-negative");
        if (truncated && y < 1) throw PreconditionError("zero-truncated fits need every count >= 1");
    }
}

}  // namespace

FitResult fit_glm(const RegressionData& data, const ModelSpec& spec) {
    if (spec.truncated) throw PreconditionError("fit_glm expects an untruncated model spec");
    require_complete_counts(data, false);
    if (spec.family == Family::NegBin) {
        const FitResult pois = fit_glm(data, {Family::Poisson, false, spec.lp});
        return run_fit(data, spec, negbin_starts(pois.beta));
    }
    return run_fit(data, spec, {intercept_start(data, spec)});
}

FitResult fit_glm(const Dataset& ds, const ModelSpec& spec) { return fit_glm(RegressionData::from(ds), spec); }

FitResult fit_zt(const RegressionData& data, const ModelSpec& spec, const std::optional<Eigen::VectorXd>& init_beta) {
    if (!spec.truncated) throw PreconditionError("fit_zt expects a zero-truncated model spec");
    require_complete_counts(data, true);
    Eigen::VectorXd beta;
    if (init_beta) {
        beta = *init_beta;
    } else {
        const Family base = spec.family == Family::Binomial ? Family::Binomial : Family::Poisson;
        beta = fit_glm(data, {base, false, spec.lp}).beta;
    }
    if (beta.size() != lp_size(spec.lp)) throw DomainError("initial coefficient vector has the wrong length");
    if (spec.family == Family::NegBin) return run_fit(data, spec, negbin_starts(beta));
    return run_fit(data, spec, {beta});
}

FitResult fit_zt(const Dataset& ds, const ModelSpec& spec) { return fit_zt(RegressionData::from(ds), spec); }

FitResult fit_model(const RegressionData& data, const ModelSpec& spec) {
    return spec.truncated ? fit_zt(data, spec) : fit_glm(data, spec);
}

std::vector<FitResult> fit_grid(const RegressionData& data, const std::vector<ModelSpec>& specs) {
    if (specs.empty()) throw PreconditionError("empty model grid");
    std::vector<FitResult> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        try {
            out.push_back(fit_model(data, spec));
        } catch (const std::exception& e) {
            FitResult failed;
            failed.spec = spec;
            failed.n = data.size();
            failed.k = lp_size(spec.lp) + (spec.family == Family::NegBin ? 1 : 0);
            failed.loglik = -std::numeric_limits<double>::infinity();
            failed.bic = std::numeric_limits<double>::infinity();
            failed.converged = false;
            failed.message = e.what();
            out.push_back(std::move(failed));
        }
    }
    return out;
}

std::vector<FitResult> fit_grid(const Dataset& ds, const std::vector<ModelSpec>& specs) {
    return fit_grid(RegressionData::from(ds), specs);
}

double predict_rate(const FitResult& fit, double x1, double x2) {
    const double eta = design_row(fit.spec.lp, x1, x2).dot(fit.beta);
    if (fit.spec.family == Family::Binomial) return 1.0 / (1.0 + std::exp(-eta));
    return std::exp(eta);
}

CountParams fitted_params(const FitResult& fit, const RegressionData& data, std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double eta = design_row(fit.spec.lp, data.x1(row), data.x2(row)).dot(fit.beta);
    switch (fit.spec.family) {
        case Family::Poisson: return CountParams::poisson(data.exposure(row) * std::exp(eta));
        case Family::NegBin: return CountParams::negbin(data.exposure(row) * std::exp(eta), fit.alpha.value());
        case Family::Binomial:
            return CountParams::binomial(trials_of(data.exposure(row)), 1.0 / (1.0 + std::exp(-eta)));
    }
    throw DomainError("unknown family");
}

}  // namespace ztmeta
