#include "ztmeta/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ztmeta/error.hpp"

namespace ztmeta {

namespace {

constexpr double kInverseCdfMeanLimit = 50.0;

// lgamma(a + y) - lgamma(a); the direct difference cancels badly once a is
// large compared to y, which is exactly the near-Poisson regime.
double log_rising_factorial(double a, std::int64_t y) {
    if (y < 64) {
        double s = 0.0;
        for (std::int64_t j = 0; j < y; ++j) s += std::log(a + static_cast<double>(j));
        return s;
    }
    return std::lgamma(a + static_cast<double>(y)) - std::lgamma(a);
}

double log_factorial(std::int64_t y) { return std::lgamma(static_cast<double>(y) + 1.0); }

}  // namespace

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Poisson: return "poisson";
        case Family::NegBin: return "negbin";
        case Family::Binomial: return "binomial";
    }
    return "unknown";
}

CountParams CountParams::poisson(double mean) {
    CountParams p;
    p.mean = mean;
    return p;
}

CountParams CountParams::negbin(double mean, double dispersion) {
    CountParams p;
    p.mean = mean;
    p.dispersion = dispersion;
    return p;
}

CountParams CountParams::binomial(std::int64_t trials, double success_prob) {
    CountParams p;
    p.mean = static_cast<double>(trials) * success_prob;
    p.trials = trials;
    p.success_prob = success_prob;
    return p;
}

void validate(Family f, const CountParams& p) {
    switch (f) {
        case Family::Poisson:
            if (p.dispersion || p.trials || p.success_prob)
                throw DomainError("poisson parameters carry extra fields");
            if (!(p.mean > 0.0) || !std::isfinite(p.mean))
                throw DomainError("poisson mean must be positive and finite");
            return;
        case Family::NegBin:
            if (!p.dispersion || p.trials || p.success_prob)
                throw DomainError("negative-binomial parameters need exactly mean and dispersion");
            if (!(p.mean > 0.0) || !std::isfinite(p.mean))
                throw DomainError("negative-binomial mean must be positive and finite");
            if (!(*p.dispersion > 0.0) || !std::isfinite(*p.dispersion))
                throw DomainError("negative-binomial dispersion must be positive and finite");
            return;
        case Family::Binomial:
            if (!p.trials || !p.success_prob || p.dispersion)
                throw DomainError("binomial parameters need exactly trials and success probability");
            if (*p.trials < 1) throw DomainError("binomial trials must be positive");
            if (!(*p.success_prob >= 0.0 && *p.success_prob <= 1.0))
                throw DomainError("binomial success probability must lie in [0, 1]");
            return;
    }
}

double log_pmf(Family f, std::int64_t y, const CountParams& p) {
    validate(f, p);
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (y < 0) return kNegInf;
    const double yd = static_cast<double>(y);
    switch (f) {
        case Family::Poisson:
            return yd * std::log(p.mean) - p.mean - log_factorial(y);
        case Family::NegBin: {
            const double a = *p.dispersion;
            const double mu = p.mean;
            double lp = log_rising_factorial(a, y) - log_factorial(y) - a * std::log1p(mu / a);
            if (y > 0) lp += yd * (std::log(mu) - std::log(a + mu));
            return lp;
        }
        case Family::Binomial: {
            const std::int64_t n = *p.trials;
            const double rho = *p.success_prob;
            if (y > n) return kNegInf;
            const double nd = static_cast<double>(n);
            const double lchoose = log_factorial(n) - log_factorial(y) - log_factorial(n - y);
            double lp = lchoose;
            if (y > 0) lp += (rho == 0.0) ? kNegInf : yd * std::log(rho);
            if (y < n) lp += (rho == 1.0) ? kNegInf : (nd - yd) * std::log1p(-rho);
            return lp;
        }
    }
    return kNegInf;
}

double pmf(Family f, std::int64_t y, const CountParams& p) { return std::exp(log_pmf(f, y, p)); }

double log_pmf_zero(Family f, const CountParams& p) { return log_pmf(f, 0, p); }

double log1mexp(double x) {
    // Maechler's switch point keeps full relative accuracy on both sides.
    return (x > -M_LN2) ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double log_zt_pmf(Family f, std::int64_t y, const CountParams& p) {
    if (y < 1) throw DomainError("zero-truncated pmf is defined for y >= 1, got " + std::to_string(y));
    const double log_norm = log1mexp(log_pmf_zero(f, p));
    if (!std::isfinite(log_norm))
        throw DomainError("degenerate truncation: p(0) is numerically 1");
    return log_pmf(f, y, p) - log_norm;
}

double zt_pmf(Family f, std::int64_t y, const CountParams& p) {
    return std::exp(log_zt_pmf(f, y, p));
}

double zt_mean(Family f, const CountParams& p) {
    const double log_norm = log1mexp(log_pmf_zero(f, p));
    if (!std::isfinite(log_norm))
        throw DomainError("degenerate truncation: p(0) is numerically 1");
    return p.mean / std::exp(log_norm);
}

std::int64_t sample_zt(Family f, const CountParams& p, Rng& rng) {
    validate(f, p);
    const double log_p0 = log_pmf_zero(f, p);
    const double log_norm = log1mexp(log_p0);
    if (!std::isfinite(log_norm))
        throw DomainError("degenerate truncation: p(0) is numerically 1");

    if (p.mean <= kInverseCdfMeanLimit) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        // pmf recurrences p(y+1) / p(y)
        double ratio_base = 0.0;
        switch (f) {
            case Family::Poisson: ratio_base = p.mean; break;
            case Family::NegBin: ratio_base = p.mean / (*p.dispersion + p.mean); break;
            case Family::Binomial: ratio_base = *p.success_prob / (1.0 - *p.success_prob); break;
        }
        double prob = std::exp(log_pmf(f, 1, p) - log_norm);
        double cdf = prob;
        std::int64_t y = 1;
        const std::int64_t y_max = (f == Family::Binomial) ? *p.trials : std::numeric_limits<std::int64_t>::max();
        while (cdf < u && y < y_max) {
            const double yd = static_cast<double>(y);
            double ratio = 0.0;
            switch (f) {
                case Family::Poisson: ratio = ratio_base / (yd + 1.0); break;
                case Family::NegBin: ratio = ratio_base * (*p.dispersion + yd) / (yd + 1.0); break;
                case Family::Binomial:
                    ratio = ratio_base * (static_cast<double>(*p.trials) - yd) / (yd + 1.0);
                    break;
            }
            const double next = prob * ratio;
            // Past the mode with the remaining mass below round-off: u sits in
            // the last ulp of the cdf.
            if (next == 0.0 && ratio < 1.0) break;
            prob = next;
            cdf += prob;
            ++y;
        }
        return y;
    }

    for (;;) {
        std::int64_t draw = 0;
        switch (f) {
            case Family::Poisson: {
                std::poisson_distribution<std::int64_t> pois(p.mean);
                draw = pois(rng);
                break;
            }
            case Family::NegBin: {
                const double a = *p.dispersion;
                std::gamma_distribution<double> gam(a, p.mean / a);
                const double lambda = gam(rng);
                if (lambda > 0.0) {
                    std::poisson_distribution<std::int64_t> pois(lambda);
                    draw = pois(rng);
                }
                break;
            }
            case Family::Binomial: {
                std::binomial_distribution<std::int64_t> bin(*p.trials, *p.success_prob);
                draw = bin(rng);
                break;
            }
        }
        if (draw > 0) return draw;
    }
}

}  // namespace ztmeta
