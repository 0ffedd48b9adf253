#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace ztmeta {

enum class Family { Poisson, NegBin, Binomial };

std::string_view family_name(Family f);

/// Parameters of a count distribution.
///
/// Poisson uses `mean`; NegBin uses `mean` and `dispersion` (the size, with
/// Var = mean + mean^2 / dispersion); Binomial uses `trials` and
/// `success_prob`.
struct CountParams {
    double mean = 0.0;
    std::optional<double> dispersion;
    std::optional<std::int64_t> trials;
    std::optional<double> success_prob;

    static CountParams poisson(double mean);
    static CountParams negbin(double mean, double dispersion);
    static CountParams binomial(std::int64_t trials, double success_prob);
};

/// Throws DomainError unless `p` carries exactly the fields `f` needs with
/// valid values.
void validate(Family f, const CountParams& p);

double log_pmf(Family f, std::int64_t y, const CountParams& p);
double pmf(Family f, std::int64_t y, const CountParams& p);

/// log p(0), evaluated without cancellation for large NegBin dispersion.
double log_pmf_zero(Family f, const CountParams& p);

/// p(y) / (1 - p(0)) for y >= 1.
double zt_pmf(Family f, std::int64_t y, const CountParams& p);
double log_zt_pmf(Family f, std::int64_t y, const CountParams& p);

/// Mean of the zero-truncated law, mean / (1 - p(0)) (Binomial: n*rho / (1 - p(0))).
double zt_mean(Family f, const CountParams& p);

using Rng = std::mt19937_64;

/// One draw from the zero-truncated distribution.
///
/// Inverse-CDF scan over the truncated pmf when the untruncated mean is at
/// most 50, otherwise rejection of zeros from the untruncated sampler.
std::int64_t sample_zt(Family f, const CountParams& p, Rng& rng);

/// log(1 - exp(x)) for x < 0.
double log1mexp(double x);

}  // namespace ztmeta
