#include "ztmeta/gof.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include "ztmeta/error.hpp"

namespace ztmeta {

FrequencyTable fitted_frequencies(const RegressionData& data, const FitResult& fit, int tail_threshold) {
    if (!fit.converged) throw PreconditionError("fitted frequencies need a converged fit");
    if (!fit.spec.truncated) throw PreconditionError("fitted frequencies need a zero-truncated fit");
    if (tail_threshold < 2) throw DomainError("tail threshold must be at least 2");

    const auto heads = static_cast<std::size_t>(tail_threshold - 1);
    FrequencyTable table;
    table.tail_threshold = tail_threshold;
    table.bins.resize(heads + 1);
    for (std::size_t b = 0; b < heads; ++b) table.bins[b].label = std::to_string(b + 1);
    table.bins[heads].label = std::to_string(tail_threshold) + "+";

    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::int64_t y = data.events[i];
        if (y < 1) throw DomainError("observed counts must be >= 1 under truncation");
        const auto bin = std::min(static_cast<std::size_t>(y - 1), heads);
        table.bins[bin].observed += 1.0;

        const CountParams params = fitted_params(fit, data, i);
        for (std::size_t b = 0; b < heads; ++b)
            table.bins[b].fitted += zt_pmf(fit.spec.family, static_cast<std::int64_t>(b + 1), params);
    }
    double head_mass = 0.0;
    for (std::size_t b = 0; b < heads; ++b) head_mass += table.bins[b].fitted;
    table.bins[heads].fitted = static_cast<double>(data.size()) - head_mass;
    return table;
}

double chi_square_sf(double statistic, int dof) {
    if (dof <= 0) throw DomainError("chi-square degrees of freedom must be positive");
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

ChiSquareResult chi_square_test(const FrequencyTable& table, int n_params) {
    ChiSquareResult res;
    res.dof = static_cast<int>(table.bins.size()) - 1 - n_params;
    if (res.dof <= 0)
        throw DomainError("chi-square test has " + std::to_string(res.dof) + " degrees of freedom");
    for (const auto& bin : table.bins) {
        if (!(bin.fitted > 0.0)) throw DomainError("fitted frequency of bin '" + bin.label + "' is not positive");
        const double d = bin.observed - bin.fitted;
        res.statistic += d * d / bin.fitted;
    }
    res.p_value = chi_square_sf(res.statistic, res.dof);
    return res;
}

}  // namespace ztmeta
