#include "ztmeta/population.hpp"

#include <cmath>

#include "ztmeta/error.hpp"

namespace ztmeta {

bool StratumDef::contains(double prop_women, double usa) const {
    const bool is_usa = usa != 0.0;
    if (country == CountryFilter::USA && !is_usa) return false;
    if (country == CountryFilter::Other && is_usa) return false;
    if (prop_women < lower) return false;
    return upper_closed ? prop_women <= upper : prop_women < upper;
}

Eigen::VectorXd ht_study_totals(const RegressionData& data, const FitResult& fit) {
    if (fit.spec.family == Family::Binomial)
        throw DomainError("Horvitz-Thompson sizes are only defined for Poisson and negative-binomial fits");
    Eigen::VectorXd totals(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const CountParams params = fitted_params(fit, data, i);
        const double log_detect = log1mexp(log_pmf_zero(fit.spec.family, params));
        if (!std::isfinite(log_detect))
            throw DomainError("p(0) is numerically 1; the study could never have been observed");
        totals(static_cast<Eigen::Index>(i)) = std::exp(-log_detect);
    }
    return totals;
}

PopulationEstimate ht_estimate(const Dataset& ds, const FitResult& fit) {
    if (!fit.converged) throw PreconditionError("Horvitz-Thompson estimation needs a converged fit");
    const RegressionData data = RegressionData::from(ds);
    const Eigen::VectorXd totals = ht_study_totals(data, fit);

    PopulationEstimate pe;
    pe.n = ds.size();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double t = totals(static_cast<Eigen::Index>(i));
        pe.per_study.push_back({ds[i].id, t, t - 1.0});
        pe.total_N += t;
    }
    pe.total_M = pe.total_N - static_cast<double>(pe.n);
    return pe;
}

std::vector<StratumDef> default_strata() {
    struct Cut {
        const char* label;
        double lo, hi;
        bool closed;
    };
    const Cut cuts[] = {{"[0,0.75)", 0.0, 0.75, false},
                        {"[0.75,0.80)", 0.75, 0.80, false},
                        {"[0.80,0.85)", 0.80, 0.85, false},
                        {"[0.85,1]", 0.85, 1.0, true}};
    std::vector<StratumDef> out;
    for (auto [country, name] : {std::pair{CountryFilter::USA, "USA"}, std::pair{CountryFilter::Other, "Others"}})
        for (const auto& c : cuts) out.push_back({std::string(name) + " " + c.label, country, c.lo, c.hi, c.closed});
    return out;
}

std::vector<StratumDef> default_strata_with_margins() {
    auto out = default_strata();
    out.push_back({"USA total", CountryFilter::USA, 0.0, 1.0, true});
    out.push_back({"Others total", CountryFilter::Other, 0.0, 1.0, true});
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& cell = out[c];
        const auto space = cell.label.find(' ');
        out.push_back({"Total " + cell.label.substr(space + 1), CountryFilter::All, cell.lower, cell.upper,
                       cell.upper_closed});
    }
    out.push_back({"Total", CountryFilter::All, 0.0, 1.0, true});
    return out;
}

std::vector<StratumResult> summarize_strata(const PopulationEstimate& pe, const Dataset& ds,
                                            const std::vector<StratumDef>& strata) {
    if (pe.per_study.size() != ds.size()) throw PreconditionError("population estimate does not match dataset");
    std::vector<StratumResult> out;
    out.reserve(strata.size());
    for (const auto& s : strata) {
        StratumResult r{s.label, 0, 0.0};
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (!ds[i].prop_women) throw PreconditionError("study '" + ds[i].id + "' has no proportion of women");
            if (s.contains(*ds[i].prop_women, ds[i].usa())) {
                ++r.observed;
                r.missing += pe.per_study[i].missing;
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StratumResult> stratify(const PopulationEstimate& pe, const Dataset& ds,
                                    const std::vector<StratumDef>& strata) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!ds[i].prop_women) throw PreconditionError("study '" + ds[i].id + "' has no proportion of women");
        std::size_t hits = 0;
        for (const auto& s : strata) hits += s.contains(*ds[i].prop_women, ds[i].usa()) ? 1 : 0;
        if (hits != 1)
            throw PreconditionError("study '" + ds[i].id + "' falls in " + std::to_string(hits) +
                                    " strata; strata must partition the studies");
    }
    return summarize_strata(pe, ds, strata);
}

long long round_count(double v) { return std::llround(v); }

}  // namespace ztmeta
