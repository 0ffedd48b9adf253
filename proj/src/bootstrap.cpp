#include "ztmeta/bootstrap.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <cstdio>
#include <thread>

#include "ztmeta/error.hpp"

namespace ztmeta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ZTMETA_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t draw_index(const std::vector<double>& cumulative, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    idx = std::min(idx, cumulative.size() - 1);
    // skip zero-weight entries that share a cumulative value
    while (idx > 0 && cumulative[idx] == cumulative[idx - 1]) --idx;
    return idx;
}

}  // namespace

BicWeights bic_weights(const std::vector<FitResult>& fits) {
    BicWeights out;
    out.weights.assign(fits.size(), 0.0);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < fits.size(); ++l) {
        if (fits[l].converged && std::isfinite(fits[l].bic))
            best = std::min(best, fits[l].bic);
        else
            out.excluded.push_back(l);
    }
    if (!std::isfinite(best)) throw PreconditionError("BIC weights: every model fit failed");
    double total = 0.0;
    for (std::size_t l = 0; l < fits.size(); ++l) {
        if (!fits[l].converged || !std::isfinite(fits[l].bic)) continue;
        out.weights[l] = std::exp(-0.5 * (fits[l].bic - best));
        total += out.weights[l];
    }
    for (double& w : out.weights) w /= total;
    return out;
}

std::vector<SubPopulation> default_subpopulations() {
    std::vector<SubPopulation> out;
    for (double pw : {0.75, 0.80, 0.85}) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f", pw);
        out.push_back({std::string("USA ") + buf, pw, 1.0});
        out.push_back({std::string("Others ") + buf, pw, 0.0});
    }
    return out;
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw PreconditionError("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Rng replicate_rng(std::uint64_t seed, std::uint64_t b) {
    const std::uint64_t s = splitmix64(splitmix64(seed) ^ splitmix64(b + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

std::vector<FitResult> fit_count_models(const RegressionData& data) {
    const auto specs = count_model_grid();
    std::vector<FitResult> fits;
    fits.reserve(specs.size());
    std::vector<std::optional<Eigen::VectorXd>> init(kNumLinearPredictors + 1);
    for (const auto& spec : specs) {
        try {
            auto& start = init[static_cast<std::size_t>(spec.lp)];
            if (!start) start = fit_glm(data, {Family::Poisson, false, spec.lp}).beta;
            fits.push_back(fit_zt(data, spec, start));
        } catch (const Error& e) {
            FitResult failed;
            failed.spec = spec;
            failed.n = data.size();
            failed.converged = false;
            failed.loglik = -std::numeric_limits<double>::infinity();
            failed.bic = std::numeric_limits<double>::infinity();
            failed.message = e.what();
            fits.push_back(std::move(failed));
        }
    }
    return fits;
}

int select_by_bic(const std::vector<FitResult>& fits) {
    int best = -1;
    for (std::size_t l = 0; l < fits.size(); ++l) {
        if (!fits[l].converged || !std::isfinite(fits[l].bic)) continue;
        if (best < 0 || fits[l].bic < fits[static_cast<std::size_t>(best)].bic) best = static_cast<int>(l);
    }
    return best;
}

std::vector<double> BootstrapReplicates::column(std::size_t c) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

BootstrapReplicates run_bootstrap_replicates(const Dataset& ds, const std::vector<FitResult>& fits,
                                             const BootstrapConfig& cfg) {
    if (cfg.replicates < 1) throw DomainError("bootstrap needs at least one replicate");
    const auto grid = count_model_grid();
    if (fits.size() != grid.size()) throw PreconditionError("bootstrap needs the ten count-model fits");
    for (std::size_t l = 0; l < grid.size(); ++l)
        if (!(fits[l].spec == grid[l])) throw PreconditionError("fits are not in count-model grid order");

    const RegressionData observed = RegressionData::from(ds);
    const std::size_t n = observed.size();
    const BicWeights weights = bic_weights(fits);
    std::vector<double> cumulative(weights.weights.size());
    std::partial_sum(weights.weights.begin(), weights.weights.end(), cumulative.begin());

    // Fitted distribution of every study under every generating model.
    std::vector<std::vector<CountParams>> generating(fits.size());
    for (std::size_t l = 0; l < fits.size(); ++l) {
        if (weights.weights[l] <= 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) generating[l].push_back(fitted_params(fits[l], observed, i));
    }

    // Stratum membership is fixed by the observed covariates.
    std::vector<std::vector<std::size_t>> members(cfg.strata.size());
    for (std::size_t s = 0; s < cfg.strata.size(); ++s)
        for (std::size_t i = 0; i < n; ++i)
            if (cfg.strata[s].contains(observed.x1(static_cast<Eigen::Index>(i)),
                                       observed.x2(static_cast<Eigen::Index>(i))))
                members[s].push_back(i);

    BootstrapReplicates reps;
    reps.n_rates = cfg.subpopulations.size();
    reps.n_strata = cfg.strata.size();
    for (const auto& sp : cfg.subpopulations) reps.columns.push_back("rate " + sp.label);
    reps.columns.push_back("N total");
    reps.columns.push_back("M total");
    for (const auto& s : cfg.strata) reps.columns.push_back("M " + s.label);
    reps.rows.assign(cfg.replicates, std::vector<double>(reps.columns.size(), 0.0));
    reps.generating_model.assign(cfg.replicates, -1);
    reps.selected_model.assign(cfg.replicates, -1);
    std::vector<std::size_t> failed(cfg.replicates, 0);
    std::vector<std::size_t> discarded(cfg.replicates, 0);

    auto run_one = [&](std::size_t b) {
        Rng rng = replicate_rng(cfg.seed, b);
        RegressionData data = observed;
        for (;;) {
            const std::size_t l = draw_index(cumulative, rng);
            for (std::size_t i = 0; i < n; ++i) data.events[i] = sample_zt(fits[l].spec.family, generating[l][i], rng);
            const auto refits = fit_count_models(data);
            const int sel = select_by_bic(refits);
            if (sel < 0) {
                ++discarded[b];
                continue;
            }
            for (const auto& f : refits) failed[b] += f.converged ? 0 : 1;
            const FitResult& best = refits[static_cast<std::size_t>(sel)];

            auto& row = reps.rows[b];
            std::size_t c = 0;
            for (const auto& sp : cfg.subpopulations) row[c++] = predict_rate(best, sp.prop_women, sp.usa);
            const Eigen::VectorXd totals = ht_study_totals(data, best);
            const double total_N = totals.sum();
            row[c++] = total_N;
            row[c++] = total_N - static_cast<double>(n);
            for (const auto& m : members) {
                double s = 0.0;
                for (std::size_t i : m) s += totals(static_cast<Eigen::Index>(i)) - 1.0;
                row[c++] = s;
            }
            reps.generating_model[b] = static_cast<int>(l);
            reps.selected_model[b] = sel;
            return;
        }
    };

    const unsigned threads = std::min<std::size_t>(resolve_threads(cfg.threads), cfg.replicates);
    if (threads <= 1) {
        for (std::size_t b = 0; b < cfg.replicates; ++b) run_one(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < cfg.replicates; b = next++) run_one(b);
            });
    }

    for (std::size_t b = 0; b < cfg.replicates; ++b) {
        reps.failed_refits += failed[b];
        reps.discarded_replicates += discarded[b];
    }
    return reps;
}

BootstrapSummary summarize_bootstrap(const BootstrapReplicates& reps, const BootstrapConfig& cfg) {
    if (!(cfg.confidence_level > 0.0 && cfg.confidence_level < 1.0))
        throw DomainError("confidence level must lie in (0, 1)");
    if (reps.rows.empty()) throw PreconditionError("no bootstrap replicates");
    const double tail = 0.5 * (1.0 - cfg.confidence_level);
    auto interval = [&](std::size_t c, std::string label) {
        const auto col = reps.column(c);
        return Interval{std::move(label), quantile(col, tail), quantile(col, 1.0 - tail)};
    };

    BootstrapSummary s;
    std::size_t c = 0;
    for (std::size_t k = 0; k < reps.n_rates; ++k, ++c) s.rate_intervals.push_back(interval(c, cfg.subpopulations[k].label));
    s.N_interval_total = interval(c++, "N total");
    s.missing_interval_total = interval(c++, "M total");
    for (std::size_t k = 0; k < reps.n_strata; ++k, ++c) s.strata_intervals.push_back(interval(c, cfg.strata[k].label));

    auto& d = s.diagnostics;
    d.replicates = reps.rows.size();
    const std::size_t models = count_model_grid().size();
    d.generating_counts.assign(models, 0);
    d.selected_counts.assign(models, 0);
    for (std::size_t b = 0; b < reps.rows.size(); ++b) {
        if (reps.generating_model[b] >= 0) ++d.generating_counts[static_cast<std::size_t>(reps.generating_model[b])];
        if (reps.selected_model[b] >= 0) ++d.selected_counts[static_cast<std::size_t>(reps.selected_model[b])];
    }
    d.failed_refits = reps.failed_refits;
    d.discarded_replicates = reps.discarded_replicates;
    if (static_cast<double>(d.discarded_replicates) > 0.01 * static_cast<double>(d.replicates))
        d.warning = std::to_string(d.discarded_replicates) +
                    " replicates were redrawn because every refit failed (more than 1%)";
    return s;
}

BootstrapSummary run_bootstrap(const Dataset& ds, const std::vector<FitResult>& fits, const BootstrapConfig& cfg) {
    return summarize_bootstrap(run_bootstrap_replicates(ds, fits, cfg), cfg);
}

std::pair<double, double> wald_interval(const FitResult& fit, double confidence_level) {
    if (!(confidence_level > 0.0 && confidence_level < 1.0))
        throw DomainError("confidence level must lie in (0, 1)");
    if (fit.beta.size() != 1) throw PreconditionError("Wald rate interval needs an intercept-only fit");
    if (fit.se_beta.size() != 1 || !std::isfinite(fit.se_beta(0)))
        throw PreconditionError("fit has no standard error for the intercept");
    const boost::math::normal_distribution<double> normal;
    const double z = boost::math::quantile(normal, 1.0 - 0.5 * (1.0 - confidence_level));
    const double b = fit.beta(0);
    const double se = fit.se_beta(0);
    return {std::exp(b - z * se), std::exp(b + z * se)};
}

}  // namespace ztmeta
