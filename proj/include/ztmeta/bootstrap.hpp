#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ztmeta/distributions.hpp"
#include "ztmeta/population.hpp"
#include "ztmeta/ztreg.hpp"

namespace ztmeta {

/// Normalized exp(-dBIC/2) weights aligned with the fits they were computed
/// from. Unconverged fits get weight 0 and are listed in `excluded`.
struct BicWeights {
    std::vector<double> weights;
    std::vector<std::size_t> excluded;
};

BicWeights bic_weights(const std::vector<FitResult>& fits);

/// Covariate point at which bootstrap rates are recorded.
struct SubPopulation {
    std::string label;
    double prop_women = 0.0;
    double usa = 0.0;
};

/// USA/Others crossed with proportion of women 0.75, 0.80 and 0.85, in the
/// order (0.75, USA), (0.75, Others), (0.80, USA), ...
std::vector<SubPopulation> default_subpopulations();

struct BootstrapConfig {
    std::size_t replicates = 25000;
    std::uint64_t seed = 20130527;
    std::vector<SubPopulation> subpopulations = default_subpopulations();
    std::vector<StratumDef> strata = default_strata_with_margins();
    double confidence_level = 0.95;
    /// Worker threads; 0 picks ZTMETA_THREADS or the hardware concurrency.
    unsigned threads = 0;
};

struct Interval {
    std::string label;
    double lower = 0.0;
    double upper = 0.0;
};

struct BootstrapDiagnostics {
    std::size_t replicates = 0;
    std::vector<std::size_t> generating_counts;  ///< how often each grid model generated data
    std::vector<std::size_t> selected_counts;    ///< how often each grid model won the refit
    std::size_t failed_refits = 0;
    std::size_t discarded_replicates = 0;
    std::string warning;
};

/// Raw statistics, one row per replicate. Column layout: subpopulation
/// rates, then N*, then M*, then one missing-study sum per stratum.
struct BootstrapReplicates {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> generating_model;
    std::vector<int> selected_model;
    std::size_t n_rates = 0;
    std::size_t n_strata = 0;
    std::size_t failed_refits = 0;
    std::size_t discarded_replicates = 0;

    std::vector<double> column(std::size_t c) const;
};

struct BootstrapSummary {
    std::vector<Interval> rate_intervals;
    Interval N_interval_total;
    Interval missing_interval_total;
    std::vector<Interval> strata_intervals;
    BootstrapDiagnostics diagnostics;
};

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

/// Stream for replicate `b`, a function of (seed, b) only.
Rng replicate_rng(std::uint64_t seed, std::uint64_t b);

/// The ten zero-truncated count models refitted to `data`; each model is
/// started from the untruncated Poisson fit of its linear predictor.
std::vector<FitResult> fit_count_models(const RegressionData& data);

/// Index of the lowest-BIC converged fit; ties go to the earlier grid entry.
/// Returns -1 when every fit failed.
int select_by_bic(const std::vector<FitResult>& fits);

/// Runs the model-averaged parametric bootstrap. `fits` are the ten count
/// models of `count_model_grid()` fitted to the observed data.
BootstrapReplicates run_bootstrap_replicates(const Dataset& ds, const std::vector<FitResult>& fits,
                                             const BootstrapConfig& cfg);

BootstrapSummary summarize_bootstrap(const BootstrapReplicates& reps, const BootstrapConfig& cfg);

BootstrapSummary run_bootstrap(const Dataset& ds, const std::vector<FitResult>& fits, const BootstrapConfig& cfg);

/// exp(beta0 -/+ z se(beta0)) for an intercept-only fit.
std::pair<double, double> wald_interval(const FitResult& fit, double confidence_level);

}  // namespace ztmeta
