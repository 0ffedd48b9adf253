#pragma once

#include <string>
#include <vector>

#include "ztmeta/dataset.hpp"
#include "ztmeta/ztreg.hpp"

namespace ztmeta {

struct StudyPopulation {
    std::string id;
    double total = 0.0;    ///< estimated studies sharing this study's profile, observed one included
    double missing = 0.0;  ///< total - 1
};

struct PopulationEstimate {
    std::vector<StudyPopulation> per_study;
    double total_N = 0.0;
    double total_M = 0.0;
    std::size_t n = 0;
};

enum class CountryFilter { USA, Other, All };

/// A sub-population of studies: country level and a proportion-of-women
/// interval [lower, upper), closed on the right when `upper_closed`.
struct StratumDef {
    std::string label;
    CountryFilter country = CountryFilter::All;
    double lower = 0.0;
    double upper = 1.0;
    bool upper_closed = true;

    bool contains(double prop_women, double usa) const;
};

struct StratumResult {
    std::string label;
    std::size_t observed = 0;
    double missing = 0.0;
};

/// Horvitz-Thompson sizes 1 / (1 - p(0)) for every study under `fit`.
Eigen::VectorXd ht_study_totals(const RegressionData& data, const FitResult& fit);

/// Throws for binomial or unconverged fits.
PopulationEstimate ht_estimate(const Dataset& ds, const FitResult& fit);

/// The eight country x proportion-of-women cells, quartile cut points 0.75,
/// 0.80 and 0.85.
std::vector<StratumDef> default_strata();

/// The eight cells followed by the two country totals, the four
/// proportion-of-women column totals and the overall total.
std::vector<StratumDef> default_strata_with_margins();

/// Sum of per-study missing counts in each stratum; strata must partition
/// the studies (PreconditionError otherwise).
std::vector<StratumResult> stratify(const PopulationEstimate& pe, const Dataset& ds,
                                    const std::vector<StratumDef>& strata);

/// Like `stratify` but strata are arbitrary filters and may overlap.
std::vector<StratumResult> summarize_strata(const PopulationEstimate& pe, const Dataset& ds,
                                            const std::vector<StratumDef>& strata);

/// Rounds half away from zero, the presentation rule for table cells.
long long round_count(double v);

}  // namespace ztmeta
