#pragma once

#include <string>
#include <vector>

#include "ztmeta/ztreg.hpp"

namespace ztmeta {

struct FrequencyBin {
    std::string label;
    double observed = 0.0;
    double fitted = 0.0;
};

/// Observed and fitted count frequencies for y = 1 .. threshold-1 plus a
/// pooled "threshold+" bin.
struct FrequencyTable {
    std::vector<FrequencyBin> bins;
    int tail_threshold = 0;
};

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// The tail bin's fitted value is n minus the head bins, so the fitted
/// column sums to n exactly.
FrequencyTable fitted_frequencies(const RegressionData& data, const FitResult& fit, int tail_threshold);

/// Pearson statistic over the table's bins; dof = bins - 1 - n_params.
ChiSquareResult chi_square_test(const FrequencyTable& table, int n_params);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, int dof);

}  // namespace ztmeta
