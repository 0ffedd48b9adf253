#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ztmeta/dataset.hpp"
#include "ztmeta/ztreg.hpp"

namespace test {

inline const ztmeta::Dataset& raw_data() {
    static const ztmeta::Dataset ds = ztmeta::load_csv(ZTMETA_DATA_FILE);
    return ds;
}

inline const ztmeta::Dataset& full_data() {
    static const ztmeta::Dataset ds = ztmeta::impute_prop_women(raw_data()).first;
    return ds;
}

inline const ztmeta::RegressionData& reg_data() {
    static const ztmeta::RegressionData d = ztmeta::RegressionData::from(full_data());
    return d;
}

// Small complete dataset built in code.
inline ztmeta::Dataset toy(const std::vector<double>& exposure, const std::vector<long>& events) {
    std::vector<ztmeta::StudyRecord> recs;
    for (std::size_t i = 0; i < exposure.size(); ++i)
        recs.push_back({"s" + std::to_string(i), exposure[i], 0.70 + 0.03 * static_cast<double>(i % 6),
                        i % 3 == 0 ? "USA" : "Denmark", events[i]});
    return ztmeta::Dataset(recs);
}

// Poisson log pmf straight from the definition.
inline double poisson_lpmf(long y, double mu) { return y * std::log(mu) - mu - std::lgamma(y + 1.0); }

inline double negbin_lpmf(long y, double mu, double a) {
    return std::lgamma(y + a) - std::lgamma(a) - std::lgamma(y + 1.0) + a * std::log(a / (a + mu)) +
           y * std::log(mu / (a + mu));
}

inline double binomial_lpmf(long y, long n, double p) {
    return std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0) + y * std::log(p) +
           (n - y) * std::log1p(-p);
}

}  // namespace test
