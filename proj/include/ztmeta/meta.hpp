#pragma once

#include "ztmeta/dataset.hpp"

namespace ztmeta {

enum class PoolingMethod { InverseVarianceLinear, InverseVarianceLog };

struct PooledEstimate {
    double rate = 0.0;  ///< events per person-year
    PoolingMethod method = PoolingMethod::InverseVarianceLinear;
};

/// sum(y) / sum(e): the Poisson MLE of a common rate, equivalently the
/// inverse-variance weighted mean of the study rates y/e.
PooledEstimate pooled_rate_linear(const Dataset& ds);

/// exp(sum(y log(y/e)) / sum(y)): inverse-variance pooling of log rates.
/// Every study needs y >= 1 (DomainError otherwise).
PooledEstimate pooled_rate_log(const Dataset& ds);

}  // namespace ztmeta
