#include "ztmeta/meta.hpp"

#include <cmath>

#include "ztmeta/error.hpp"

namespace ztmeta {

PooledEstimate pooled_rate_linear(const Dataset& ds) {
    if (ds.size() == 0) throw PreconditionError("pooled rate of an empty dataset");
    const double events = static_cast<double>(ds.total_events());
    if (!(events > 0.0)) throw DomainError("pooled rate needs at least one event");
    return {events / ds.total_exposure(), PoolingMethod::InverseVarianceLinear};
}

PooledEstimate pooled_rate_log(const Dataset& ds) {
    if (ds.size() == 0) throw PreconditionError("pooled rate of an empty dataset");
    double num = 0.0;
    double den = 0.0;
    for (const auto& r : ds.records()) {
        if (r.events < 1)
            throw DomainError("log-scale pooling needs y >= 1 in every study ('" + r.id + "' has 0)");
        const double y = static_cast<double>(r.events);
        num += y * std::log(y / r.exposure);
        den += y;
    }
    return {std::exp(num / den), PoolingMethod::InverseVarianceLog};
}

}  // namespace ztmeta
