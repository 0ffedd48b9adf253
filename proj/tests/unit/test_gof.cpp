#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "ztmeta/distributions.hpp"
#include "ztmeta/error.hpp"
#include "ztmeta/gof.hpp"

using namespace ztmeta;

namespace {

const FitResult& best_fit() {
    static const FitResult f = fit_zt(test::reg_data(), ModelSpec{Family::Poisson, true, 1});
    return f;
}

}  // namespace

TEST_CASE("fitted frequencies on the bundled data") {
    const auto t = fitted_frequencies(test::reg_data(), best_fit(), 4);
    REQUIRE(t.bins.size() == 4);
    CHECK(t.bins[3].label == "4+");
    const double want[] = {18.3, 4.5, 1.7, 2.5};
    const double obs[] = {18, 3, 3, 3};
    double fitted_total = 0.0;
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(t.bins[i].fitted - want[i]) <= 0.1);
        CHECK(t.bins[i].observed == obs[i]);
        fitted_total += t.bins[i].fitted;
    }
    CHECK(fitted_total == doctest::Approx(27.0).epsilon(1e-12));
}

TEST_CASE("fitted frequencies are sums of truncated probabilities") {
    const auto& d = test::reg_data();
    const double rate = std::exp(best_fit().beta(0));
    double f2 = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double mu = d.exposure(i) * rate;
        f2 += std::exp(test::poisson_lpmf(2, mu)) / -std::expm1(-mu);
    }
    const auto t = fitted_frequencies(d, best_fit(), 6);
    CHECK(t.bins.size() == 6);
    CHECK(t.bins[1].fitted == doctest::Approx(f2).epsilon(1e-12));
}

TEST_CASE("chi-square statistic, dof and p-value") {
    const auto t = fitted_frequencies(test::reg_data(), best_fit(), 4);
    const auto chi = chi_square_test(t, 1);
    double stat = 0.0;
    for (const auto& b : t.bins) stat += (b.observed - b.fitted) * (b.observed - b.fitted) / b.fitted;
    CHECK(chi.statistic == doctest::Approx(stat).epsilon(1e-14));
    CHECK(chi.statistic == doctest::Approx(1.59).epsilon(0.05 / 1.59));
    CHECK(chi.dof == 2);
    // Two degrees of freedom: survival function is exp(-x/2).
    CHECK(chi.p_value == doctest::Approx(std::exp(-stat / 2)).epsilon(1e-12));
}

TEST_CASE("chi-square survival function") {
    CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));
    CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(11.070497693516351, 5) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK_THROWS_AS(chi_square_sf(1.0, 0), DomainError);
}

TEST_CASE("gof preconditions") {
    CHECK_THROWS_AS(fitted_frequencies(test::reg_data(), best_fit(), 1), DomainError);
    const auto glm = fit_glm(test::reg_data(), ModelSpec{Family::Poisson, false, 1});
    CHECK_THROWS_AS(fitted_frequencies(test::reg_data(), glm, 4), PreconditionError);
    const auto t = fitted_frequencies(test::reg_data(), best_fit(), 2);
    CHECK_THROWS_AS(chi_square_test(t, 1), DomainError);  // zero degrees of freedom
}
