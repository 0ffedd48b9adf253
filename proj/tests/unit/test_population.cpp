#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "ztmeta/error.hpp"
#include "ztmeta/population.hpp"

using namespace ztmeta;

namespace {

const FitResult& best_fit() {
    static const FitResult f = fit_zt(test::reg_data(), ModelSpec{Family::Poisson, true, 1});
    return f;
}

}  // namespace

TEST_CASE("Horvitz-Thompson totals") {
    const auto pe = ht_estimate(test::full_data(), best_fit());
    CHECK(pe.n == 27);
    CHECK(pe.total_N - pe.total_M == doctest::Approx(27.0).epsilon(1e-12));
    CHECK(std::abs(pe.total_N - 134) <= 0.6);
    CHECK(std::abs(pe.total_M - 107) <= 0.6);
    const double rate = std::exp(best_fit().beta(0));
    for (std::size_t i = 0; i < pe.per_study.size(); ++i) {
        const double mu = test::full_data()[i].exposure * rate;
        CHECK(pe.per_study[i].total == doctest::Approx(1.0 / -std::expm1(-mu)).epsilon(1e-12));
        CHECK(pe.per_study[i].missing == doctest::Approx(pe.per_study[i].total - 1.0).epsilon(1e-12));
        CHECK(pe.per_study[i].total >= 1.0);
    }
}

TEST_CASE("Horvitz-Thompson under negative binomial uses its own p(0)") {
    const auto nb = fit_zt(test::reg_data(), ModelSpec{Family::NegBin, true, 1});
    const auto pe = ht_estimate(test::full_data(), nb);
    const auto pp = ht_estimate(test::full_data(), best_fit());
    CHECK(pe.total_N == doctest::Approx(pp.total_N).epsilon(1e-3));
}

TEST_CASE("strata partition the studies") {
    const auto pe = ht_estimate(test::full_data(), best_fit());
    const auto cells = stratify(pe, test::full_data(), default_strata());
    REQUIRE(cells.size() == 8);
    double total = 0.0;
    std::size_t observed = 0;
    for (const auto& c : cells) {
        total += c.missing;
        observed += c.observed;
    }
    CHECK(total == doctest::Approx(pe.total_M).epsilon(1e-12));
    CHECK(observed == 27);
    const long long want[] = {0, 0, 22, 8, 42, 23, 7, 5};
    for (int i = 0; i < 8; ++i) CHECK(round_count(cells[i].missing) == want[i]);
    CHECK(cells[1].observed == 0);
}

TEST_CASE("margins are sums of cells") {
    const auto pe = ht_estimate(test::full_data(), best_fit());
    const auto s = summarize_strata(pe, test::full_data(), default_strata_with_margins());
    REQUIRE(s.size() == 15);
    CHECK(s[8].label == "USA total");
    CHECK(s[8].missing == doctest::Approx(s[0].missing + s[1].missing + s[2].missing + s[3].missing));
    CHECK(s[9].missing == doctest::Approx(s[4].missing + s[5].missing + s[6].missing + s[7].missing));
    for (int c = 0; c < 4; ++c) CHECK(s[10 + c].missing == doctest::Approx(s[c].missing + s[4 + c].missing));
    CHECK(s[14].missing == doctest::Approx(pe.total_M));
}

TEST_CASE("stratum boundaries") {
    const auto strata = default_strata();
    CHECK(strata[0].contains(0.0, 1.0));
    CHECK_FALSE(strata[0].contains(0.75, 1.0));
    CHECK(strata[1].contains(0.75, 1.0));
    CHECK(strata[3].contains(1.0, 1.0));
    CHECK_FALSE(strata[3].contains(1.0, 0.0));
    CHECK(strata[7].contains(0.85, 0.0));
}

TEST_CASE("overlapping strata are rejected by stratify") {
    const auto pe = ht_estimate(test::full_data(), best_fit());
    CHECK_THROWS_AS(stratify(pe, test::full_data(), default_strata_with_margins()), PreconditionError);
}

TEST_CASE("rounding and preconditions") {
    CHECK(round_count(0.5) == 1);
    CHECK(round_count(22.4999) == 22);
    CHECK(round_count(-0.2) == 0);
    const auto bin = fit_zt(test::reg_data(), ModelSpec{Family::Binomial, true, 1});
    CHECK_THROWS_AS(ht_estimate(test::full_data(), bin), DomainError);
    FitResult bad = best_fit();
    bad.converged = false;
    CHECK_THROWS_AS(ht_estimate(test::full_data(), bad), PreconditionError);
}
