#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "ztmeta/bootstrap.hpp"
#include "ztmeta/error.hpp"

using namespace ztmeta;

namespace {

const std::vector<FitResult>& fits() {
    static const std::vector<FitResult> f = fit_count_models(test::reg_data());
    return f;
}

const BootstrapReplicates& sample_run() {
    static const BootstrapReplicates r = [] {
        BootstrapConfig cfg;
        cfg.replicates = 2000;
        cfg.seed = 4242;
        return run_bootstrap_replicates(test::full_data(), fits(), cfg);
    }();
    return r;
}

}  // namespace

TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 5.0);
    CHECK(quantile(v, 0.5) == 3.0);
    CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
    CHECK(quantile({7.0}, 0.3) == 7.0);
    double prev = -1e300;
    for (double p = 0.0; p <= 1.0; p += 0.01) {
        const double q = quantile(v, p);
        CHECK(q >= prev);
        prev = q;
    }
    CHECK_THROWS_AS(quantile({}, 0.5), PreconditionError);
    CHECK_THROWS_AS(quantile(v, 1.5), DomainError);
}

TEST_CASE("BIC weights") {
    const auto w = bic_weights(fits());
    double s = 0.0;
    for (double x : w.weights) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w.excluded.empty());
    for (std::size_t i = 0; i < fits().size(); ++i)
        CHECK(w.weights[i] / w.weights[0] == doctest::Approx(std::exp(-(fits()[i].bic - fits()[0].bic) / 2)));
    const double want[] = {0.4813, 0.1251, 0.1863, 0.0362, 0.0097, 0.0926, 0.0241, 0.0359, 0.0070, 0.0019};
    for (int i = 0; i < 10; ++i) CHECK(std::abs(w.weights[i] - want[i]) <= 0.01);

    auto broken = fits();
    broken[2].converged = false;
    const auto wb = bic_weights(broken);
    CHECK(wb.weights[2] == 0.0);
    CHECK(wb.excluded == std::vector<std::size_t>{2});
}

TEST_CASE("selection ties go to the earlier model") {
    auto f = fits();
    f[3].bic = f[0].bic;
    CHECK(select_by_bic(f) == 0);
    f[0].converged = false;
    CHECK(select_by_bic(f) == 3);
    for (auto& x : f) x.converged = false;
    CHECK(select_by_bic(f) == -1);
}

TEST_CASE("replicate layout and invariants") {
    const auto& r = sample_run();
    REQUIRE(r.rows.size() == 2000);
    CHECK(r.n_rates == 6);
    CHECK(r.n_strata == 15);
    CHECK(r.columns.size() == 6 + 2 + 15);
    for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < r.n_rates; ++c) CHECK(row[c] > 0.0);
        const double N = row[6], M = row[7];
        CHECK(N - M == doctest::Approx(27.0).epsilon(1e-12));
        CHECK(M >= 0.0);
        double cells = 0.0;
        for (int c = 0; c < 8; ++c) cells += row[8 + c];
        CHECK(cells == doctest::Approx(M).epsilon(1e-9));
        CHECK(row[8 + 14] == doctest::Approx(M).epsilon(1e-9));
        CHECK(row[8 + 1] == 0.0);  // no observed studies in that cell
    }
}

TEST_CASE("generating models follow the BIC weights") {
    const auto& r = sample_run();
    const auto w = bic_weights(fits());
    const double B = static_cast<double>(r.rows.size());
    for (std::size_t l = 0; l < w.weights.size(); ++l) {
        const double freq = static_cast<double>(std::count(r.generating_model.begin(), r.generating_model.end(),
                                                           static_cast<int>(l))) / B;
        const double se = std::sqrt(w.weights[l] * (1 - w.weights[l]) / B);
        CAPTURE(l);
        CHECK(std::abs(freq - w.weights[l]) <= 3 * se + 1e-12);
    }
}

TEST_CASE("intervals are ordered and cover the point estimates") {
    BootstrapConfig cfg;
    cfg.replicates = 2000;
    cfg.seed = 4242;
    const auto s = summarize_bootstrap(sample_run(), cfg);
    for (const auto& iv : s.rate_intervals) {
        CHECK(iv.lower <= iv.upper);
        CHECK(iv.lower < 31.8e-5);
        CHECK(iv.upper > 31.8e-5);
    }
    CHECK(s.N_interval_total.lower < 134.0);
    CHECK(s.N_interval_total.upper > 134.0);
    CHECK(s.N_interval_total.lower - s.missing_interval_total.lower == doctest::Approx(27.0));
    for (const auto& iv : s.strata_intervals) CHECK(iv.lower <= iv.upper);

    cfg.confidence_level = 0.5;
    const auto narrow = summarize_bootstrap(sample_run(), cfg);
    CHECK(narrow.N_interval_total.lower >= s.N_interval_total.lower);
    CHECK(narrow.N_interval_total.upper <= s.N_interval_total.upper);
}

TEST_CASE("seeded runs are reproducible and thread-count independent") {
    BootstrapConfig cfg;
    cfg.replicates = 150;
    cfg.seed = 8;
    cfg.threads = 1;
    const auto a = run_bootstrap_replicates(test::full_data(), fits(), cfg);
    cfg.threads = 3;
    const auto b = run_bootstrap_replicates(test::full_data(), fits(), cfg);
    CHECK(a.rows == b.rows);
    CHECK(a.selected_model == b.selected_model);
    cfg.seed = 9;
    const auto c = run_bootstrap_replicates(test::full_data(), fits(), cfg);
    CHECK(a.rows != c.rows);
}

TEST_CASE("replicate streams depend only on seed and index") {
    auto a = replicate_rng(1, 10), b = replicate_rng(1, 10), c = replicate_rng(1, 11), d = replicate_rng(2, 10);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("Wald interval") {
    const auto& f = fits()[0];
    const auto [lo, hi] = wald_interval(f, 0.95);
    const double z = 1.959963984540054;
    CHECK(lo == doctest::Approx(std::exp(f.beta(0) - z * f.se_beta(0))).epsilon(1e-12));
    CHECK(hi == doctest::Approx(std::exp(f.beta(0) + z * f.se_beta(0))).epsilon(1e-12));
    CHECK(std::abs(lo * 1e5 - 23.3) <= 0.2);
    CHECK(std::abs(hi * 1e5 - 43.2) <= 0.2);
    CHECK_THROWS_AS(wald_interval(f, 1.0), DomainError);
    CHECK_THROWS_AS(wald_interval(fits()[1], 0.95), PreconditionError);
}

TEST_CASE("bootstrap argument checks") {
    BootstrapConfig cfg;
    cfg.replicates = 0;
    CHECK_THROWS_AS(run_bootstrap_replicates(test::full_data(), fits(), cfg), DomainError);
    cfg.replicates = 10;
    std::vector<FitResult> short_grid(fits().begin(), fits().begin() + 5);
    CHECK_THROWS_AS(run_bootstrap_replicates(test::full_data(), short_grid, cfg), PreconditionError);
}
