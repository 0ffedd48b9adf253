#include "doctest.h"

#include <sstream>

#include "support.hpp"
#include "ztmeta/report.hpp"

using namespace ztmeta;

TEST_CASE("full report without bootstrap") {
    AnalysisOptions opts;
    opts.run_bootstrap = false;
    const Json r = full_report(test::raw_data(), opts);
    CHECK(r["schema_version"] == kReportSchemaVersion);
    CHECK(r["n_studies"] == 27);
    CHECK(r["best_model"] == "zt-poisson-lp1");
    CHECK(r["zt_grid"].size() == 15);
    CHECK(r["bic_weights"].size() == 10);
    CHECK(r["gof"]["dof"] == 2);
    CHECK(r["total_N"] == 134);
    CHECK(r["total_missing"] == 107);
    CHECK(r["imputation"]["imputed"][0]["id"] == "24. Smith 2004");
    CHECK(r["naive_linear"].get<double>() * 1e5 == doctest::Approx(44.51).epsilon(1e-3));
    CHECK_FALSE(render_text(r).empty());
    const auto tables = render_csv_tables(r);
    CHECK(tables.size() >= 3);
}

TEST_CASE("stage errors carry the stage name") {
    const Dataset zero({{"a", 100, 0.5, "USA", 0}, {"b", 200, 0.6, "UK", 2}});
    AnalysisOptions opts;
    opts.run_bootstrap = false;
    try {
        full_report(zero, opts);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK_FALSE(e.stage().empty());
        CHECK(std::string(e.what()).front() == '[');
    }
}

TEST_CASE("stage reports") {
    CHECK(fit_report(test::raw_data(), ModelSpec{Family::Poisson, false, 3})["fit"]["model"] == "poisson-lp3");
    CHECK(gof_report(test::raw_data(), 4, std::nullopt)["gof"]["model"] == "zt-poisson-lp1");
    const Json pop = population_report(test::raw_data(), default_strata(), std::nullopt);
    CHECK(pop["population"]["total_N_rounded"] == 134);
}
