#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "ztmeta/dataset.hpp"
#include "ztmeta/error.hpp"

using namespace ztmeta;

namespace {

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

std::string header() { return std::string(kCsvHeader) + "\n"; }

}  // namespace

TEST_CASE("bundled data loads") {
    const auto& ds = test::raw_data();
    CHECK(ds.size() == 27);
    CHECK(ds.total_events() == 64);
    CHECK_FALSE(ds.complete());
    CHECK(ds[0].id == "1. Adams 2007");
    CHECK(ds[0].exposure == 77602);
    CHECK(*ds[0].prop_women == doctest::Approx(0.860));
    CHECK(ds[0].events == 21);
    int missing = 0, usa = 0;
    for (const auto& r : ds.records()) {
        missing += !r.prop_women;
        usa += r.usa() == 1.0;
    }
    CHECK(missing == 1);
    CHECK(usa == 10);
}

TEST_CASE("csv round trip is lossless") {
    const auto& ds = test::full_data();
    std::ostringstream out;
    write_csv(out, ds);
    const auto back = parse(out.str());
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back[i].id == ds[i].id);
        CHECK(back[i].exposure == ds[i].exposure);
        CHECK(back[i].prop_women == ds[i].prop_women);
        CHECK(back[i].country == ds[i].country);
        CHECK(back[i].events == ds[i].events);
    }
}

TEST_CASE("quoted fields survive a round trip") {
    const Dataset ds({{"a, \"b\"", 10.5, std::nullopt, "Hong Kong, China", 3}});
    std::ostringstream out;
    write_csv(out, ds);
    const auto back = parse(out.str());
    CHECK(back[0].id == "a, \"b\"");
    CHECK(back[0].country == "Hong Kong, China");
    CHECK_FALSE(back[0].prop_women.has_value());
}

TEST_CASE("parser tolerates BOM, CRLF and blank lines") {
    const auto ds = parse("\xEF\xBB\xBF" + std::string(kCsvHeader) + "\r\nx,100,0.5,USA,2\r\n\r\ny,50,,UK,0\r\n");
    CHECK(ds.size() == 2);
    CHECK(ds[1].events == 0);
}

TEST_CASE("parse errors name the line") {
    auto msg = [](const std::string& text) {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(msg("") .find("line 1") != std::string::npos);
    CHECK(msg("id,foo\n").find("line 1") != std::string::npos);
    CHECK(msg(header() + "x,100,0.5,USA\n").find("line 2") != std::string::npos);
    CHECK(msg(header() + "x,abc,0.5,USA,1\n").find("line 2") != std::string::npos);
    CHECK(msg(header() + "x,1,0.5,USA,1\ny,1,0.5,USA,1.5\n").find("line 3") != std::string::npos);
    CHECK(msg(header() + "\"x,1,0.5,USA,1\n").find("unterminated") != std::string::npos);
    CHECK(msg(header() + ",1,0.5,USA,1\n").find("empty study id") != std::string::npos);
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(parse(header()), ValidationError);
    CHECK_THROWS_AS(parse(header() + "x,0,0.5,USA,1\n"), ValidationError);
    CHECK_THROWS_AS(parse(header() + "x,-3,0.5,USA,1\n"), ValidationError);
    CHECK_THROWS_AS(parse(header() + "x,3,1.5,USA,1\n"), ValidationError);
    CHECK_THROWS_AS(parse(header() + "x,3,0.5,USA,-1\n"), ValidationError);
    CHECK_THROWS_AS(parse(header() + "x,3,0.5,USA,1\nx,4,0.5,UK,2\n"), ValidationError);
}

TEST_CASE("missing file") {
    try {
        load_csv("/nonexistent/input.csv");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/input.csv") != std::string::npos);
    }
}

TEST_CASE("imputation fills the one gap and searches 18 candidate models") {
    const auto [ds, imp] = impute_prop_women(test::raw_data());
    CHECK(ds.complete());
    CHECK(imp.candidates.size() == 18);
    CHECK(imp.imputed_ids == std::vector<std::string>{"24. Smith 2004"});
    CHECK(imp.imputed_value == doctest::Approx(0.823).epsilon(0.005));
    const std::set<std::string> terms(imp.selected_terms.begin(), imp.selected_terms.end());
    CHECK(terms == std::set<std::string>{"person_years", "country", "person_years:country"});
    for (const auto& c : imp.candidates) CHECK(c.bic >= imp.bic);

    // Independent fit of the selected model through the normal equations.
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < test::raw_data().size(); ++i)
        if (test::raw_data()[i].prop_women) rows.push_back(i);
    Eigen::MatrixXd X(rows.size(), 4);
    Eigen::VectorXd y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& s = test::raw_data()[rows[r]];
        X.row(r) << 1.0, s.exposure, s.usa(), s.exposure * s.usa();
        y(r) = *s.prop_women;
    }
    const Eigen::VectorXd b = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    const double e = 354, u = 1;
    CHECK(imp.imputed_value == doctest::Approx(b(0) + b(1) * e + b(2) * u + b(3) * e * u).epsilon(1e-6));
}

TEST_CASE("imputation of complete data is a precondition error") {
    CHECK_THROWS_AS(impute_prop_women(test::full_data()), PreconditionError);
}

TEST_CASE("imputation leaves observed values untouched") {
    const auto& raw = test::raw_data();
    const auto& full = test::full_data();
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i].prop_women) CHECK(*full[i].prop_women == *raw[i].prop_women);
}
