#include "doctest.h"

#include <cmath>

#include "ztmeta/newton.hpp"

using namespace ztmeta;

namespace {

// Negated Rosenbrock: maximum 0 at (1, 1).
double rosen(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1 - x(0), b = x(1) - x(0) * x(0);
    if (g) {
        g->resize(2);
        (*g)(0) = 2 * a + 400 * x(0) * b;
        (*g)(1) = -200 * b;
    }
    return -(a * a + 100 * b * b);
}

}  // namespace

TEST_CASE("maximizes a concave quadratic in one step") {
    Eigen::MatrixXd A(2, 2);
    A << 3, 1, 1, 2;
    Eigen::VectorXd c(2);
    c << 1, -2;
    auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = c - A * x;
        return c.dot(x) - 0.5 * x.dot(A * x);
    };
    auto h = [&](const Eigen::VectorXd&) -> Eigen::MatrixXd { return -A; };
    const auto r = maximize(f, h, Eigen::VectorXd::Zero(2));
    const Eigen::VectorXd want = A.ldlt().solve(c);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
    CHECK((r.x - want).norm() < 1e-12);
}

TEST_CASE("handles a non-concave start with the differenced hessian") {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto r = maximize(rosen, {}, x0);
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("finite-difference hessian of a quadratic is exact") {
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) {
            g->resize(2);
            (*g)(0) = -2 * x(0) + x(1);
            (*g)(1) = x(0) - 4 * x(1);
        }
        return -x(0) * x(0) + x(0) * x(1) - 2 * x(1) * x(1);
    };
    const auto H = finite_difference_hessian(f, Eigen::Vector2d(0.3, -7.0));
    CHECK(H(0, 0) == doctest::Approx(-2.0));
    CHECK(H(0, 1) == doctest::Approx(1.0));
    CHECK(H(1, 0) == doctest::Approx(1.0));
    CHECK(H(1, 1) == doctest::Approx(-4.0));
}

TEST_CASE("upper bound is respected and reported") {
    // Increasing in x(1) everywhere, concave in x(0).
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) {
            g->resize(2);
            (*g)(0) = -2 * (x(0) - 3);
            (*g)(1) = std::exp(-x(1));
        }
        return -(x(0) - 3) * (x(0) - 3) - std::exp(-x(1));
    };
    NewtonOptions opts;
    opts.upper_bounds = Eigen::Vector2d(1e9, 5.0);
    const auto r = maximize(f, {}, Eigen::Vector2d(0.0, 0.0), opts);
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(3.0));
    CHECK(r.x(1) == doctest::Approx(5.0));
    REQUIRE(r.at_bound.size() == 2);
    CHECK_FALSE(r.at_bound[0]);
    CHECK(r.at_bound[1]);
}

TEST_CASE("unbounded objective does not report convergence") {
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Constant(1, 1.0);
        return x(0);
    };
    NewtonOptions opts;
    opts.max_iterations = 50;
    const auto r = maximize(f, {}, Eigen::VectorXd::Zero(1), opts);
    CHECK_FALSE(r.converged);
}
