#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>

namespace ztmeta {

struct NewtonOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;  ///< max-norm of the free gradient
    double step_tolerance = 1e-10;     ///< max-norm of an accepted step
    /// Optional per-coordinate upper bounds; empty means unbounded.
    Eigen::VectorXd upper_bounds;
};

struct NewtonResult {
    Eigen::VectorXd x;
    double value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
    int iterations = 0;
    bool converged = false;
    std::vector<bool> at_bound;
};

/// Objective value; fills `grad` when it is non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;

/// Central finite differences of an analytic gradient, symmetrized.
Eigen::MatrixXd finite_difference_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x);

/// Maximizes `f` by damped Newton steps with backtracking.
///
/// Coordinates sitting on their upper bound with an outward gradient are
/// held fixed for the step. When `hessian` is empty the Hessian is obtained
/// by differencing the gradient. If the negated Hessian is not positive
/// definite a Levenberg shift is added until it is.
NewtonResult maximize(const ObjectiveFn& f, const HessianFn& hessian, Eigen::VectorXd x0,
                      const NewtonOptions& opts = {});

}  // namespace ztmeta
