#include "ztmeta/newton.hpp"

#include <algorithm>
#include <cmath>

namespace ztmeta {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
// Below this free-gradient norm a failed line search is round-off, not a failure.
constexpr double kRoundoffGradient = 1e-6;

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Eigen::MatrixXd finite_difference_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x) {
    const auto p = x.size();
    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd gp(p), gm(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double step = 1e-5 * std::max(1.0, std::abs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        f(xp, &gp);
        f(xm, &gm);
        h.col(j) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

NewtonResult maximize(const ObjectiveFn& f, const HessianFn& hessian, Eigen::VectorXd x0,
                      const NewtonOptions& opts) {
    const auto p = x0.size();
    const bool bounded = opts.upper_bounds.size() == p;
    if (bounded) x0 = x0.cwiseMin(opts.upper_bounds);

    auto hess = [&](const Eigen::VectorXd& x) {
        return hessian ? hessian(x) : finite_difference_hessian(f, x);
    };

    NewtonResult res;
    res.x = std::move(x0);
    res.gradient.resize(p);
    res.value = f(res.x, &res.gradient);
    res.at_bound.assign(static_cast<std::size_t>(p), false);
    if (!std::isfinite(res.value) || !finite(res.gradient)) {
        res.hessian = Eigen::MatrixXd::Zero(p, p);
        return res;
    }

    std::vector<Eigen::Index> free;
    auto update_free = [&]() {
        free.clear();
        for (Eigen::Index j = 0; j < p; ++j) {
            const bool pinned = bounded && res.x(j) >= opts.upper_bounds(j) && res.gradient(j) >= 0.0;
            res.at_bound[static_cast<std::size_t>(j)] = pinned;
            if (!pinned) free.push_back(j);
        }
    };
    auto free_grad_norm = [&]() {
        double m = 0.0;
        for (auto j : free) m = std::max(m, std::abs(res.gradient(j)));
        return m;
    };

    for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
        update_free();
        const double gnorm = free_grad_norm();
        if (gnorm < opts.gradient_tolerance) {
            res.converged = true;
            break;
        }

        const Eigen::MatrixXd h_full = hess(res.x);
        const auto q = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd neg_h(q, q);
        Eigen::VectorXd g(q);
        for (Eigen::Index a = 0; a < q; ++a) {
            g(a) = res.gradient(free[a]);
            for (Eigen::Index b = 0; b < q; ++b) neg_h(a, b) = -h_full(free[a], free[b]);
        }

        Eigen::VectorXd dir;
        double shift = 0.0;
        const double scale = std::max(1e-12, neg_h.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd m = neg_h;
            m.diagonal().array() += shift;
            Eigen::LLT<Eigen::MatrixXd> llt(m);
            if (llt.info() == Eigen::Success) {
                dir = llt.solve(g);
                if (finite(dir)) break;
            }
            dir.resize(0);
            shift = (shift == 0.0) ? 1e-10 * scale : shift * 10.0;
        }
        if (dir.size() == 0) dir = g / scale;

        Eigen::VectorXd full_dir = Eigen::VectorXd::Zero(p);
        for (Eigen::Index a = 0; a < q; ++a) full_dir(free[a]) = dir(a);

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new, g_new(p);
        double f_new = 0.0;
        for (int bt = 0; bt < kMaxBacktracks; ++bt, t *= 0.5) {
            x_new = res.x + t * full_dir;
            if (bounded) x_new = x_new.cwiseMin(opts.upper_bounds);
            f_new = f(x_new, &g_new);
            if (std::isfinite(f_new) && finite(g_new) &&
                f_new >= res.value + kArmijo * res.gradient.dot(x_new - res.x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.converged = gnorm < kRoundoffGradient;
            break;
        }
        const double step = (x_new - res.x).cwiseAbs().maxCoeff();
        res.x = std::move(x_new);
        res.value = f_new;
        res.gradient = g_new;
        if (step < opts.step_tolerance) {
            update_free();
            res.converged = free_grad_norm() < kRoundoffGradient;
            break;
        }
    }
    if (res.iterations == opts.max_iterations) {
        update_free();
        res.converged = free_grad_norm() < opts.gradient_tolerance;
    }
    res.hessian = hess(res.x);
    return res;
}

}  // namespace ztmeta
