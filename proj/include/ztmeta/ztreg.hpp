#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ztmeta/dataset.hpp"
#include "ztmeta/distributions.hpp"

namespace ztmeta {

/// Index 1..5 of the candidate linear predictors:
///   1: (1)   2: (1, x1)   3: (1, x2)   4: (1, x1, x2)   5: (1, x1, x2, x1*x2)
/// where x1 is the proportion of women and x2 the USA indicator.
inline constexpr int kNumLinearPredictors = 5;

int lp_size(int lp);
Eigen::VectorXd design_row(int lp, double x1, double x2);

struct ModelSpec {
    Family family = Family::Poisson;
    bool truncated = true;
    int lp = 1;

    std::string label() const;
    bool operator==(const ModelSpec&) const = default;
};

/// The ten zero-truncated count models: Poisson lp1..5, then NegBin lp1..5.
std::vector<ModelSpec> count_model_grid();
/// The count grid followed by the zero-truncated binomial lp1..5.
std::vector<ModelSpec> full_truncated_grid();
std::vector<ModelSpec> untruncated_grid(Family family);

/// NegBin dispersion is optimized on the log scale and capped here.
inline const double kLogDispersionCap = std::log(1e8);

struct FitResult {
    ModelSpec spec;
    Eigen::VectorXd beta;
    std::optional<double> alpha;
    double loglik = 0.0;
    int k = 0;
    double bic = 0.0;
    bool converged = false;
    bool dispersion_at_bound = false;
    Eigen::VectorXd se_beta;
    int iterations = 0;
    std::size_t n = 0;
    std::string message;
};

/// Columnar view of a complete dataset, the only input the fitters read.
struct RegressionData {
    Eigen::VectorXd exposure;
    Eigen::VectorXd x1;
    Eigen::VectorXd x2;
    std::vector<std::int64_t> events;

    static RegressionData from(const Dataset& ds);
    std::size_t size() const { return events.size(); }
};

/// Log-likelihood of one model over theta = (beta, log alpha [NegBin only]).
class LogLikelihood {
public:
    LogLikelihood(const RegressionData& data, const ModelSpec& spec);

    std::size_t n_params() const { return static_cast<std::size_t>(design_.cols()) + (has_alpha_ ? 1 : 0); }
    const Eigen::MatrixXd& design() const { return design_; }

    double value(const Eigen::VectorXd& theta) const { return evaluate(theta, nullptr); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
    /// Analytic for Poisson and Binomial, differenced gradient for NegBin.
    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;
    double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const;

private:
    const RegressionData& data_;
    ModelSpec spec_;
    Eigen::MatrixXd design_;
    bool has_alpha_ = false;
};

FitResult fit_glm(const RegressionData& data, const ModelSpec& spec);
FitResult fit_glm(const Dataset& ds, const ModelSpec& spec);

/// Maximum likelihood for a zero-truncated model. Starts from `init_beta`
/// when given, otherwise from the matching untruncated fit.
FitResult fit_zt(const RegressionData& data, const ModelSpec& spec,
                 const std::optional<Eigen::VectorXd>& init_beta = std::nullopt);
FitResult fit_zt(const Dataset& ds, const ModelSpec& spec);

FitResult fit_model(const RegressionData& data, const ModelSpec& spec);

/// Fits every spec; a failure is recorded in its FitResult, never thrown.
std::vector<FitResult> fit_grid(const RegressionData& data, const std::vector<ModelSpec>& specs);
std::vector<FitResult> fit_grid(const Dataset& ds, const std::vector<ModelSpec>& specs);

/// Rate per person-year at covariates (x1, x2): exp(h(x)'beta), or the
/// logistic inverse for binomial fits.
double predict_rate(const FitResult& fit, double x1, double x2);

double bic_from(double loglik, int k, std::size_t n);

/// Distribution parameters a fit assigns to study i of `data`.
CountParams fitted_params(const FitResult& fit, const RegressionData& data, std::size_t i);

}  // namespace ztmeta
