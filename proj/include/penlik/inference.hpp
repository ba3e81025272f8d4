#pragma once

#include <Eigen/Dense>
#include <vector>

#include "penlik/model.hpp"
#include "penlik/optimizer.hpp"
#include "penlik/penalty.hpp"

namespace penlik {

struct CovarianceEstimate {
    std::vector<int> active_indices;     // coordinates the estimate refers to
    Eigen::MatrixXd matrix;              // s x s estimated covariance of beta-hat
    Eigen::VectorXd standard_errors;     // sqrt of the diagonal
    double sigma2_hat = 0.0;             // RSS / (n - effective_df)
    double bracket_condition = 0.0;      // condition number of the bracket matrix
};

struct LrTestResult {
    double statistic = 0.0;  // 2 * (unconstrained - constrained), clamped at 0
    int df = 0;              // number of constraint rows
    double p_value = 1.0;
    double unconstrained_objective = 0.0;
    double constrained_objective = 0.0;
    std::vector<int> unconstrained_active;
    std::vector<int> constrained_active;
    // Set when the statistic was more negative than round-off tolerance:
    // the two local maximizers are inconsistent and the test is unreliable.
    bool local_optimum_warning = false;
};

struct AsymptoticSummary {
    std::vector<int> active_indices;
    Eigen::VectorXd sigma_lambda;    // diag entries p''_lambda(|beta_j|)
    Eigen::VectorXd bias_vector;     // p'_lambda(|beta_j|) * sgn(beta_j)
    Eigen::MatrixXd asymptotic_cov;  // (I + S)^-1 I (I + S)^-1, S = diag(sigma_lambda)
};

// Sandwich covariance of the active-set coefficients:
//   Sigma-hat = n * {H - n S}^-1 cov{scores} {H - n S}^-1
// where H is the log-likelihood Hessian on the active set, S the diagonal of
// penalty second derivatives, and cov{scores} the mean-centered empirical
// covariance of per-observation score vectors. The noise variance is profiled
// as sigma2-hat = RSS / (n - effective_df). Throws numeric_error (message
// carries the condition number) when the bracket matrix is near singular.
CovarianceEstimate sandwich_covariance(const GaussianModel& model, const FitResult& fit,
                                       const PenaltySpec& family);

// Theoretical covariance {I + S}^-1 I {I + S}^-1 for information matrix I and
// diagonal penalty curvature S.
Eigen::MatrixXd asymptotic_covariance(const Eigen::MatrixXd& information,
                                      const Eigen::VectorXd& sigma_lambda);

// Penalty curvature, bias direction, and plug-in asymptotic covariance at the
// fitted active set.
AsymptoticSummary asymptotic_summary(const GaussianModel& model, const FitResult& fit,
                                     const PenaltySpec& family);

// Penalized likelihood-ratio test of H0: A beta = 0. Both the unconstrained
// and constrained problems are maximized from the same configuration; the
// statistic is referred to a chi-square with df = rows(A).
LrTestResult lr_test(const GaussianModel& model, const PenaltySpec& penalty,
                     const Eigen::MatrixXd& constraint_rows, const FitConfig& config = {});

// Upper-tail probability of the chi-square distribution with q degrees of
// freedom, via the regularized incomplete gamma function (series for small
// arguments, continued fraction otherwise). Absolute error below 1e-10.
double chisq_sf(double x, int q);

}  // namespace penlik
