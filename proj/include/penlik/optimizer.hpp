#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "penlik/model.hpp"
#include "penlik/penalty.hpp"

namespace penlik {

enum class InitKind { OLS, Ridge, Zeros, Custom };

struct FitConfig {
    int max_iterations = 200;
    double convergence_tol = 1e-8;          // on max |delta beta|
    std::optional<double> drop_threshold;   // default: 1e-8 * sd(response)
    InitKind init = InitKind::OLS;
    double ridge_epsilon = 1e-6;
    std::optional<Eigen::VectorXd> custom_init;
    std::optional<Eigen::VectorXd> per_coordinate_lambdas;  // overrides spec.lambda
};

struct FitResult {
    Eigen::VectorXd beta;            // length p; exact zeros off the active set
    std::vector<int> active_set;     // sorted indices with beta_j != 0
    double objective = 0.0;          // penalized objective at beta
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd lambda_used;     // resolved per-coordinate penalty levels
    std::vector<double> objective_trace;  // objective at init and after each ridge step
    double stationarity_residual = 0.0;   // max active-coordinate gradient imbalance
};

// Penalized objective Q(beta) = L(beta) - n * sum_j p_{lambda_j}(|beta_j|).
double penalized_objective(const GaussianModel& model, const PenaltySpec& family,
                           const Eigen::VectorXd& lambdas, const Eigen::VectorXd& beta);

// Local maximizer of the penalized objective by iterative ridge: coordinates
// below the drop threshold are frozen at zero, the others solve
// (X_A^T X_A / sigma2 + n D) beta_A = X_A^T y / sigma2 with
// D = diag{p'(|beta_j|)/|beta_j|}. Majorize-minimize: monotone ascent for
// penalties concave in |theta|.
FitResult fit_penalized(const GaussianModel& model, const PenaltySpec& penalty,
                        const FitConfig& config = {});

// Unpenalized least squares restricted to the given support; all other
// coefficients are exactly zero. The objective reported is the plain
// log-likelihood (no penalty).
FitResult fit_oracle(const GaussianModel& model, const std::vector<int>& support);

// Maximizes the penalized objective subject to A beta = 0 by reparameterizing
// beta = N gamma with N an orthonormal null-space basis of A. The penalty is
// evaluated in beta coordinates each iteration; coordinates that fall below
// the drop threshold are pinned via additional constraint rows.
FitResult fit_constrained(const GaussianModel& model, const PenaltySpec& penalty,
                          const Eigen::MatrixXd& constraint_rows,
                          const FitConfig& config = {});

}  // namespace penlik
