#pragma once

#include <vector>

#include "penlik/model.hpp"
#include "penlik/optimizer.hpp"
#include "penlik/penalty.hpp"

namespace penlik {

struct GcvResult {
    double lambda = 0.0;
    double gcv = 0.0;           // (rss/n) / (1 - gamma * effective_df / n)^2
    double effective_df = 0.0;  // ridge-hat trace, see effective_df()
    double rss = 0.0;
    double gamma = 1.0;         // df inflation factor
    FitResult fit;
};

struct GcvScan {
    GcvResult best;
    std::vector<GcvResult> profile;  // one entry per evaluable grid point
};

// Effective number of parameters of the fitted smoother:
//   e = trace{ X_A (X_A^T X_A + n D)^-1 X_A^T },
// D = diag{ p'_{lambda_j}(|beta_j|) / |beta_j| } over the active set (the
// per-coordinate levels come from fit.lambda_used). Reduces to |A| when the
// penalty derivative vanishes on the active set, and to p at lambda = 0 with a
// full-rank design.
double effective_df(const GaussianModel& model, const FitResult& fit, const PenaltySpec& family);

// Fits at the given lambda and evaluates the generalized cross-validation
// score. If config.per_coordinate_lambdas is present it is treated as a vector
// of per-coordinate multipliers applied to lambda (covariate-scaled tuning);
// otherwise lambda applies uniformly. Throws numeric_error when the
// denominator 1 - gamma*e/n is not positive.
GcvResult gcv(const GaussianModel& model, const PenaltySpec& family, double lambda, double gamma,
              const FitConfig& config = {});

// Evaluates gcv over an ascending grid, warm-starting each fit from the
// previous solution. Returns the minimizer (ties broken toward smaller
// lambda) plus the profile. Grid points with a degenerate denominator are
// omitted from the profile; if every point is degenerate a numeric_error is
// raised.
GcvScan gcv_scan(const GaussianModel& model, const PenaltySpec& family,
                 const std::vector<double>& lambda_grid, double gamma,
                 const FitConfig& config = {});

// Default search grid: `points` log-spaced values spanning [1e-4, 1] times the
// spread (population standard deviation) of the OLS coefficients.
std::vector<double> default_lambda_grid(const GaussianModel& model, int points = 50);

}  // namespace penlik
