#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace penlik {

// Design matrix plus response. Rows are observations; all entries must be
// finite and dimensions must agree.
struct Dataset {
    Eigen::MatrixXd design;                 // n x p
    Eigen::VectorXd response;               // n
    std::vector<std::string> column_names;  // optional; empty or size p

    int n() const { return static_cast<int>(design.rows()); }
    int p() const { return static_cast<int>(design.cols()); }
};

// Throws input_error on empty/mismatched/non-finite data.
void validate(const Dataset& data);

// Gaussian linear model with known (or profiled) noise variance. The
// log-likelihood drops its additive constant: L(beta) = -||y - X beta||^2 / (2 sigma2).
// Everything downstream (objective differences, GCV, scores) depends only on
// residuals, so the constant is irrelevant.
struct GaussianModel {
    Dataset data;
    double sigma2 = 1.0;

    GaussianModel() = default;
    GaussianModel(Dataset d, double sigma2_in = 1.0);
};

double log_likelihood(const GaussianModel& model, const Eigen::VectorXd& beta);

// Gradient of the log-likelihood: X^T (y - X beta) / sigma2.
Eigen::VectorXd score(const GaussianModel& model, const Eigen::VectorXd& beta);

// Hessian of the log-likelihood: -X^T X / sigma2 (constant in beta).
Eigen::MatrixXd hessian(const GaussianModel& model);

// Per-observation Fisher information: X^T X / (n sigma2) = -hessian / n.
Eigen::MatrixXd information(const GaussianModel& model);

// Quadratic spline basis with truncated-power columns.
struct SplineSpec {
    std::vector<double> knots;  // strictly increasing
};

// Columns: x, x^2, then (x - knot_k)_+^2 for each knot. With K knots the
// result has 2 + K columns.
Eigen::MatrixXd spline_basis(const Eigen::VectorXd& x, const SplineSpec& spec);

// Order-statistic quantile with linear interpolation (the common "type 7"
// definition): h = (n-1)p, result = x_(floor h) + frac(h) * (x_(floor h + 1) - x_(floor h)).
double quantile_type7(std::vector<double> values, double prob);

// Knots at the 2/7, 3/7, ..., 6/7 sample quantiles of x.
SplineSpec knots_from_septile_quantiles(const Eigen::VectorXd& x);

// Per-covariate penalty levels lambda_j = base_lambda * SE_j. Throws
// input_error on nonpositive standard errors.
Eigen::VectorXd per_covariate_lambdas(double base_lambda,
                                      const Eigen::VectorXd& ols_standard_errors);

// CSV ingestion. With header=true the first row supplies column names. The
// response column is selected by name (requires a header) or by 1-based
// position. Non-numeric cells raise input_error naming the row and column.
Dataset read_csv(std::istream& in, bool header, const std::string& response_selector);
Dataset read_csv_file(const std::string& path, bool header,
                      const std::string& response_selector);

}  // namespace penlik
