#include "penlik/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "penlik/errors.hpp"
#include "penlik/tuning.hpp"

namespace penlik {

CovarianceEstimate sandwich_covariance(const GaussianModel& model, const FitResult& fit,
                                       const PenaltySpec& family) {
    validate(family);
    if (fit.active_set.empty())
        throw input_error("sandwich_covariance: empty active set (no coefficients to cover)");
    const int n = model.data.n();
    const Eigen::Index s = static_cast<Eigen::Index>(fit.active_set.size());

    Eigen::MatrixXd Xa(n, s);
    for (Eigen::Index c = 0; c < s; ++c) Xa.col(c) = model.data.design.col(fit.active_set[c]);
    const Eigen::VectorXd residual = model.data.response - model.data.design * fit.beta;

    const double edf = effective_df(model, fit, family);
    if (!(n - edf > 0.0)) throw numeric_error("sandwich_covariance: effective df exhausts the sample");
    const double sigma2_hat = residual.squaredNorm() / (n - edf);
    if (!(sigma2_hat > 0.0)) throw numeric_error("sandwich_covariance: zero residual variance");

    // Bracket: Hessian of the penalized log-likelihood on the active set.
    Eigen::MatrixXd bracket = -(Xa.transpose() * Xa) / sigma2_hat;
    for (Eigen::Index c = 0; c < s; ++c) {
        const int j = fit.active_set[c];
        bracket(c, c) -= n * penalty_second_deriv(family.with_lambda(fit.lambda_used[j]),
                                                  std::abs(fit.beta[j]));
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bracket, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(s - 1);
    const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(condition < 1e12)) {
        std::ostringstream msg;
        msg << "sandwich_covariance: singular bracket matrix (condition number " << condition << ")";
        throw numeric_error(msg.str());
    }
    const Eigen::MatrixXd bracket_inv = svd.solve(Eigen::MatrixXd::Identity(s, s));

    // Mean-centered empirical covariance of the per-observation scores
    // s_i = x_i * r_i / sigma2-hat.
    Eigen::MatrixXd scores = Xa.array().colwise() * (residual.array() / sigma2_hat);
    Eigen::RowVectorXd mean_score = scores.colwise().mean();
    Eigen::MatrixXd cov = scores.transpose() * scores / static_cast<double>(n) -
                          mean_score.transpose() * mean_score;

    CovarianceEstimate out;
    out.active_indices = fit.active_set;
    out.matrix = static_cast<double>(n) * (bracket_inv * cov * bracket_inv);
    out.matrix = ((out.matrix + out.matrix.transpose()) / 2.0).eval();
    out.standard_errors = out.matrix.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.sigma2_hat = sigma2_hat;
    out.bracket_condition = condition;
    return out;
}

Eigen::MatrixXd asymptotic_covariance(const Eigen::MatrixXd& information,
                                      const Eigen::VectorXd& sigma_lambda) {
    if (information.rows() != information.cols())
        throw input_error("asymptotic_covariance: information matrix must be square");
    if (sigma_lambda.size() != information.rows())
        throw input_error("asymptotic_covariance: sigma_lambda size mismatch");
    Eigen::MatrixXd outer = information;
    outer.diagonal() += sigma_lambda;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(outer);
    if (!lu.isInvertible()) throw numeric_error("asymptotic_covariance: singular I + Sigma_lambda");
    const Eigen::MatrixXd inv = lu.inverse();
    return inv * information * inv;
}

AsymptoticSummary asymptotic_summary(const GaussianModel& model, const FitResult& fit,
                                     const PenaltySpec& family) {
    validate(family);
    if (fit.active_set.empty()) throw input_error("asymptotic_summary: empty active set");
    const Eigen::Index s = static_cast<Eigen::Index>(fit.active_set.size());
    AsymptoticSummary out;
    out.active_indices = fit.active_set;
    out.sigma_lambda.resize(s);
    out.bias_vector.resize(s);
    for (Eigen::Index c = 0; c < s; ++c) {
        const int j = fit.active_set[c];
        const PenaltySpec spec = family.with_lambda(fit.lambda_used[j]);
        const double absb = std::abs(fit.beta[j]);
        const double sgn = fit.beta[j] > 0.0 ? 1.0 : -1.0;
        out.sigma_lambda[c] = penalty_second_deriv(spec, absb);
        out.bias_vector[c] = penalty_deriv(spec, absb) * sgn;
    }
    const Eigen::MatrixXd info_full = information(model);
    Eigen::MatrixXd info_active(s, s);
    for (Eigen::Index r = 0; r < s; ++r)
        for (Eigen::Index c = 0; c < s; ++c)
            info_active(r, c) = info_full(fit.active_set[r], fit.active_set[c]);
    out.asymptotic_cov = asymptotic_covariance(info_active, out.sigma_lambda);
    return out;
}

LrTestResult lr_test(const GaussianModel& model, const PenaltySpec& penalty,
                     const Eigen::MatrixXd& constraint_rows, const FitConfig& config) {
    if (constraint_rows.rows() == 0) throw input_error("lr_test: need at least one constraint row");
    const FitResult unconstrained = fit_penalized(model, penalty, config);
    const FitResult constrained = fit_constrained(model, penalty, constraint_rows, config);

    LrTestResult out;
    out.df = static_cast<int>(constraint_rows.rows());
    out.unconstrained_objective = unconstrained.objective;
    out.constrained_objective = constrained.objective;
    out.unconstrained_active = unconstrained.active_set;
    out.constrained_active = constrained.active_set;
    double t = 2.0 * (unconstrained.objective - constrained.objective);
    if (t < 0.0) {
        out.local_optimum_warning = t < -1e-9;
        t = 0.0;
    }
    out.statistic = t;
    out.p_value = chisq_sf(out.statistic, out.df);
    return out;
}

namespace {

// Regularized lower incomplete gamma P(a, x) by power series, valid for
// x < a + 1 where the series converges quickly.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 1000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
// fraction, valid for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chisq_sf(double x, int q) {
    if (q <= 0) throw input_error("chisq_sf: degrees of freedom must be positive");
    if (!(x >= 0.0)) throw input_error("chisq_sf: argument must be nonnegative");
    if (x == 0.0) return 1.0;
    const double a = 0.5 * q;
    const double z = 0.5 * x;
    double sf = (z < a + 1.0) ? 1.0 - gamma_p_series(a, z) : gamma_q_continued_fraction(a, z);
    return std::min(1.0, std::max(0.0, sf));
}

}  // namespace penlik
