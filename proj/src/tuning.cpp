#include "penlik/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "penlik/errors.hpp"

namespace penlik {

namespace {

FitConfig lambda_adjusted(const FitConfig& config, double lambda) {
    FitConfig cfg = config;
    if (config.per_coordinate_lambdas)
        cfg.per_coordinate_lambdas = (lambda * config.per_coordinate_lambdas->array()).matrix();
    return cfg;
}

// Builds the GCV point from an already-computed fit (shared by gcv and the
// warm-started scan, which must keep the fit even when the df degenerates).
GcvResult score_fit(const GaussianModel& model, const PenaltySpec& family, double lambda,
                    double gamma, FitResult fit) {
    const double n = static_cast<double>(model.data.n());
    GcvResult point;
    point.lambda = lambda;
    point.gamma = gamma;
    point.effective_df = effective_df(model, fit, family);
    point.rss = (model.data.response - model.data.design * fit.beta).squaredNorm();
    const double den = 1.0 - gamma * point.effective_df / n;
    if (!(den > 0.0))
        throw numeric_error("gcv: degenerate effective df (1 - gamma*e/n <= 0)");
    point.gcv = (point.rss / n) / (den * den);
    point.fit = std::move(fit);
    return point;
}

}  // namespace

double effective_df(const GaussianModel& model, const FitResult& fit, const PenaltySpec& family) {
    validate(family);
    const int n = model.data.n();
    if (fit.active_set.empty()) return 0.0;
    const std::size_t s = fit.active_set.size();
    Eigen::MatrixXd G(s, s);
    for (std::size_t r = 0; r < s; ++r)
        for (std::size_t c = 0; c < s; ++c)
            G(r, c) = model.data.design.col(fit.active_set[r]).dot(model.data.design.col(fit.active_set[c]));
    Eigen::MatrixXd M = G;
    for (std::size_t r = 0; r < s; ++r) {
        const int j = fit.active_set[r];
        const double absb = std::abs(fit.beta[j]);
        M(r, r) += n * penalty_deriv(family.with_lambda(fit.lambda_used[j]), absb) / absb;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    Eigen::MatrixXd solved = ldlt.solve(G);
    if (ldlt.info() != Eigen::Success || !solved.allFinite())
        throw numeric_error("effective_df: singular ridge matrix");
    return solved.trace();
}

GcvResult gcv(const GaussianModel& model, const PenaltySpec& family, double lambda, double gamma,
              const FitConfig& config) {
    if (!std::isfinite(lambda) || lambda < 0.0) throw input_error("gcv: lambda must be finite and nonnegative");
    if (!std::isfinite(gamma) || gamma <= 0.0) throw input_error("gcv: gamma must be finite and positive");
    FitResult fit = fit_penalized(model, family.with_lambda(lambda), lambda_adjusted(config, lambda));
    return score_fit(model, family, lambda, gamma, std::move(fit));
}

GcvScan gcv_scan(const GaussianModel& model, const PenaltySpec& family,
                 const std::vector<double>& lambda_grid, double gamma, const FitConfig& config) {
    if (lambda_grid.empty()) throw input_error("gcv_scan: empty lambda grid");
    if (!std::isfinite(gamma) || gamma <= 0.0) throw input_error("gcv_scan: gamma must be finite and positive");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!std::isfinite(lambda_grid[i]) || lambda_grid[i] < 0.0)
            throw input_error("gcv_scan: grid values must be finite and nonnegative");
        if (i > 0 && lambda_grid[i] < lambda_grid[i - 1])
            throw input_error("gcv_scan: grid must be sorted ascending");
    }

    GcvScan scan;
    Eigen::VectorXd warm;
    bool have_warm = false;
    std::size_t best_index = 0;
    for (double lambda : lambda_grid) {
        FitConfig cfg = lambda_adjusted(config, lambda);
        if (have_warm) {
            cfg.init = InitKind::Custom;
            cfg.custom_init = warm;
        }
        FitResult fit = fit_penalized(model, family.with_lambda(lambda), cfg);
        warm = fit.beta;
        have_warm = true;
        try {
            scan.profile.push_back(score_fit(model, family, lambda, gamma, std::move(fit)));
        } catch (const numeric_error&) {
            continue;  // degenerate denominator at this grid point
        }
        // Strict comparison keeps the earlier (smaller) lambda on ties.
        if (scan.profile.size() > 1 && scan.profile.back().gcv < scan.profile[best_index].gcv)
            best_index = scan.profile.size() - 1;
    }
    if (scan.profile.empty()) throw numeric_error("gcv_scan: all grid points degenerate");
    scan.best = scan.profile[best_index];
    return scan;
}

std::vector<double> default_lambda_grid(const GaussianModel& model, int points) {
    if (points < 2) throw input_error("default_lambda_grid: need at least two points");
    validate(model.data);
    const Eigen::MatrixXd& X = model.data.design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(X.transpose() * X);
    Eigen::VectorXd beta = ldlt.solve(X.transpose() * model.data.response);
    if (ldlt.info() != Eigen::Success || !beta.allFinite())
        throw numeric_error("default_lambda_grid: singular design");
    const double mean = beta.mean();
    double scale = std::sqrt((beta.array() - mean).square().mean());
    if (!(scale > 0.0)) scale = std::max(1.0, beta.cwiseAbs().maxCoeff());
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = scale * std::pow(10.0, -4.0 + 4.0 * i / (points - 1));
    return grid;
}

}  // namespace penlik
