#include "penlik/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "penlik/errors.hpp"

namespace penlik {

namespace {

// Column/row gather helpers (kept explicit so the active-set bookkeeping is
// independent of any particular Eigen slicing API).
Eigen::MatrixXd gather_square(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = m(idx[r], idx[c]);
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    Eigen::VectorXd out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = v[idx[r]];
    return out;
}

double response_sd(const Eigen::VectorXd& y) {
    const double mean = y.mean();
    return std::sqrt((y.array() - mean).square().mean());
}

Eigen::VectorXd resolve_lambdas(const PenaltySpec& penalty, const FitConfig& config, int p) {
    if (config.per_coordinate_lambdas) {
        const Eigen::VectorXd& l = *config.per_coordinate_lambdas;
        if (l.size() != p) throw input_error("fit: per_coordinate_lambdas length must equal p");
        for (int j = 0; j < p; ++j)
            if (!std::isfinite(l[j]) || l[j] < 0.0)
                throw input_error("fit: per_coordinate_lambdas must be finite and nonnegative");
        return l;
    }
    return Eigen::VectorXd::Constant(p, penalty.lambda);
}

double resolve_drop_threshold(const FitConfig& config, const Eigen::VectorXd& y) {
    if (config.drop_threshold) {
        if (!(*config.drop_threshold > 0.0)) throw input_error("fit: drop_threshold must be positive");
        return *config.drop_threshold;
    }
    const double sd = response_sd(y);
    return 1e-8 * (sd > 0.0 ? sd : 1.0);
}

void validate_config(const FitConfig& config, int n, int p) {
    if (config.max_iterations <= 0) throw input_error("fit: max_iterations must be positive");
    if (!(config.convergence_tol > 0.0)) throw input_error("fit: convergence_tol must be positive");
    // Least-squares initialization is ill-posed when p >= n; any explicitly
    // specified start (Ridge, Zeros, Custom) remains usable.
    if (p >= n && config.init == InitKind::OLS)
        throw input_error("fit: p >= n requires Ridge, Zeros or Custom initialization");
}

// Initial coefficients in an arbitrary coordinate system with gram = G and
// cross-moment c = (design^T y); used both for beta-space and gamma-space fits.
Eigen::VectorXd initial_point(const FitConfig& config, const Eigen::MatrixXd& gram,
                              const Eigen::VectorXd& cross, int n,
                              const Eigen::VectorXd* custom) {
    const Eigen::Index d = gram.rows();
    switch (config.init) {
        case InitKind::OLS: {
            Eigen::VectorXd b = gram.ldlt().solve(cross);
            if (!b.allFinite()) throw numeric_error("fit: singular design in least-squares initialization");
            return b;
        }
        case InitKind::Ridge: {
            if (!(config.ridge_epsilon > 0.0)) throw input_error("fit: ridge_epsilon must be positive");
            Eigen::MatrixXd g = gram;
            g.diagonal().array() += static_cast<double>(n) * config.ridge_epsilon;
            return g.ldlt().solve(cross);
        }
        case InitKind::Zeros:
            return Eigen::VectorXd::Zero(d);
        case InitKind::Custom: {
            if (custom == nullptr) throw input_error("fit: Custom initialization requires custom_init");
            if (custom->size() != d) throw input_error("fit: custom_init length mismatch");
            if (!custom->allFinite()) throw input_error("fit: custom_init must be finite");
            return *custom;
        }
    }
    throw input_error("fit: unknown initialization kind");
}

}  // namespace

double penalized_objective(const GaussianModel& model, const PenaltySpec& family,
                           const Eigen::VectorXd& lambdas, const Eigen::VectorXd& beta) {
    const int n = static_cast<int>(model.data.n());
    double pen = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        pen += penalty_value(family.with_lambda(lambdas[j]), std::abs(beta[j]));
    return log_likelihood(model, beta) - static_cast<double>(n) * pen;
}

FitResult fit_penalized(const GaussianModel& model, const PenaltySpec& penalty,
                        const FitConfig& config) {
    validate(model.data);
    validate(penalty);
    const int n = static_cast<int>(model.data.n());
    const int p = static_cast<int>(model.data.p());
    validate_config(config, n, p);

    const Eigen::MatrixXd& X = model.data.design;
    const Eigen::VectorXd& y = model.data.response;
    const double sigma2 = model.sigma2;
    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::VectorXd Xty = X.transpose() * y;

    const Eigen::VectorXd lambdas = resolve_lambdas(penalty, config, p);
    const double thr = resolve_drop_threshold(config, y);

    FitResult result;
    result.lambda_used = lambdas;
    const Eigen::VectorXd* custom = config.custom_init ? &*config.custom_init : nullptr;
    result.beta = initial_point(config, XtX, Xty, n, custom);
    result.objective_trace.push_back(penalized_objective(model, penalty, lambdas, result.beta));

    std::vector<bool> active(p, true);
    double last_delta = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        // Drop phase: coordinates below the threshold are frozen at exact zero
        // and never re-enter (the quadratic approximation weight p'/|beta|
        // diverges there for penalties singular at the origin).
        for (int j = 0; j < p; ++j) {
            if (active[j] && std::abs(result.beta[j]) < thr) {
                result.beta[j] = 0.0;
                active[j] = false;
            }
        }
        std::vector<int> idx;
        for (int j = 0; j < p; ++j)
            if (active[j]) idx.push_back(j);
        if (idx.empty()) {
            result.converged = true;
            break;
        }

        Eigen::MatrixXd M = gather_square(XtX, idx) / sigma2;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const int j = idx[r];
            const double absb = std::abs(result.beta[j]);
            M(r, r) += n * penalty_deriv(penalty.with_lambda(lambdas[j]), absb) / absb;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        Eigen::VectorXd bnew = ldlt.solve(gather(Xty, idx) / sigma2);
        if (ldlt.info() != Eigen::Success || !bnew.allFinite())
            throw numeric_error("fit: singular ridge system at iteration " + std::to_string(iter));

        last_delta = 0.0;
        bool all_above = true;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            last_delta = std::max(last_delta, std::abs(bnew[r] - result.beta[idx[r]]));
            result.beta[idx[r]] = bnew[r];
            if (std::abs(bnew[r]) < thr) all_above = false;
        }
        result.iterations = iter;
        result.objective_trace.push_back(penalized_objective(model, penalty, lambdas, result.beta));
        // Only stop once no surviving coordinate sits below the drop
        // threshold, so returned active coefficients are genuinely interior.
        if (last_delta < config.convergence_tol && all_above) {
            result.converged = true;
            break;
        }
    }

    result.active_set.clear();
    for (int j = 0; j < p; ++j)
        if (result.beta[j] != 0.0) result.active_set.push_back(j);
    result.objective = penalized_objective(model, penalty, lambdas, result.beta);

    // KKT-style residual over the differentiable (active) region:
    // max_j |score_j - n * p'(|beta_j|) * sgn(beta_j)|.
    const Eigen::VectorXd sc = score(model, result.beta);
    double res = 0.0;
    for (int j : result.active_set) {
        const double g = sc[j] - n * penalty_deriv(penalty.with_lambda(lambdas[j]),
                                                   std::abs(result.beta[j])) *
                                     (result.beta[j] > 0.0 ? 1.0 : -1.0);
        res = std::max(res, std::abs(g));
    }
    result.stationarity_residual = res;
    return result;
}

FitResult fit_oracle(const GaussianModel& model, const std::vector<int>& support) {
    validate(model.data);
    const int n = static_cast<int>(model.data.n());
    const int p = static_cast<int>(model.data.p());
    std::vector<int> idx = support;
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (int j : idx)
        if (j < 0 || j >= p) throw input_error("fit_oracle: support index out of range");

    FitResult result;
    result.beta = Eigen::VectorXd::Zero(p);
    result.lambda_used = Eigen::VectorXd::Zero(p);
    result.converged = true;
    result.iterations = 0;
    if (!idx.empty()) {
        Eigen::MatrixXd Xs(n, idx.size());
        for (std::size_t c = 0; c < idx.size(); ++c) Xs.col(c) = model.data.design.col(idx[c]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
        if (qr.rank() < static_cast<Eigen::Index>(idx.size()))
            throw numeric_error("fit_oracle: rank-deficient design submatrix");
        Eigen::VectorXd bs = qr.solve(model.data.response);
        for (std::size_t c = 0; c < idx.size(); ++c) result.beta[idx[c]] = bs[c];
    }
    for (int j = 0; j < p; ++j)
        if (result.beta[j] != 0.0) result.active_set.push_back(j);
    result.objective = log_likelihood(model, result.beta);
    result.objective_trace.push_back(result.objective);
    const Eigen::VectorXd sc = score(model, result.beta);
    double res = 0.0;
    for (int j : result.active_set) res = std::max(res, std::abs(sc[j]));
    result.stationarity_residual = res;
    return result;
}

namespace {

// Orthonormal rows spanning the null space of `rows` (q x p). The returned
// basis B is (p - rank) x p with B B^T = I and rows * B^T = 0.
Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& rows, int p) {
    if (rows.rows() == 0) return Eigen::MatrixXd::Identity(p, p);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
    const Eigen::Index rank = svd.rank();
    return svd.matrixV().rightCols(p - rank).transpose();
}

}  // namespace

FitResult fit_constrained(const GaussianModel& model, const PenaltySpec& penalty,
                          const Eigen::MatrixXd& constraint_rows, const FitConfig& config) {
    validate(model.data);
    validate(penalty);
    const int n = static_cast<int>(model.data.n());
    const int p = static_cast<int>(model.data.p());
    if (constraint_rows.rows() == 0) return fit_penalized(model, penalty, config);
    if (constraint_rows.cols() != p) throw input_error("fit_constrained: constraint width must equal p");
    if (constraint_rows.rows() >= p) throw input_error("fit_constrained: need fewer constraints than coefficients");
    if (!constraint_rows.allFinite()) throw input_error("fit_constrained: constraints must be finite");
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraint_rows);
        if (svd.rank() < constraint_rows.rows())
            throw input_error("fit_constrained: constraint rows linearly dependent");
    }
    validate_config(config, n, p - static_cast<int>(constraint_rows.rows()));

    const Eigen::MatrixXd& X = model.data.design;
    const Eigen::VectorXd& y = model.data.response;
    const double sigma2 = model.sigma2;
    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::VectorXd Xty = X.transpose() * y;
    const Eigen::VectorXd lambdas = resolve_lambdas(penalty, config, p);
    const double thr = resolve_drop_threshold(config, y);

    // Frozen coordinates are pinned by augmenting the constraint set with unit
    // rows; the null-space basis then has exact zero columns there.
    std::set<int> frozen;
    auto build_basis = [&]() {
        Eigen::MatrixXd rows(constraint_rows.rows() + frozen.size(), p);
        rows.topRows(constraint_rows.rows()) = constraint_rows;
        Eigen::Index r = constraint_rows.rows();
        for (int j : frozen) {
            rows.row(r).setZero();
            rows(r, j) = 1.0;
            ++r;
        }
        return null_space_basis(rows, p);
    };

    Eigen::MatrixXd B = build_basis();
    FitResult result;
    result.lambda_used = lambdas;

    Eigen::VectorXd gamma;
    {
        const Eigen::MatrixXd G = B * XtX * B.transpose();
        const Eigen::VectorXd c = B * Xty;
        Eigen::VectorXd projected;
        const Eigen::VectorXd* custom = nullptr;
        if (config.init == InitKind::Custom) {
            if (!config.custom_init) throw input_error("fit: Custom initialization requires custom_init");
            if (config.custom_init->size() != p) throw input_error("fit: custom_init length mismatch");
            projected = B * *config.custom_init;
            custom = &projected;
        }
        gamma = initial_point(config, G, c, n, custom);
    }
    result.beta = B.transpose() * gamma;
    result.objective_trace.push_back(penalized_objective(model, penalty, lambdas, result.beta));

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        bool refrozen = false;
        for (int j = 0; j < p; ++j) {
            if (!frozen.count(j) && std::abs(result.beta[j]) < thr) {
                frozen.insert(j);
                refrozen = true;
            }
        }
        if (refrozen) {
            B = build_basis();
            if (B.rows() == 0) {
                result.beta.setZero();
                result.converged = true;
                result.iterations = iter;
                break;
            }
            gamma = B * result.beta;
            result.beta = B.transpose() * gamma;
        }

        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
        for (int j = 0; j < p; ++j) {
            const double absb = std::abs(result.beta[j]);
            if (!frozen.count(j) && absb >= thr)
                W(j, j) = penalty_deriv(penalty.with_lambda(lambdas[j]), absb) / absb;
        }
        Eigen::MatrixXd M = B * XtX * B.transpose() / sigma2 + n * (B * W * B.transpose());
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        Eigen::VectorXd gnew = ldlt.solve(B * Xty / sigma2);
        if (ldlt.info() != Eigen::Success || !gnew.allFinite())
            throw numeric_error("fit_constrained: singular ridge system at iteration " + std::to_string(iter));

        Eigen::VectorXd bnew = B.transpose() * gnew;
        const double delta = (bnew - result.beta).cwiseAbs().maxCoeff();
        gamma = gnew;
        result.beta = bnew;
        result.iterations = iter;
        result.objective_trace.push_back(penalized_objective(model, penalty, lambdas, result.beta));

        bool all_settled = true;
        for (int j = 0; j < p; ++j)
            if (!frozen.count(j) && std::abs(result.beta[j]) < thr) all_settled = false;
        if (delta < config.convergence_tol && all_settled) {
            result.converged = true;
            break;
        }
    }

    for (int j : frozen) result.beta[j] = 0.0;  // exact zeros, not basis round-off
    result.active_set.clear();
    for (int j = 0; j < p; ++j)
        if (result.beta[j] != 0.0) result.active_set.push_back(j);
    result.objective = penalized_objective(model, penalty, lambdas, result.beta);

    // Projected stationarity: the score-minus-penalty-gradient field must
    // vanish along the constraint manifold's tangent directions.
    Eigen::VectorXd field = score(model, result.beta);
    for (int j = 0; j < p; ++j) {
        if (result.beta[j] != 0.0)
            field[j] -= n * penalty_deriv(penalty.with_lambda(lambdas[j]), std::abs(result.beta[j])) *
                        (result.beta[j] > 0.0 ? 1.0 : -1.0);
    }
    result.stationarity_residual = B.rows() == 0 ? 0.0 : (B * field).cwiseAbs().maxCoeff();
    return result;
}

}  // namespace penlik
